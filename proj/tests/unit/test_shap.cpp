#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "oracles.hpp"
#include "tarml/data/schema.hpp"
#include "tarml/error.hpp"
#include "tarml/shap.hpp"

namespace tarml::shap {
namespace {

using models::LsBoostModel;
using models::RegressionTree;
using models::TreeNode;

int add_subtree(RegressionTree& t, Rng& rng, std::size_t features, int depth) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (depth == 0 || rng.uniform() < 0.2) {
    t.nodes[id].value = rng.uniform(-1.0, 1.0);
    return id;
  }
  t.nodes[id].feature = static_cast<int>(rng.below(features));
  t.nodes[id].threshold = rng.uniform(0.2, 0.8);
  const int l = add_subtree(t, rng, features, depth - 1);
  const int r = add_subtree(t, rng, features, depth - 1);
  t.nodes[id].left = l;
  t.nodes[id].right = r;
  return id;
}

LsBoostModel random_model(Rng& rng, std::size_t features, std::size_t trees, int depth) {
  LsBoostModel m;
  m.initial = rng.uniform(-0.5, 0.5);
  m.learning_rate = rng.uniform(0.1, 1.0);
  for (std::size_t k = 0; k < trees; ++k) {
    RegressionTree t;
    add_subtree(t, rng, features, depth);
    m.trees.push_back(t);
  }
  return m;
}

TEST(TreeShap, MatchesSubsetEnumerationOnToyModels) {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + rng.below(6);
    const auto m = random_model(rng, d, 1 + rng.below(3), 1 + static_cast<int>(rng.below(3)));
    const auto bg = test::random_matrix(1 + rng.below(6), d, rng);
    const auto x = test::random_matrix(1, d, rng);
    const auto e = shap_tree(m, x.row(0), bg);
    const auto expect = oracle::interventional_shapley([&](auto z) { return m.predict(z); }, x.row(0), bg);
    for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::abs(e.values[j] - expect[j]));
    EXPECT_NEAR(e.total(), m.predict(x.row(0)), 1e-12);
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(TreeShap, ExhaustiveSamplingAgrees) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(rng, 3, 2, 3);
    const auto bg = test::random_matrix(4, 3, rng);
    const auto x = test::random_matrix(1, 3, rng);
    SamplingOptions o;
    o.exhaustive = true;
    const auto a = shap_tree(m, x.row(0), bg);
    const auto b = shap_sampling([&](auto z) { return m.predict(z); }, x.row(0), bg, o);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.values[j], b.values[j], 1e-9);
    EXPECT_NEAR(a.base, b.base, 1e-12);
  }
}

TEST(TreeShap, StumpHandExample) {
  LsBoostModel m;
  m.learning_rate = 1.0;
  RegressionTree t;
  t.nodes = {TreeNode{1, 0.0, 1, 2, 0.0, 2}, TreeNode{-1, 0, -1, -1, -1.0, 1}, TreeNode{-1, 0, -1, -1, 1.0, 1}};
  m.trees = {t};
  const Matrix bg(2, 3, std::vector<double>{0.3, -1.0, 0.7, 0.3, 1.0, 0.7});
  const std::vector<double> x{0.9, 1.0, -0.2};
  const auto e = shap_tree(m, x, bg);
  EXPECT_DOUBLE_EQ(e.base, 0.0);
  EXPECT_DOUBLE_EQ(e.values[1], 1.0);
  EXPECT_DOUBLE_EQ(e.values[0], 0.0);
  EXPECT_DOUBLE_EQ(e.values[2], 0.0);
}

TEST(TreeShap, ClonedFeatureGetsNothing) {
  LsBoostModel m;
  m.learning_rate = 1.0;
  RegressionTree t;
  t.nodes = {TreeNode{0, 0.5, 1, 2, 0.0, 2}, TreeNode{-1, 0, -1, -1, 0.0, 1}, TreeNode{-1, 0, -1, -1, 3.0, 1}};
  m.trees = {t};
  Rng rng(3);
  Matrix bg(20, 2);
  for (std::size_t r = 0; r < 20; ++r) bg(r, 0) = bg(r, 1) = rng.uniform();
  const std::vector<double> x{0.9, 0.9};
  const auto e = shap_tree(m, x, bg);
  EXPECT_EQ(e.values[1], 0.0);
  EXPECT_NEAR(e.values[0], 3.0 - e.base, 1e-12);
  SamplingOptions o;
  o.exhaustive = true;
  const auto s = shap_sampling([&](auto z) { return m.predict(z); }, x, bg, o);
  EXPECT_NEAR(s.values[0], e.values[0], 1e-12);
  EXPECT_NEAR(s.values[1], 0.0, 1e-12);
}

models::Regressor fitted(const models::RegressorConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const auto x = test::random_matrix(80, 11, rng);
  std::vector<double> y;
  for (std::size_t r = 0; r < x.rows; ++r) y.push_back(0.6 * x(r, 8) + 0.2 * x(r, 0) * x(r, 6) + 0.1 * x(r, 3));
  models::ModelScaling scaling;
  for (std::size_t f = 0; f < 11; ++f) scaling.features.push_back({0.0, 10.0 + f});
  scaling.target = {5.0, 95.0};
  return models::train_regressor(cfg, x, y, scaling, data::FeatureSchema::canonical().fingerprint(), "conversion");
}

Matrix original_rows(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, 11);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < 11; ++f) m(r, f) = rng.uniform(0.0, 10.0 + f);
  }
  return m;
}

TEST(Shap, ConstantModelAttributesNothing) {
  const auto m = fitted(models::LsBoostConfig{0, 5, 1, 0.5}, 1);
  const auto bg = original_rows(10, 2);
  const auto x = original_rows(1, 3);
  const auto e = explain(m, x.row(0), bg);
  for (double v : e.values) EXPECT_EQ(v, 0.0);
  EXPECT_DOUBLE_EQ(e.base, m.predict(x.row(0)).value);
  const auto s = shap_sampling(m, x.row(0), bg, {});
  for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(Shap, EfficiencyForEveryFamily) {
  const std::vector<models::RegressorConfig> configs{models::LsBoostConfig{6, 3, 80, 0.3},
                                                     models::GprConfig{1.0, 0.5, {}, 1e-4},
                                                     models::MlpConfig{4, models::Activation::kTanh, 200, 0.3, 2}};
  const auto bg = original_rows(16, 4);
  const auto xs = original_rows(10, 5);
  SamplingOptions o;
  o.permutations = 64;
  for (const auto& c : configs) {
    const auto m = fitted(c, 6);
    for (std::size_t r = 0; r < xs.rows; ++r) {
      const auto e = explain(m, xs.row(r), bg, o);
      EXPECT_NEAR(e.total(), m.predict(xs.row(r)).value, 1e-9);
      EXPECT_EQ(e.target, "conversion");
    }
  }
  EXPECT_THROW(shap_tree(fitted(configs[1], 6), xs.row(0), bg), Error);
}

TEST(Shap, SamplingVarianceShrinksWithMorePermutations) {
  const auto m = fitted(models::GprConfig{1.0, 0.3, {}, 1e-4}, 9);
  const auto bg = original_rows(40, 10);
  const auto x = original_rows(1, 11);
  auto variance_at = [&](std::size_t perms) {
    std::vector<double> est;
    for (std::uint64_t rep = 0; rep < 30; ++rep) {
      SamplingOptions o;
      o.permutations = perms;
      o.seed = 100 + rep;
      est.push_back(shap_sampling(m, x.row(0), bg, o).values[8]);
    }
    const double mean = std::accumulate(est.begin(), est.end(), 0.0) / 30.0;
    double v = 0.0;
    for (double e : est) v += (e - mean) * (e - mean);
    return v / 29.0;
  };
  EXPECT_LT(variance_at(200), variance_at(100));
}

TEST(Shap, InactiveFeaturesStayAtInstance) {
  const auto m = fitted(models::LsBoostConfig{6, 3, 40, 0.3}, 12);
  const auto bg = original_rows(5, 13);
  const auto x = original_rows(1, 14);
  SamplingOptions o;
  o.exhaustive = true;
  o.active = {0, 6, 8};
  const auto e = shap_sampling(m, x.row(0), bg, o);
  for (std::size_t f = 0; f < 11; ++f) {
    if (f != 0 && f != 6 && f != 8) EXPECT_EQ(e.values[f], 0.0);
  }
  EXPECT_NEAR(e.total(), m.predict(x.row(0)).value, 1e-9);
  // The exact game restricted to the active features.
  auto f = [&](std::span<const double> z) {
    std::vector<double> full(x.row(0).begin(), x.row(0).end());
    full[0] = z[0];
    full[6] = z[1];
    full[8] = z[2];
    return m.predict(full).value;
  };
  Matrix bg3(bg.rows, 3);
  for (std::size_t r = 0; r < bg.rows; ++r) {
    bg3(r, 0) = bg(r, 0);
    bg3(r, 1) = bg(r, 6);
    bg3(r, 2) = bg(r, 8);
  }
  const std::vector<double> x3{x(0, 0), x(0, 6), x(0, 8)};
  const auto expect = oracle::interventional_shapley(f, x3, bg3);
  EXPECT_NEAR(e.values[0], expect[0], 1e-9);
  EXPECT_NEAR(e.values[6], expect[1], 1e-9);
  EXPECT_NEAR(e.values[8], expect[2], 1e-9);
}

TEST(Shap, BatchSerialEqualsParallel) {
  const auto m = fitted(models::LsBoostConfig{6, 3, 60, 0.3}, 15);
  const auto bg = original_rows(30, 16);
  const auto xs = original_rows(25, 17);
  const auto a = explain_batch(m, xs, bg, Exec::kSerial);
  const auto b = explain_batch(m, xs, bg, Exec::kParallel);
  ASSERT_EQ(a.size(), 25u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
}

TEST(Shap, EmptyBackgroundRejected) {
  const auto m = fitted(models::LsBoostConfig{2, 3, 5, 0.3}, 1);
  EXPECT_THROW(explain(m, original_rows(1, 1).row(0), Matrix(0, 11)), Error);
}

TEST(Background, CapKeepsOrder) {
  const auto rows = original_rows(600, 18);
  const auto bg = select_background(rows, 256, 3);
  EXPECT_EQ(bg.rows, 256u);
  std::size_t next = 0;
  for (std::size_t r = 0; r < bg.rows; ++r) {
    while (next < rows.rows && rows(next, 0) != bg(r, 0)) ++next;
    ASSERT_LT(next, rows.rows);
    ++next;
  }
  EXPECT_EQ(select_background(rows, 256, 3), bg);
  EXPECT_EQ(select_background(original_rows(10, 1), 256, 3), original_rows(10, 1));
}

ShapExplanation with_values(std::vector<double> v) {
  ShapExplanation e;
  e.values = std::move(v);
  e.instance.assign(e.values.size(), 0.0);
  return e;
}

TEST(Summarize, SingleFeatureTakesItsGroup) {
  const auto schema = data::FeatureSchema::canonical();
  std::vector<double> v(11, 0.0);
  v[0] = 1.0;
  const std::vector<ShapExplanation> es{with_values(v)};
  const auto s = summarize(es, schema);
  EXPECT_EQ(s.order.front(), 0u);
  EXPECT_DOUBLE_EQ(*s.catalyst_pct, 100.0);
  EXPECT_DOUBLE_EQ(*s.operating_pct, 0.0);
}

TEST(Summarize, EqualMagnitudesFollowGroupSizes) {
  const auto schema = data::FeatureSchema::canonical();
  std::vector<double> v(11, -0.5);
  for (std::size_t f = 0; f < 11; f += 2) v[f] = 0.5;
  const std::vector<ShapExplanation> es{with_values(v), with_values(v)};
  const auto s = summarize(es, schema);
  EXPECT_NEAR(*s.catalyst_pct, 100.0 * 4.0 / 11.0, 1e-12);
  EXPECT_NEAR(*s.operating_pct, 100.0 * 7.0 / 11.0, 1e-12);
  std::vector<std::size_t> identity(11);
  std::iota(identity.begin(), identity.end(), 0u);
  EXPECT_EQ(s.order, identity);
  EXPECT_THROW(summarize(std::vector<ShapExplanation>{}, schema), Error);
}

TEST(Summarize, RankingByMaxAbs) {
  const auto schema = data::FeatureSchema::canonical();
  std::vector<double> a(11, 0.0), b(11, 0.0);
  a[3] = -4.0;
  a[8] = 1.0;
  b[8] = 3.0;
  b[5] = 2.0;
  const std::vector<ShapExplanation> es{with_values(a), with_values(b)};
  const auto s = summarize(es, schema);
  EXPECT_EQ(s.order[0], 3u);
  EXPECT_EQ(s.order[1], 8u);
  EXPECT_EQ(s.order[2], 5u);
  EXPECT_DOUBLE_EQ(s.mean_abs[8], 2.0);
  const auto csv = summary_to_csv(s, schema);
  EXPECT_NE(csv.find("1,Pore volume (cm3/g),catalyst-property,4,2"), std::string::npos) << csv;
  const auto zero = summarize(std::vector<ShapExplanation>{with_values(std::vector<double>(11, 0.0))}, schema);
  EXPECT_FALSE(zero.operating_pct.has_value());
}

}  // namespace
}  // namespace tarml::shap
