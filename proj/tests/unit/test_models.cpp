#include <gtest/gtest.h>

#include <bit>
#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "tarml/error.hpp"
#include "tarml/models/config_io.hpp"
#include "tarml/models/kernels.hpp"
#include "tarml/models/regressor.hpp"

namespace tarml::models {
namespace {

std::vector<double> column_target(const Matrix& x, const std::function<double(std::span<const double>)>& f) {
  std::vector<double> y;
  for (std::size_t r = 0; r < x.rows; ++r) y.push_back(f(x.row(r)));
  return y;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

TEST(Tree, SingleSplitMatchesBruteForce) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = test::random_matrix(40, 4, rng);
    std::vector<double> y;
    for (std::size_t r = 0; r < x.rows; ++r) y.push_back(rng.normal() + (x(r, trial % 4) > 0.5 ? 2.0 : 0.0));
    const SortedColumns sorted(x);
    const auto tree = grow_tree(x, sorted, y, {1, 3});
    const auto oracle = oracle::best_stump(x, y, 3);
    ASSERT_EQ(tree.nodes[0].feature, oracle.feature);
    EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, oracle.threshold);
    double sse = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) sse += std::pow(y[r] - tree.predict(x.row(r)), 2);
    EXPECT_NEAR(sse, oracle.sse, 1e-9);
  }
}

TEST(Tree, RespectsSplitBudgetAndLeafFloor) {
  Rng rng(4);
  const auto x = test::random_matrix(200, 3, rng);
  const auto y = column_target(x, [](auto r) { return std::sin(6 * r[0]) + r[1] * r[2]; });
  const SortedColumns sorted(x);
  std::vector<int> leaf_of_row;
  const auto tree = grow_tree(x, sorted, y, {7, 9}, &leaf_of_row);
  EXPECT_EQ(tree.split_count(), 7u);
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) EXPECT_GE(n.count, 9u);
  }
  for (std::size_t r = 0; r < x.rows; ++r) EXPECT_EQ(leaf_of_row[r], tree.leaf_index(x.row(r)));
}

TEST(LsBoost, ConstantModelPredictsMean) {
  Rng rng(2);
  const auto x = test::random_matrix(30, 11, rng);
  const auto y = column_target(x, [](auto r) { return r[0]; });
  const auto m = train_lsboost({0, 5, 1, 0.5}, x, y);
  for (int i = 0; i < 10; ++i) {
    const auto q = test::random_matrix(1, 11, rng);
    EXPECT_NEAR(m.predict(q.row(0)), mean_of(y), 1e-15);
  }
}

TEST(LsBoost, StepFunctionSeparatedByOneSplit) {
  Rng rng(8);
  const auto x = test::random_matrix(60, 3, rng);
  const auto y = column_target(x, [](auto r) { return r[1] > 0.4 ? 0.9 : 0.1; });
  const auto m = train_lsboost({1, 1, 1, 1.0}, x, y);
  EXPECT_LT(m.training_mse.back(), 1e-20);
}

TEST(LsBoost, PaperConfigurationEchoedInArtifact) {
  Rng rng(3);
  const auto x = test::random_matrix(40, 11, rng);
  const auto y = column_target(x, [](auto r) { return r[0] * r[1]; });
  const LsBoostConfig cfg{6, 5, 250, 0.295};
  const auto reg = train_regressor(cfg, x, y, ModelScaling::identity(11));
  EXPECT_EQ(std::get<LsBoostConfig>(reg.config()), cfg);
  const auto j = config_to_json(reg.config());
  EXPECT_EQ(j.at("max_splits"), 6);
  EXPECT_EQ(j.at("min_leaf"), 5);
  EXPECT_EQ(j.at("cycles"), 250);
  EXPECT_EQ(j.at("learning_rate"), 0.295);
  EXPECT_EQ(describe(cfg), "lsboost max_splits=6 min_leaf=5 cycles=250 learning_rate=0.295");
}

TEST(LsBoost, TrainingLossNonIncreasing) {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + rng.below(80);
    const auto x = test::random_matrix(n, 1 + rng.below(6), rng);
    std::vector<double> y;
    for (std::size_t r = 0; r < n; ++r) y.push_back(rng.uniform());
    const LsBoostConfig cfg{static_cast<int>(1 + rng.below(8)), static_cast<int>(1 + rng.below(5)), 60,
                            rng.uniform(0.05, 1.0)};
    const auto m = train_lsboost(cfg, x, y);
    ASSERT_EQ(m.training_mse.size(), 61u);
    for (std::size_t i = 1; i < m.training_mse.size(); ++i) EXPECT_LE(m.training_mse[i], m.training_mse[i - 1]);
  }
}

TEST(LsBoost, StagedPredictionAccumulates) {
  Rng rng(5);
  const auto x = test::random_matrix(50, 2, rng);
  const auto y = column_target(x, [](auto r) { return r[0] + r[1]; });
  const auto m = train_lsboost({3, 2, 5, 0.3}, x, y);
  const auto q = x.row(7);
  double f = m.initial;
  for (std::size_t t = 0; t < m.trees.size(); ++t) f += m.learning_rate * m.trees[t].predict(q);
  EXPECT_DOUBLE_EQ(m.predict(q), f);
  EXPECT_DOUBLE_EQ(m.predict_staged(q, 0), m.initial);
}

TEST(LsBoost, RejectsBadInput) {
  Rng rng(5);
  const auto x = test::random_matrix(5, 2, rng);
  const std::vector<double> y(5, 0.5);
  EXPECT_THROW(train_lsboost({1, 3, 1, 0.5}, x, y), Error);  // 5 < 2 * 3
  EXPECT_THROW(train_lsboost({1, 1, 0, 0.5}, x, y), Error);
  EXPECT_THROW(train_lsboost({1, 1, 1, 1.5}, x, y), Error);
  auto bad = x;
  bad(0, 0) = NAN;
  EXPECT_THROW(train_lsboost({1, 1, 1, 0.5}, bad, y), Error);
}

TEST(Gpr, InterpolatesSinglePoint) {
  const Matrix x(1, 1, std::vector<double>{0.0});
  const std::vector<double> y{1.0};
  const auto m = train_gpr({1.0, 0.5, {}, 1e-8}, x, y);
  const std::vector<double> q{0.0};
  EXPECT_NEAR(m.predict_mean(q), 1.0, 1e-6);
}

TEST(Gpr, TwoPointClosedForm) {
  const Matrix x(2, 1, std::vector<double>{0.2, 0.7});
  const std::vector<double> y{0.3, 0.9};
  const GprConfig cfg{1.3, 0.4, {}, 1e-3};
  const auto m = train_gpr(cfg, x, y);
  for (double q : {0.45, 0.2, 0.0, 1.3}) {
    const auto expect = oracle::gp_two_points(0.2, 0.3, 0.7, 0.9, q, 1.3, 0.4, 1e-3);
    const std::vector<double> p{q};
    const auto got = m.predict(p);
    EXPECT_NEAR(got.mean, expect.mean, 1e-10);
    EXPECT_NEAR(got.variance, expect.variance, 1e-10);
  }
}

TEST(Gpr, RevertsToPriorFarAway) {
  Rng rng(7);
  const auto x = test::random_matrix(20, 2, rng);
  const auto y = column_target(x, [](auto r) { return r[0] - r[1]; });
  const auto m = train_gpr({0.7, 0.1, {}, 1e-4}, x, y);
  const std::vector<double> far{50.0, -50.0};
  const auto p = m.predict(far);
  EXPECT_NEAR(p.mean, mean_of(y), 1e-12);
  EXPECT_NEAR(p.variance, 0.7, 1e-12);
}

TEST(Gpr, VarianceNonNegative) {
  Rng rng(17);
  const auto x = test::random_matrix(40, 3, rng);
  const auto y = column_target(x, [](auto r) { return std::cos(3 * r[0]) + r[2]; });
  const auto m = train_gpr({1.0, 0.3, {}, 1e-6}, x, y);
  for (int i = 0; i < 1000; ++i) {
    const auto q = test::random_matrix(1, 3, rng, -0.5, 1.5);
    EXPECT_GE(m.predict(q.row(0)).variance, 0.0);
  }
}

TEST(Gpr, DuplicateRowsNeedJitter) {
  const Matrix x(3, 1, std::vector<double>{0.5, 0.5, 0.5});
  const std::vector<double> y{0.1, 0.2, 0.3};
  const auto m = train_gpr({1.0, 1.0, {}, 1e-300}, x, y);
  EXPECT_GT(m.jitter(), 0.0);
  EXPECT_TRUE(std::isfinite(m.predict_mean(std::vector<double>{0.5})));
}

TEST(Kernels, GramSerialEqualsParallel) {
  Rng rng(1);
  const auto x = test::random_matrix(70, 5, rng);
  const std::vector<double> inv(5, 4.0);
  const auto a = gram_matrix(x, inv, 1.5, Exec::kSerial);
  const auto b = gram_matrix(x, inv, 1.5, Exec::kParallel);
  EXPECT_TRUE(a == b);
  EXPECT_DOUBLE_EQ(a(3, 9), squared_exponential(x.row(3), x.row(9), inv, 1.5));
  EXPECT_DOUBLE_EQ(a(4, 4), 1.5);
}

TEST(Mlp, GradientMatchesCentralDifferences) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t inputs = 1 + rng.below(4), hidden = 1 + rng.below(5), n = 3 + rng.below(10);
    const auto x = test::random_matrix(n, inputs, rng);
    std::vector<double> y;
    for (std::size_t r = 0; r < n; ++r) y.push_back(rng.uniform());
    MlpConfig cfg;
    cfg.hidden = static_cast<int>(hidden);
    cfg.activation = trial % 2 ? Activation::kLogistic : Activation::kTanh;
    cfg.seed = static_cast<std::uint64_t>(trial);
    auto shape = init_mlp(cfg, inputs, 0.3);
    for (auto& p : shape.params) p = rng.uniform(-1.5, 1.5);
    std::vector<double> grad(shape.params.size());
    mlp_loss(shape, shape.params, x, y, grad);
    const auto fd = oracle::central_difference(
        [&](std::span<const double> p) { return mlp_loss(shape, p, x, y, {}); }, shape.params, 1e-5);
    double worst = 0.0;
    for (std::size_t k = 0; k < grad.size(); ++k) {
      worst = std::max(worst, std::abs(grad[k] - fd[k]) / std::max(1e-8, std::max(std::abs(grad[k]), std::abs(fd[k]))));
    }
    EXPECT_LT(worst, 1e-4) << "trial " << trial;
  }
}

TEST(Mlp, LearnsLinearTarget) {
  Rng rng(12);
  const auto x = test::random_matrix(80, 3, rng);
  const auto y = column_target(x, [](auto r) { return 0.2 + 0.3 * r[0] - 0.2 * r[1] + 0.1 * r[2]; });
  MlpConfig cfg;
  cfg.hidden = 4;
  cfg.epochs = 4000;
  cfg.step_size = 0.2;
  const auto m = train_mlp(cfg, x, y);
  EXPECT_LT(m.training_mse, 1e-3);
  EXPECT_EQ(train_mlp(cfg, x, y), m);
}

TEST(Mlp, ConfigErrors) {
  MlpConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.hidden = 0;
  EXPECT_THROW(validate(cfg), Error);
  Rng rng(1);
  const auto x = test::random_matrix(10, 2, rng, -100, 100);
  std::vector<double> y(10, 1e6);
  cfg = {};
  cfg.step_size = 1e6;
  try {
    train_mlp(cfg, x, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("step size"), std::string::npos);
  }
}

Regressor trained(const RegressorConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const auto x = test::random_matrix(60, 11, rng);
  const auto y = column_target(x, [](auto r) { return 0.5 * r[0] + 0.3 * r[8] * r[8] + 0.1 * r[3]; });
  ModelScaling scaling;
  for (std::size_t f = 0; f < 11; ++f) scaling.features.push_back({10.0 * f, 10.0 * f + 5.0 + f});
  scaling.target = {0.0, 100.0};
  return train_regressor(cfg, x, y, scaling, data::FeatureSchema::canonical().fingerprint(), "conversion",
                         {seed, 2, 60, 0.0});
}

TEST(Persistence, RoundTripBitIdentical) {
  const std::vector<RegressorConfig> configs{LsBoostConfig{4, 3, 40, 0.2}, GprConfig{0.8, 0.6, {}, 1e-4},
                                             MlpConfig{5, Activation::kLogistic, 300, 0.3, 9}};
  Rng rng(77);
  for (const auto& cfg : configs) {
    const auto m = trained(cfg, 3);
    const auto text = save_artifact(m);
    const auto back = load_artifact(text);
    EXPECT_EQ(save_artifact(back), text);
    EXPECT_EQ(back.info().fold, std::optional<std::size_t>(2));
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x(11);
      for (std::size_t f = 0; f < 11; ++f) x[f] = rng.uniform(10.0 * f - 2, 10.0 * f + 8 + f);
      const auto a = m.predict(x), b = back.predict(x);
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a.value), std::bit_cast<std::uint64_t>(b.value));
      EXPECT_EQ(a.variance.has_value(), b.variance.has_value());
      if (a.variance) EXPECT_EQ(*a.variance, *b.variance);
    }
  }
}

TEST(Persistence, FileRoundTrip) {
  const auto m = trained(LsBoostConfig{2, 2, 10, 0.5}, 4);
  const auto path = (test::scratch_dir("artifact") / "conversion.v1").string();
  save_artifact_file(m, path);
  EXPECT_EQ(save_artifact(load_artifact_file(path)), save_artifact(m));
}

TEST(Persistence, CorruptEmptyAndVersionRejected) {
  const auto text = save_artifact(trained(LsBoostConfig{2, 2, 5, 0.5}, 5));
  EXPECT_THROW(load_artifact(""), Error);
  EXPECT_THROW(load_artifact("not json"), Error);
  EXPECT_THROW(load_artifact(R"({"format":"other"})"), Error);
  auto bumped = text;
  bumped.replace(bumped.find("\"v1\""), 4, "\"v2\"");
  try {
    load_artifact(bumped);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("v2"), std::string::npos);
  }
  EXPECT_THROW(load_artifact(text.substr(0, text.size() / 2)), Error);
}

TEST(Regressor, WidthAndFingerprintChecked) {
  const auto m = trained(LsBoostConfig{2, 2, 5, 0.5}, 6);
  EXPECT_THROW(m.predict(std::vector<double>(10, 1.0)), SchemaError);
  EXPECT_THROW(m.predict(std::vector<double>(11, 1.0), "other"), SchemaError);
  EXPECT_NO_THROW(m.predict(std::vector<double>(11, 1.0), data::FeatureSchema::canonical().fingerprint()));
}

TEST(Regressor, OriginalUnitsThroughScaling) {
  const auto m = trained(GprConfig{1.0, 0.5, {}, 1e-4}, 8);
  std::vector<double> x(11);
  for (std::size_t f = 0; f < 11; ++f) x[f] = 10.0 * f + 2.0;
  const auto unit = m.to_unit(x);
  EXPECT_DOUBLE_EQ(unit[0], 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(m.predict(x).value, m.target_from_unit(m.predict_unit(unit)));
  EXPECT_TRUE(m.predict(x).variance.has_value());
}

TEST(Regressor, PredictBatchSerialEqualsParallel) {
  const auto m = trained(LsBoostConfig{6, 5, 100, 0.3}, 10);
  Rng rng(3);
  const auto x = test::random_matrix(300, 11, rng, 0, 100);
  EXPECT_EQ(predict_batch(m, x, Exec::kSerial), predict_batch(m, x, Exec::kParallel));
}

TEST(ConfigIo, RoundTripAndErrors) {
  for (const RegressorConfig& c : {RegressorConfig{LsBoostConfig{}}, RegressorConfig{GprConfig{2, 0.3, {0.1, 0.2}, 1e-3}},
                                   RegressorConfig{MlpConfig{}}}) {
    EXPECT_EQ(config_from_json(config_to_json(c)), c);
  }
  EXPECT_THROW(config_from_json(nlohmann::json{{"family", "svm"}}), Error);
  EXPECT_THROW(parse_family("forest"), Error);
}

}  // namespace
}  // namespace tarml::models
