#include "tarml/shap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tarml/data/csv.hpp"
#include "tarml/data/dataset.hpp"
#include "tarml/error.hpp"
#include "tarml/parallel.hpp"
#include "tarml/rng.hpp"

namespace tarml::shap {

using models::RegressionTree;

double ShapExplanation::total() const {
  return base + std::accumulate(values.begin(), values.end(), 0.0);
}

namespace {

// W[n][s] = s! (n - s - 1)! / n!, the weight of a coalition of size s among n players.
class Weights {
 public:
  explicit Weights(std::size_t max_players) : w_(max_players + 1) {
    for (std::size_t n = 1; n <= max_players; ++n) {
      w_[n].resize(n);
      for (std::size_t s = 0; s < n; ++s) {
        w_[n][s] = std::exp(std::lgamma(s + 1.0) + std::lgamma(static_cast<double>(n - s)) - std::lgamma(n + 1.0));
      }
    }
  }
  double operator()(std::size_t s, std::size_t n) const { return w_[n][s]; }

 private:
  std::vector<std::vector<double>> w_;
};

enum Side : unsigned char { kFree, kForeground, kBackground };

struct PairWalk {
  const RegressionTree& tree;
  std::span<const double> x;
  std::span<const double> z;
  const Weights& weights;
  std::span<double> phi;
  std::vector<unsigned char>& side;
  std::size_t in_x = 0;
  std::size_t in_z = 0;

  struct Sums {
    double pos = 0.0;  // sum over leaves of value * W(|S_x| - 1, n)
    double neg = 0.0;  // sum over leaves of value * W(|S_x|, n)
  };

  Sums visit(int index) {
    const auto& node = tree.nodes[static_cast<std::size_t>(index)];
    if (node.is_leaf()) {
      const std::size_t n = in_x + in_z;
      if (n == 0) return {};
      Sums s;
      if (in_x > 0) s.pos = node.value * weights(in_x - 1, n);
      if (in_z > 0) s.neg = node.value * weights(in_x, n);
      return s;
    }
    const auto f = static_cast<std::size_t>(node.feature);
    const int x_child = x[f] <= node.threshold ? node.left : node.right;
    const int z_child = z[f] <= node.threshold ? node.left : node.right;
    if (x_child == z_child || side[f] == kForeground) return visit(x_child);
    if (side[f] == kBackground) return visit(z_child);

    side[f] = kForeground;
    ++in_x;
    const Sums a = visit(x_child);
    --in_x;
    side[f] = kBackground;
    ++in_z;
    const Sums b = visit(z_child);
    --in_z;
    side[f] = kFree;
    phi[f] += a.pos - b.neg;
    return {a.pos + b.pos, a.neg + b.neg};
  }
};

}  // namespace

double tree_shap_accumulate(const RegressionTree& tree, std::span<const double> x, const Matrix& background,
                            std::span<double> phi, double scale) {
  if (background.rows == 0) throw Error("shap: empty background set");
  if (background.cols != x.size() || phi.size() != x.size()) throw Error("shap: instance and background widths differ");
  const Weights weights(x.size());
  std::vector<double> local(x.size(), 0.0);
  std::vector<unsigned char> side(x.size(), kFree);
  double mean = 0.0;
  for (std::size_t r = 0; r < background.rows; ++r) {
    const auto z = background.row(r);
    PairWalk walk{tree, x, z, weights, local, side};
    walk.visit(0);
    mean += tree.predict(z);
  }
  const double m = static_cast<double>(background.rows);
  for (std::size_t f = 0; f < x.size(); ++f) phi[f] += scale * (local[f] / m);
  return mean / m;
}

ShapExplanation shap_tree(const models::LsBoostModel& model, std::span<const double> x_unit,
                          const Matrix& background_unit) {
  if (background_unit.rows == 0) throw Error("shap: empty background set");
  ShapExplanation e;
  e.instance.assign(x_unit.begin(), x_unit.end());
  e.values.assign(x_unit.size(), 0.0);
  e.base = model.initial;
  for (const auto& tree : model.trees) {
    e.base += model.learning_rate * tree_shap_accumulate(tree, x_unit, background_unit, e.values, model.learning_rate);
  }
  e.prediction = model.predict(x_unit);
  return e;
}

namespace {

Matrix to_unit_rows(const models::Regressor& model, const Matrix& rows) {
  Matrix out(rows.rows, rows.cols);
  for (std::size_t r = 0; r < rows.rows; ++r) {
    const auto u = model.to_unit(rows.row(r));
    std::copy(u.begin(), u.end(), out.row(r).begin());
  }
  return out;
}

// Maps a normalized-space explanation back to original units.
ShapExplanation to_original(const models::Regressor& model, ShapExplanation e, std::span<const double> x) {
  const double span = model.scaling().target.span();
  e.instance.assign(x.begin(), x.end());
  e.base = model.target_from_unit(e.base);
  for (double& v : e.values) v *= span;
  e.prediction = model.predict(x).value;
  e.target = model.target();
  return e;
}

}  // namespace

ShapExplanation shap_tree(const models::Regressor& model, std::span<const double> x, const Matrix& background) {
  const auto* boost = model.lsboost();
  if (boost == nullptr) {
    throw Error("shap_tree needs an lsboost model, got " + std::string(models::to_string(model.family())) +
                "; use the sampling estimator");
  }
  const auto u = model.to_unit(x);
  return to_original(model, shap_tree(*boost, u, to_unit_rows(model, background)), x);
}

ShapExplanation shap_sampling(const Predictor& f, std::span<const double> x, const Matrix& background,
                              const SamplingOptions& options) {
  if (background.rows == 0) throw Error("shap: empty background set");
  if (background.cols != x.size()) throw Error("shap: instance and background widths differ");
  if (!options.exhaustive && options.permutations < 1) throw Error("shap: permutation count must be at least 1");
  std::vector<std::size_t> active = options.active;
  if (active.empty()) {
    active.resize(x.size());
    std::iota(active.begin(), active.end(), std::size_t{0});
  }
  for (std::size_t a : active) {
    if (a >= x.size()) throw Error("shap: active feature index out of range");
  }
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());

  ShapExplanation e;
  e.instance.assign(x.begin(), x.end());
  e.values.assign(x.size(), 0.0);
  std::vector<double> point(x.size());
  double base = 0.0;
  std::size_t walks = 0;

  // Start from z on the active features, then switch them to x in `order`.
  auto walk = [&](std::span<const std::size_t> order, std::span<const double> z) {
    std::copy(x.begin(), x.end(), point.begin());
    for (std::size_t a : active) point[a] = z[a];
    double prev = f(point);
    base += prev;
    for (std::size_t a : order) {
      point[a] = x[a];
      const double next = f(point);
      e.values[a] += next - prev;
      prev = next;
    }
    ++walks;
  };

  if (options.exhaustive) {
    std::vector<std::size_t> order = active;
    do {
      for (std::size_t r = 0; r < background.rows; ++r) walk(order, background.row(r));
    } while (std::next_permutation(order.begin(), order.end()));
  } else {
    Rng rng(options.seed);
    std::vector<std::size_t> order = active;
    for (std::size_t p = 0; p < options.permutations; ++p) {
      rng.shuffle(std::span<std::size_t>(order));
      walk(order, background.row(static_cast<std::size_t>(rng.below(background.rows))));
    }
  }
  const double n = static_cast<double>(walks);
  for (double& v : e.values) v /= n;
  e.base = base / n;
  e.prediction = f(x);
  return e;
}

ShapExplanation shap_sampling(const models::Regressor& model, std::span<const double> x, const Matrix& background,
                              const SamplingOptions& options) {
  const auto u = model.to_unit(x);
  const auto e = shap_sampling([&](std::span<const double> p) { return model.predict_unit(p); }, u,
                               to_unit_rows(model, background), options);
  return to_original(model, e, x);
}

ShapExplanation explain(const models::Regressor& model, std::span<const double> x, const Matrix& background,
                        const SamplingOptions& fallback) {
  if (model.lsboost() != nullptr) return shap_tree(model, x, background);
  return shap_sampling(model, x, background, fallback);
}

std::vector<ShapExplanation> explain_batch(const models::Regressor& model, const Matrix& instances,
                                           const Matrix& background, Exec exec, const SamplingOptions& fallback) {
  std::vector<ShapExplanation> out(instances.rows);
  for_each_index(instances.rows, exec,
                 [&](std::size_t i) { out[i] = explain(model, instances.row(i), background, fallback); });
  return out;
}

Matrix select_background(const Matrix& rows, std::size_t cap, std::uint64_t seed) {
  if (rows.rows == 0) throw Error("shap: empty background set");
  if (cap == 0) throw Error("shap: background cap must be positive");
  if (rows.rows <= cap) return rows;
  std::vector<std::size_t> index(rows.rows);
  std::iota(index.begin(), index.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(index));
  index.resize(cap);
  std::sort(index.begin(), index.end());
  Matrix out(cap, rows.cols);
  for (std::size_t i = 0; i < cap; ++i) {
    std::copy(rows.row(index[i]).begin(), rows.row(index[i]).end(), out.row(i).begin());
  }
  return out;
}

ShapSummary summarize(std::span<const ShapExplanation> explanations, const data::FeatureSchema& schema) {
  if (explanations.empty()) throw Error("shap summary: no explanations");
  const std::size_t d = data::kFeatureCount;
  ShapSummary s;
  s.max_abs.assign(d, 0.0);
  s.mean_abs.assign(d, 0.0);
  for (const auto& e : explanations) {
    if (e.values.size() != d) throw Error("shap summary: explanation does not have 11 values");
    for (std::size_t f = 0; f < d; ++f) {
      s.max_abs[f] = std::max(s.max_abs[f], std::abs(e.values[f]));
      s.mean_abs[f] += std::abs(e.values[f]);
    }
  }
  for (double& v : s.mean_abs) v /= static_cast<double>(explanations.size());
  s.order.resize(d);
  std::iota(s.order.begin(), s.order.end(), std::size_t{0});
  std::stable_sort(s.order.begin(), s.order.end(),
                   [&](std::size_t a, std::size_t b) { return s.max_abs[a] > s.max_abs[b]; });

  double operating = 0.0;
  double catalyst = 0.0;
  for (std::size_t f = 0; f < d; ++f) {
    (schema.features()[f].kind == data::FeatureKind::kCatalystProperty ? catalyst : operating) += s.mean_abs[f];
  }
  const double total = operating + catalyst;
  if (total > 0.0) {
    s.operating_pct = 100.0 * operating / total;
    s.catalyst_pct = 100.0 * catalyst / total;
  }
  return s;
}

std::string explanation_to_csv(const ShapExplanation& e, const data::FeatureSchema& schema) {
  if (e.values.size() != data::kFeatureCount) throw Error("shap export: explanation does not have 11 values");
  std::ostringstream out;
  out << "feature,value,shap\n";
  for (std::size_t f = 0; f < e.values.size(); ++f) {
    out << data::quote_csv_cell(schema.features()[f].name) << ',' << data::format_number(e.instance[f]) << ','
        << data::format_number(e.values[f]) << '\n';
  }
  out << "base,," << data::format_number(e.base) << '\n';
  out << "prediction,," << data::format_number(e.prediction) << '\n';
  return out.str();
}

std::string explanations_to_csv(std::span<const ShapExplanation> explanations, const data::FeatureSchema& schema) {
  std::ostringstream out;
  out << "instance,feature,value,shap\n";
  for (std::size_t k = 0; k < explanations.size(); ++k) {
    const auto& e = explanations[k];
    if (e.values.size() != data::kFeatureCount) throw Error("shap export: explanation does not have 11 values");
    for (std::size_t f = 0; f < e.values.size(); ++f) {
      out << k << ',' << data::quote_csv_cell(schema.features()[f].key) << ',' << data::format_number(e.instance[f])
          << ',' << data::format_number(e.values[f]) << '\n';
    }
  }
  return out.str();
}

std::string summary_to_csv(const ShapSummary& s, const data::FeatureSchema& schema) {
  std::ostringstream out;
  out << "rank,feature,group,max_abs_shap,mean_abs_shap\n";
  for (std::size_t r = 0; r < s.order.size(); ++r) {
    const auto& c = schema.features()[s.order[r]];
    out << r + 1 << ',' << data::quote_csv_cell(c.name) << ',' << data::to_string(c.kind) << ','
        << data::format_number(s.max_abs[s.order[r]]) << ',' << data::format_number(s.mean_abs[s.order[r]]) << '\n';
  }
  out << "\ngroup,percent\n";
  auto pct = [](const std::optional<double>& v) { return v ? data::format_number(*v) : std::string(); };
  out << "operating_condition," << pct(s.operating_pct) << '\n';
  out << "catalyst_property," << pct(s.catalyst_pct) << '\n';
  return out.str();
}

}  // namespace tarml::shap
