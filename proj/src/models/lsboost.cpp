#include "tarml/models/lsboost.hpp"

#include <cmath>
#include <string>

#include "tarml/error.hpp"

namespace tarml::models {

void validate(const LsBoostConfig& c) {
  if (c.max_splits < 0) throw Error("lsboost: max splits must be >= 0");
  if (c.min_leaf < 1) throw Error("lsboost: min leaf size must be >= 1");
  if (c.cycles < 1) throw Error("lsboost: cycles must be >= 1");
  if (!(c.learning_rate > 0.0 && c.learning_rate <= 1.0)) {
    throw Error("lsboost: learning rate must lie in (0, 1]");
  }
}

double LsBoostModel::predict_staged(std::span<const double> x, std::size_t stages) const {
  double f = initial;
  for (std::size_t m = 0; m < stages; ++m) f += learning_rate * trees[m].predict(x);
  return f;
}

LsBoostModel train_lsboost(const LsBoostConfig& config, const Matrix& x, std::span<const double> y) {
  validate(config);
  const std::size_t n = x.rows;
  if (y.size() != n) throw Error("lsboost: target length does not match row count");
  if (n < 2 * static_cast<std::size_t>(config.min_leaf)) {
    throw Error("lsboost: " + std::to_string(n) + " rows is fewer than twice the min leaf size (" +
                std::to_string(config.min_leaf) + ")");
  }
  for (double v : x.data) {
    if (!std::isfinite(v)) throw Error("lsboost: non-finite feature value");
  }
  double mean = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) throw Error("lsboost: non-finite target value");
    mean += v;
  }
  mean /= static_cast<double>(n);

  LsBoostModel model;
  model.initial = mean;
  model.learning_rate = config.learning_rate;

  std::vector<double> fitted(n, mean);
  std::vector<double> residual(n);
  auto loss_of = [&](const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (y[i] - f[i]) * (y[i] - f[i]);
    return s / static_cast<double>(n);
  };
  double loss = loss_of(fitted);
  model.training_mse.push_back(loss);

  const SortedColumns sorted(x);
  const TreeGrowth growth{config.max_splits, config.min_leaf};
  std::vector<double> next(n);
  std::vector<int> leaf(n);
  for (int m = 0; m < config.cycles; ++m) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
    RegressionTree tree = grow_tree(x, sorted, residual, growth, &leaf);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = fitted[i] + config.learning_rate * tree.nodes[static_cast<std::size_t>(leaf[i])].value;
    }
    const double next_loss = loss_of(next);
    if (next_loss <= loss) {
      fitted.swap(next);
      loss = next_loss;
    } else {
      TreeNode zero;
      zero.count = n;
      tree.nodes.assign(1, zero);
    }
    model.trees.push_back(std::move(tree));
    model.training_mse.push_back(loss);
  }
  return model;
}

}  // namespace tarml::models
