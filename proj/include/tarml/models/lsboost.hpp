#pragma once

#include <span>
#include <vector>

#include "tarml/matrix.hpp"
#include "tarml/models/tree.hpp"

namespace tarml::models {

struct LsBoostConfig {
  int max_splits = 6;
  int min_leaf = 5;
  int cycles = 250;
  double learning_rate = 0.295;

  friend bool operator==(const LsBoostConfig&, const LsBoostConfig&) = default;
};

void validate(const LsBoostConfig& config);

// F(x) = initial + sum_m learning_rate * tree_m(x), accumulated tree by tree.
struct LsBoostModel {
  double initial = 0.0;
  double learning_rate = 1.0;
  std::vector<RegressionTree> trees;
  std::vector<double> training_mse;  // after each cycle; entry 0 is the constant model

  double predict(std::span<const double> x) const { return predict_staged(x, trees.size()); }
  // Output of the first `stages` trees.
  double predict_staged(std::span<const double> x, std::size_t stages) const;

  friend bool operator==(const LsBoostModel&, const LsBoostModel&) = default;
};

// Least-squares gradient boosting. A cycle whose tree would raise the training
// loss (possible only through rounding once the residual means vanish)
// contributes a zero tree, so the recorded loss is non-increasing.
LsBoostModel train_lsboost(const LsBoostConfig& config, const Matrix& x, std::span<const double> y);

}  // namespace tarml::models
