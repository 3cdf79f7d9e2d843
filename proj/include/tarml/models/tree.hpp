#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tarml/matrix.hpp"

namespace tarml::models {

// Flat node array; node 0 is the root. Internal nodes send x[feature] <=
// threshold to `left`. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output (mean residual of the leaf's rows)
  std::size_t count = 0;  // training rows that reached the node

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  int leaf_index(std::span<const double> x) const;
  std::size_t split_count() const;
  int depth() const;

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct TreeGrowth {
  int max_splits = 6;
  int min_leaf = 5;
};

// Per-feature row orderings of a training matrix, computed once and reused by
// every tree grown on it.
class SortedColumns {
 public:
  explicit SortedColumns(const Matrix& x);

  const std::vector<std::size_t>& order(std::size_t feature) const { return order_[feature]; }
  // Column `feature` of the matrix, in row order.
  const std::vector<double>& values(std::size_t feature) const { return values_[feature]; }
  // 1 / k for k in [1, rows].
  double inverse(std::size_t k) const { return inverse_[k]; }

 private:
  std::vector<std::vector<std::size_t>> order_;
  std::vector<std::vector<double>> values_;
  std::vector<double> inverse_;
};

// Greedy best-first least-squares tree on `target`. The leaf with the largest
// variance reduction is split next, until `max_splits` splits exist or no leaf
// has an admissible positive-gain split. Thresholds sit at midpoints of
// consecutive distinct values; ties go to the lowest feature index, then the
// lowest threshold. With `leaf_of_row`, also reports the leaf each training
// row ends in.
RegressionTree grow_tree(const Matrix& x, const SortedColumns& sorted, std::span<const double> target,
                         const TreeGrowth& growth, std::vector<int>* leaf_of_row = nullptr);

}  // namespace tarml::models
