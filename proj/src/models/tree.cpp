#include "tarml/models/tree.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "tarml/error.hpp"

namespace tarml::models {

double RegressionTree::predict(std::span<const double> x) const {
  return nodes[static_cast<std::size_t>(leaf_index(x))].value;
}

int RegressionTree::leaf_index(std::span<const double> x) const {
  int n = 0;
  while (!nodes[static_cast<std::size_t>(n)].is_leaf()) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return n;
}

std::size_t RegressionTree::split_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

SortedColumns::SortedColumns(const Matrix& x) : order_(x.cols), values_(x.cols), inverse_(x.rows + 1, 0.0) {
  for (std::size_t k = 1; k <= x.rows; ++k) inverse_[k] = 1.0 / static_cast<double>(k);
  for (std::size_t f = 0; f < x.cols; ++f) {
    auto& o = order_[f];
    o.resize(x.rows);
    std::iota(o.begin(), o.end(), std::size_t{0});
    std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
    values_[f].resize(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) values_[f][r] = x(r, f);
  }
}

namespace {

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Row indices per feature. Every node owns the range [begin, end) of each
// list, holding its rows in ascending order of that feature.
struct RowLists {
  std::vector<std::vector<std::uint32_t>> by_feature;
};

struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

Candidate best_split(const SortedColumns& sorted, std::span<const double> target, const RowLists& lists, Range r,
                     double sum, std::size_t min_leaf) {
  Candidate best;
  const std::size_t count = r.size();
  if (count < 2 * min_leaf) return best;
  const double parent = sum * sum * sorted.inverse(count);
  for (std::size_t f = 0; f < lists.by_feature.size(); ++f) {
    const double* column = sorted.values(f).data();
    const std::uint32_t* rows = lists.by_feature[f].data();
    // Only boundaries after position min_leaf - 1 and before count - min_leaf qualify.
    double left_sum = 0.0;
    for (std::size_t k = r.begin; k < r.begin + min_leaf; ++k) left_sum += target[rows[k]];
    double prev_x = column[rows[r.begin + min_leaf - 1]];
    for (std::size_t k = r.begin + min_leaf; k + min_leaf <= r.end; ++k) {
      const std::uint32_t i = rows[k];
      const double xi = column[i];
      if (xi > prev_x) {
        const std::size_t left_n = k - r.begin;
        const double right_sum = sum - left_sum;
        const double gain =
            left_sum * left_sum * sorted.inverse(left_n) + right_sum * right_sum * sorted.inverse(count - left_n) -
            parent;
        if (gain > best.gain) {
          double threshold = prev_x + (xi - prev_x) / 2.0;
          if (!(threshold < xi)) threshold = prev_x;
          best = {static_cast<int>(f), threshold, gain};
        }
      }
      left_sum += target[i];
      prev_x = xi;
    }
  }
  return best;
}

}  // namespace

RegressionTree grow_tree(const Matrix& x, const SortedColumns& sorted, std::span<const double> target,
                         const TreeGrowth& growth, std::vector<int>* leaf_of_row) {
  if (target.size() != x.rows || x.rows == 0) throw Error("tree training data is empty or mismatched");
  const auto min_leaf = static_cast<std::size_t>(std::max(growth.min_leaf, 1));

  RowLists lists;
  lists.by_feature.resize(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) {
    const auto& o = sorted.order(f);
    lists.by_feature[f].assign(o.begin(), o.end());
  }

  RegressionTree tree;
  std::vector<Range> ranges;
  std::vector<Candidate> candidates;
  auto add_leaf = [&](Range r, double sum) {
    TreeNode leaf;
    leaf.count = r.size();
    leaf.value = sum * sorted.inverse(r.size());
    tree.nodes.push_back(leaf);
    ranges.push_back(r);
    candidates.push_back(growth.max_splits > 0 ? best_split(sorted, target, lists, r, sum, min_leaf) : Candidate{});
  };

  double total = 0.0;
  for (std::uint32_t i : lists.by_feature.front()) total += target[i];
  add_leaf({0, x.rows}, total);

  std::vector<char> goes_left(x.rows, 0);
  std::vector<std::uint32_t> scratch(x.rows);
  for (int split = 0; split < growth.max_splits; ++split) {
    int chosen = -1;
    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
      if (!tree.nodes[n].is_leaf() || candidates[n].feature < 0) continue;
      if (chosen < 0 || candidates[n].gain > candidates[static_cast<std::size_t>(chosen)].gain) {
        chosen = static_cast<int>(n);
      }
    }
    if (chosen < 0) break;

    const Candidate c = candidates[static_cast<std::size_t>(chosen)];
    const Range r = ranges[static_cast<std::size_t>(chosen)];
    const auto& column = sorted.values(static_cast<std::size_t>(c.feature));
    // Sums run in feature-0 order so they do not depend on the split feature.
    double left_sum = 0.0, right_sum = 0.0;
    std::size_t left_n = 0;
    for (std::size_t k = r.begin; k < r.end; ++k) {
      const std::uint32_t i = lists.by_feature.front()[k];
      goes_left[i] = column[i] <= c.threshold;
      if (goes_left[i]) {
        left_sum += target[i];
        ++left_n;
      } else {
        right_sum += target[i];
      }
    }
    for (auto& list : lists.by_feature) {
      std::size_t l = r.begin, rr = 0;
      for (std::size_t k = r.begin; k < r.end; ++k) {
        const std::uint32_t i = list[k];
        if (goes_left[i]) {
          list[l++] = i;
        } else {
          scratch[rr++] = i;
        }
      }
      std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(rr),
                list.begin() + static_cast<std::ptrdiff_t>(l));
    }

    const int left = static_cast<int>(tree.nodes.size());
    auto& parent = tree.nodes[static_cast<std::size_t>(chosen)];
    parent.feature = c.feature;
    parent.threshold = c.threshold;
    parent.left = left;
    parent.right = left + 1;
    parent.value = 0.0;
    add_leaf({r.begin, r.begin + left_n}, left_sum);
    add_leaf({r.begin + left_n, r.end}, right_sum);
  }

  if (leaf_of_row != nullptr) {
    leaf_of_row->assign(x.rows, 0);
    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
      if (!tree.nodes[n].is_leaf()) continue;
      for (std::size_t k = ranges[n].begin; k < ranges[n].end; ++k) {
        (*leaf_of_row)[lists.by_feature.front()[k]] = static_cast<int>(n);
      }
    }
  }
  return tree;
}

}  // namespace tarml::models
