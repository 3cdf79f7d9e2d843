#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tarml/data/dataset.hpp"

namespace tarml::data {

// Affine per-column map to [0, 1]: u = (v - min) / (max - min).
struct ScalingSpec {
  std::vector<Bounds> columns;  // one per column of the 16-wide layout
  std::string fingerprint;      // schema fingerprint the spec was built from

  double to_unit(std::size_t column, double v) const {
    const Bounds& b = columns[column];
    return (v - b.min) / (b.max - b.min);
  }
  double from_unit(std::size_t column, double u) const {
    const Bounds& b = columns[column];
    return b.min + u * (b.max - b.min);
  }

  friend bool operator==(const ScalingSpec&, const ScalingSpec&) = default;
};

// Throws naming the first constant column.
std::pair<Dataset, ScalingSpec> normalize(const Dataset& d);
ScalingSpec fit_scaling(const Dataset& d);
Dataset apply_scaling(const Dataset& d, const ScalingSpec& s);
Dataset denormalize(const Dataset& d, const ScalingSpec& s);

struct NoOutlierPolicy {};
struct IqrPolicy {
  double multiplier = 1.5;
};
struct ZScorePolicy {
  double threshold = 3.0;
};
using OutlierPolicy = std::variant<NoOutlierPolicy, IqrPolicy, ZScorePolicy>;

// "none", "iqr", "iqr:<multiplier>", "zscore", "zscore:<threshold>".
OutlierPolicy parse_outlier_policy(const std::string& text);

struct Removal {
  std::size_t row;  // 0-based index into the input dataset
  std::string column;
  double value;
  double lo;
  double hi;
};

struct RemovalReport {
  std::vector<std::size_t> removed_rows;  // ascending, unique
  std::vector<Removal> triggers;          // one per (row, column) violation

  // "row <i> removed: <column> = <value> outside [<lo>, <hi>]" per trigger.
  std::string to_text() const;
};

// Fences are computed on target columns only. IQR is a single pass with
// fences [Q1 - m*IQR, Q3 + m*IQR]. Z-score trims repeatedly (mean and sample
// standard deviation recomputed on the survivors) until a pass removes nothing.
std::pair<Dataset, RemovalReport> remove_outliers(const Dataset& d, const OutlierPolicy& policy);

// Linear interpolation between order statistics: h = (n - 1) p.
double quantile(std::vector<double> values, double p);

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> folds;

  std::size_t total() const;
  // Every index not in fold `f`, ascending.
  std::vector<std::size_t> complement(std::size_t f) const;

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

// Shuffles 0..n-1 with `Rng(seed)` then cuts contiguous folds; the first n % k
// folds are one larger.
FoldPlan kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace tarml::data
