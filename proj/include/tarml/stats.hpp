#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tarml/data/dataset.hpp"
#include "tarml/exec.hpp"
#include "tarml/matrix.hpp"
#include "tarml/models/regressor.hpp"

namespace tarml::stats {

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the ranks. Absent when either column is constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
  std::vector<std::string> names;  // input order
  std::vector<std::vector<std::optional<double>>> r;  // input order
  std::vector<std::size_t> order;  // clustered order of the variables
};

// Every pair of columns (each column is one variable). Needs >= 3 rows.
CorrelationReport spearman_matrix(const std::vector<std::vector<double>>& columns,
                                  const std::vector<std::string>& names, Exec exec = Exec::kSerial);
// All 16 columns of a dataset, headed by schema keys.
CorrelationReport spearman_matrix(const data::Dataset& d, Exec exec = Exec::kSerial);

// Leaf order of an average-linkage dendrogram over Euclidean distances between
// matrix rows (absent entries count as 0). At each merge the cluster holding
// the smaller variable index goes first.
std::vector<std::size_t> cluster_order(const std::vector<std::vector<std::optional<double>>>& r);

struct PcaReport {
  std::vector<double> eigenvalues;  // descending
  std::vector<double> fractions;    // eigenvalue / total
  Matrix loadings;  // one unit-length component per row
  Matrix scores;    // rows are samples, columns are components
  std::vector<double> mean;
  std::vector<double> scale;  // 1 when not standardized
};

// Components of the covariance matrix (or correlation when standardized).
// Signs are fixed so the largest-magnitude loading of each component is
// positive. Constant columns are left unscaled.
PcaReport pca(const Matrix& data, bool standardize = true);
// Eigen-decomposition only; no scores.
PcaReport pca_from_covariance(const Matrix& covariance);

struct GridSpec {
  std::size_t nx = 64;
  std::size_t ny = 64;
  // Explicit axis ranges; otherwise data range padded by `padding` bandwidths.
  std::optional<data::Bounds> x_range;
  std::optional<data::Bounds> y_range;
  double padding = 3.0;
  // Explicit bandwidths; otherwise 1.06 * sd * n^(-1/5) per axis.
  std::optional<double> hx;
  std::optional<double> hy;
};

struct KdeGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  Matrix density;  // density(j, i) at (xs[i], ys[j])
  double hx = 0.0;
  double hy = 0.0;
};

double silverman_bandwidth(std::span<const double> values);

// Product Gaussian kernel density estimate on a regular grid.
KdeGrid kde2d(std::span<const double> x, std::span<const double> y, const GridSpec& grid, Exec exec = Exec::kSerial);

// Trapezoidal integral of the density over the grid.
double integrate(const KdeGrid& grid);

struct ResponseGrid {
  std::size_t feature_x = 0;
  std::size_t feature_y = 0;
  std::vector<double> xs;
  std::vector<double> ys;
  Matrix values;  // values(j, i) at (xs[i], ys[j])
  std::vector<double> fixed;  // the full input used, with x and y overwritten per cell
};

std::vector<double> column_medians(const data::Dataset& d);

// Model output over a grid of two features spanning their observed bounds,
// with the other features held at the dataset medians.
ResponseGrid model_response_grid(const models::Regressor& model, const data::Dataset& d, std::size_t feature_x,
                                 std::size_t feature_y, std::size_t nx = 50, std::size_t ny = 50,
                                 Exec exec = Exec::kSerial);

// Square table in clustered order with a header row and column; absent
// coefficients are empty cells.
std::string correlation_to_csv(const CorrelationReport& report);
// component,eigenvalue,variance_fraction then one loading column per variable.
std::string pca_to_csv(const PcaReport& report, const std::vector<std::string>& names);
// First row: blank cell then the x axis; then one row per y value.
std::string grid_to_csv(std::span<const double> xs, std::span<const double> ys, const Matrix& values);

}  // namespace tarml::stats
