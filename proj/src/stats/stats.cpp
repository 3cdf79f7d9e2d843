#include "tarml/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "tarml/data/csv.hpp"
#include "tarml/error.hpp"
#include "tarml/parallel.hpp"

namespace tarml::stats {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

namespace {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

void check_finite(std::span<const double> values, const std::string& what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(what + " contains a non-finite value");
  }
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("spearman: columns of different lengths");
  if (x.size() < 3) throw Error("spearman: at least 3 rows are required");
  check_finite(x, "spearman input");
  check_finite(y, "spearman input");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

CorrelationReport spearman_matrix(const std::vector<std::vector<double>>& columns,
                                  const std::vector<std::string>& names, Exec exec) {
  const std::size_t m = columns.size();
  if (names.size() != m) throw Error("spearman: one name per column required");
  if (m == 0) throw Error("spearman: no columns");
  const std::size_t n = columns.front().size();
  if (n < 3) throw Error("spearman: at least 3 rows are required");
  std::vector<std::vector<double>> ranks(m);
  for (std::size_t c = 0; c < m; ++c) {
    if (columns[c].size() != n) throw Error("spearman: column " + names[c] + " has a different length");
    check_finite(columns[c], "column " + names[c]);
    ranks[c] = average_ranks(columns[c]);
  }
  CorrelationReport report;
  report.names = names;
  report.r.assign(m, std::vector<std::optional<double>>(m));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) pairs.emplace_back(a, b);
  }
  for_each_index(pairs.size(), exec, [&](std::size_t k) {
    const auto [a, b] = pairs[k];
    const auto r = pearson(ranks[a], ranks[b]);
    // The diagonal of a non-constant column is exactly 1.
    report.r[a][b] = (a == b && r) ? std::optional<double>(1.0) : r;
    report.r[b][a] = report.r[a][b];
  });
  report.order = cluster_order(report.r);
  return report;
}

CorrelationReport spearman_matrix(const data::Dataset& d, Exec exec) {
  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < data::kColumnCount; ++c) {
    columns.push_back(d.column(c));
    names.push_back(d.schema.column(c).key);
  }
  return spearman_matrix(columns, names, exec);
}

std::vector<std::size_t> cluster_order(const std::vector<std::vector<std::optional<double>>>& r) {
  const std::size_t m = r.size();
  std::vector<std::vector<double>> dist(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double d = r[a][k].value_or(0.0) - r[b][k].value_or(0.0);
        s += d * d;
      }
      dist[a][b] = std::sqrt(s);
    }
  }
  // Each cluster keeps its leaves in dendrogram order; leaves.front() is not
  // necessarily the smallest index, so track it separately.
  struct Cluster {
    std::vector<std::size_t> leaves;
    std::size_t smallest;
  };
  std::vector<Cluster> clusters;
  for (std::size_t a = 0; a < m; ++a) clusters.push_back({{a}, a});
  auto linkage = [&](const Cluster& p, const Cluster& q) {
    double s = 0.0;
    for (std::size_t a : p.leaves) {
      for (std::size_t b : q.leaves) s += dist[a][b];
    }
    return s / static_cast<double>(p.leaves.size() * q.leaves.size());
  };
  while (clusters.size() > 1) {
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double l = linkage(clusters[i], clusters[j]);
        if (l < best) {
          best = l;
          bi = i;
          bj = j;
        }
      }
    }
    Cluster& first = clusters[bi].smallest < clusters[bj].smallest ? clusters[bi] : clusters[bj];
    Cluster& second = &first == &clusters[bi] ? clusters[bj] : clusters[bi];
    Cluster merged{first.leaves, first.smallest};
    merged.leaves.insert(merged.leaves.end(), second.leaves.begin(), second.leaves.end());
    clusters[bi] = std::move(merged);
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return m == 0 ? std::vector<std::size_t>{} : clusters.front().leaves;
}

namespace {

PcaReport decompose(const Eigen::MatrixXd& cov) {
  const auto d = static_cast<std::size_t>(cov.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("pca: eigen-decomposition failed");
  const Eigen::VectorXd values = solver.eigenvalues();
  const Eigen::MatrixXd vectors = solver.eigenvectors();
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values(static_cast<Eigen::Index>(a)) > values(static_cast<Eigen::Index>(b));
  });

  PcaReport report;
  report.loadings = Matrix(d, d);
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const auto c = static_cast<Eigen::Index>(order[k]);
    // Round-off can leave tiny negative eigenvalues on singular input.
    const double lambda = std::max(values(c), 0.0);
    report.eigenvalues.push_back(lambda);
    total += lambda;
    Eigen::Index lead = 0;
    for (Eigen::Index i = 1; i < vectors.rows(); ++i) {
      if (std::abs(vectors(i, c)) > std::abs(vectors(lead, c))) lead = i;
    }
    const double sign = vectors(lead, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i) report.loadings(k, i) = sign * vectors(static_cast<Eigen::Index>(i), c);
  }
  if (!(total > 0.0)) throw Error("pca: the data have no variance");
  for (double lambda : report.eigenvalues) report.fractions.push_back(lambda / total);
  return report;
}

}  // namespace

PcaReport pca_from_covariance(const Matrix& covariance) {
  if (covariance.rows != covariance.cols || covariance.rows < 2) throw Error("pca: covariance must be square, d >= 2");
  check_finite(covariance.data, "covariance");
  Eigen::MatrixXd cov(covariance.rows, covariance.cols);
  for (std::size_t i = 0; i < covariance.rows; ++i) {
    for (std::size_t j = 0; j < covariance.cols; ++j) {
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = covariance(i, j);
    }
  }
  if (!cov.isApprox(cov.transpose())) throw Error("pca: covariance is not symmetric");
  return decompose(cov);
}

PcaReport pca(const Matrix& x, bool standardize) {
  if (x.rows < 2) throw Error("pca: at least 2 rows are required");
  if (x.cols < 2) throw Error("pca: at least 2 columns are required");
  check_finite(x.data, "pca input");
  const auto n = static_cast<Eigen::Index>(x.rows);
  const auto d = static_cast<Eigen::Index>(x.cols);
  Eigen::MatrixXd z(n, d);
  std::vector<double> mean(x.cols, 0.0), scale(x.cols, 1.0);
  for (std::size_t c = 0; c < x.cols; ++c) {
    for (std::size_t r = 0; r < x.rows; ++r) mean[c] += x(r, c);
    mean[c] /= static_cast<double>(x.rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) ss += (x(r, c) - mean[c]) * (x(r, c) - mean[c]);
    const double sd = std::sqrt(ss / static_cast<double>(x.rows - 1));
    if (standardize && sd > 0.0) scale[c] = sd;
    for (std::size_t r = 0; r < x.rows; ++r) {
      z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (x(r, c) - mean[c]) / scale[c];
    }
  }
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(x.rows - 1);
  PcaReport report = decompose(cov);
  report.mean = std::move(mean);
  report.scale = std::move(scale);
  report.scores = Matrix(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t k = 0; k < x.cols; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < x.cols; ++c) {
        s += z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * report.loadings(k, c);
      }
      report.scores(r, k) = s;
    }
  }
  return report;
}

double silverman_bandwidth(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  if (values.size() < 2) throw Error("kde: at least 2 points are required");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw Error("kde: zero variance on an axis; give the bandwidth explicitly");
  return 1.06 * sd * std::pow(n, -0.2);
}

namespace {

std::vector<double> axis(std::span<const double> values, std::optional<data::Bounds> range, double h, double pad,
                         std::size_t count) {
  if (count < 2) throw Error("kde: a grid axis needs at least 2 points");
  data::Bounds b;
  if (range) {
    b = *range;
  } else {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    b = {*lo - pad * h, *hi + pad * h};
  }
  if (!(b.max > b.min)) throw Error("kde: empty grid range");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = b.min + (b.max - b.min) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

}  // namespace

KdeGrid kde2d(std::span<const double> x, std::span<const double> y, const GridSpec& spec, Exec exec) {
  if (x.size() != y.size()) throw Error("kde: columns of different lengths");
  if (x.size() < 2) throw Error("kde: at least 2 points are required");
  check_finite(x, "kde input");
  check_finite(y, "kde input");
  KdeGrid g;
  g.hx = spec.hx ? *spec.hx : silverman_bandwidth(x);
  g.hy = spec.hy ? *spec.hy : silverman_bandwidth(y);
  if (!(g.hx > 0.0) || !(g.hy > 0.0)) throw Error("kde: bandwidths must be positive");
  g.xs = axis(x, spec.x_range, g.hx, spec.padding, spec.nx);
  g.ys = axis(y, spec.y_range, g.hy, spec.padding, spec.ny);
  g.density = Matrix(spec.ny, spec.nx);
  const double norm = 1.0 / (2.0 * std::acos(-1.0) * g.hx * g.hy * static_cast<double>(x.size()));
  for_each_index(spec.ny, exec, [&](std::size_t j) {
    std::vector<double> ky(x.size());
    for (std::size_t p = 0; p < x.size(); ++p) {
      const double u = (g.ys[j] - y[p]) / g.hy;
      ky[p] = std::exp(-0.5 * u * u);
    }
    for (std::size_t i = 0; i < spec.nx; ++i) {
      double s = 0.0;
      for (std::size_t p = 0; p < x.size(); ++p) {
        const double u = (g.xs[i] - x[p]) / g.hx;
        s += std::exp(-0.5 * u * u) * ky[p];
      }
      g.density(j, i) = s * norm;
    }
  });
  return g;
}

double integrate(const KdeGrid& g) {
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < g.ys.size(); ++j) {
    for (std::size_t i = 0; i + 1 < g.xs.size(); ++i) {
      const double area = (g.xs[i + 1] - g.xs[i]) * (g.ys[j + 1] - g.ys[j]);
      total += 0.25 * area *
               (g.density(j, i) + g.density(j, i + 1) + g.density(j + 1, i) + g.density(j + 1, i + 1));
    }
  }
  return total;
}

std::vector<double> column_medians(const data::Dataset& d) {
  if (d.empty()) throw Error("medians of an empty dataset");
  std::vector<double> out;
  for (std::size_t c = 0; c < data::kFeatureCount; ++c) {
    auto v = d.column(c);
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    out.push_back(v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]));
  }
  return out;
}

ResponseGrid model_response_grid(const models::Regressor& model, const data::Dataset& d, std::size_t fx,
                                 std::size_t fy, std::size_t nx, std::size_t ny, Exec exec) {
  if (fx >= data::kFeatureCount || fy >= data::kFeatureCount || fx == fy) {
    throw Error("response grid: need two distinct feature indices");
  }
  if (nx < 2 || ny < 2) throw Error("response grid: a grid axis needs at least 2 points");
  const auto schema = d.observed_schema();
  ResponseGrid g;
  g.feature_x = fx;
  g.feature_y = fy;
  g.fixed = column_medians(d);
  auto span_axis = [](const data::Bounds& b, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = b.min + b.span() * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
  };
  g.xs = span_axis(schema.column(fx).bounds, nx);
  g.ys = span_axis(schema.column(fy).bounds, ny);
  g.values = Matrix(ny, nx);
  for_each_index(ny, exec, [&](std::size_t j) {
    std::vector<double> input = g.fixed;
    input[fy] = g.ys[j];
    for (std::size_t i = 0; i < nx; ++i) {
      input[fx] = g.xs[i];
      g.values(j, i) = model.predict(input).value;
    }
  });
  return g;
}

std::string correlation_to_csv(const CorrelationReport& report) {
  std::ostringstream out;
  for (std::size_t a : report.order) out << ',' << data::quote_csv_cell(report.names[a]);
  out << '\n';
  for (std::size_t a : report.order) {
    out << data::quote_csv_cell(report.names[a]);
    for (std::size_t b : report.order) {
      out << ',';
      if (report.r[a][b]) out << data::format_number(*report.r[a][b]);
    }
    out << '\n';
  }
  return out.str();
}

std::string pca_to_csv(const PcaReport& report, const std::vector<std::string>& names) {
  if (names.size() != report.loadings.cols) throw Error("pca export: one name per variable required");
  std::ostringstream out;
  out << "component,eigenvalue,variance_fraction";
  for (const auto& n : names) out << ',' << data::quote_csv_cell(n);
  out << '\n';
  for (std::size_t k = 0; k < report.loadings.rows; ++k) {
    out << "PC" << k + 1 << ',' << data::format_number(report.eigenvalues[k]) << ','
        << data::format_number(report.fractions[k]);
    for (std::size_t c = 0; c < report.loadings.cols; ++c) out << ',' << data::format_number(report.loadings(k, c));
    out << '\n';
  }
  return out.str();
}

std::string grid_to_csv(std::span<const double> xs, std::span<const double> ys, const Matrix& values) {
  std::ostringstream out;
  for (double x : xs) out << ',' << data::format_number(x);
  out << '\n';
  for (std::size_t j = 0; j < ys.size(); ++j) {
    out << data::format_number(ys[j]);
    for (std::size_t i = 0; i < xs.size(); ++i) out << ',' << data::format_number(values(j, i));
    out << '\n';
  }
  return out.str();
}

}  // namespace tarml::stats
