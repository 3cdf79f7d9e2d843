#include "tarml/models/gpr.hpp"

#include <cmath>

#include "tarml/error.hpp"
#include "tarml/models/kernels.hpp"

namespace tarml::models {

void validate(const GprConfig& c) {
  if (!(c.signal_variance > 0.0)) throw Error("gpr: signal variance must be positive");
  if (!(c.lengthscale > 0.0)) throw Error("gpr: lengthscale must be positive");
  for (double l : c.lengthscales) {
    if (!(l > 0.0)) throw Error("gpr: lengthscales must be positive");
  }
  if (!(c.noise_variance > 0.0)) throw Error("gpr: noise variance must be positive");
}

namespace {

std::vector<double> inverse_square_lengths(const GprConfig& c, std::size_t dims) {
  if (!c.lengthscales.empty() && c.lengthscales.size() != dims) {
    throw Error("gpr: " + std::to_string(c.lengthscales.size()) + " lengthscales for " +
                std::to_string(dims) + " input dimensions");
  }
  std::vector<double> out(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const double l = c.lengthscales.empty() ? c.lengthscale : c.lengthscales[d];
    out[d] = 1.0 / (l * l);
  }
  return out;
}

}  // namespace

double squared_exponential(std::span<const double> a, std::span<const double> b,
                           std::span<const double> inv_sq_length, double signal_variance) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff * inv_sq_length[d];
  }
  return signal_variance * std::exp(-0.5 * s);
}

GprModel::GprModel(GprConfig config, Matrix inputs, std::vector<double> alpha, double y_mean, double jitter)
    : config_(std::move(config)),
      inputs_(std::move(inputs)),
      alpha_(std::move(alpha)),
      y_mean_(y_mean),
      jitter_(jitter),
      inv_sq_length_(inverse_square_lengths(config_, inputs_.cols)) {
  Eigen::MatrixXd k = gram_matrix(inputs_, inv_sq_length_, config_.signal_variance, Exec::kParallel);
  k.diagonal().array() += config_.noise_variance + jitter_;
  chol_.compute(k);
  if (chol_.info() != Eigen::Success) throw Error("gpr: stored model's Gram matrix is not positive definite");
}

double GprModel::kernel(std::span<const double> a, std::span<const double> b) const {
  return squared_exponential(a, b, inv_sq_length_, config_.signal_variance);
}

double GprModel::predict_mean(std::span<const double> x) const {
  if (x.size() != inputs_.cols) throw Error("gpr: input width mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < inputs_.rows; ++i) s += kernel(x, inputs_.row(i)) * alpha_[i];
  return y_mean_ + s;
}

GprPrediction GprModel::predict(std::span<const double> x) const {
  if (x.size() != inputs_.cols) throw Error("gpr: input width mismatch");
  Eigen::VectorXd kx(static_cast<Eigen::Index>(inputs_.rows));
  for (std::size_t i = 0; i < inputs_.rows; ++i) kx[static_cast<Eigen::Index>(i)] = kernel(x, inputs_.row(i));
  const Eigen::VectorXd v = chol_.matrixL().solve(kx);
  const double var = config_.signal_variance - v.squaredNorm();
  return {predict_mean(x), std::max(var, 0.0)};
}

GprModel train_gpr(const GprConfig& config, const Matrix& x, std::span<const double> y) {
  validate(config);
  const std::size_t n = x.rows;
  if (n < 1 || y.size() != n) throw Error("gpr: training data is empty or mismatched");
  double mean = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) throw Error("gpr: non-finite target value");
    mean += v;
  }
  mean /= static_cast<double>(n);
  for (double v : x.data) {
    if (!std::isfinite(v)) throw Error("gpr: non-finite feature value");
  }

  const auto inv_sq = inverse_square_lengths(config, x.cols);
  const Eigen::MatrixXd gram = gram_matrix(x, inv_sq, config.signal_variance, Exec::kParallel);
  Eigen::VectorXd centered(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) centered[static_cast<Eigen::Index>(i)] = y[i] - mean;

  const double steps[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  for (double jitter : steps) {
    Eigen::MatrixXd k = gram;
    k.diagonal().array() += config.noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd alpha = llt.solve(centered);
    if (!alpha.allFinite()) continue;
    return GprModel(config, x, std::vector<double>(alpha.data(), alpha.data() + alpha.size()), mean, jitter);
  }
  throw Error("gpr: Gram matrix is not positive definite even with 1e-6 jitter");
}

}  // namespace tarml::models
