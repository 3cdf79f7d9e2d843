#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tarml/matrix.hpp"

namespace tarml::models {

struct GprConfig {
  double signal_variance = 1.0;
  double lengthscale = 0.5;               // shared across dimensions
  std::vector<double> lengthscales;       // per-dimension override when non-empty
  double noise_variance = 1e-4;

  friend bool operator==(const GprConfig&, const GprConfig&) = default;
};

void validate(const GprConfig& config);

struct GprPrediction {
  double mean = 0.0;
  double variance = 0.0;  // latent-function variance, clamped at zero
};

// Squared-exponential kernel k(a, b) = v exp(-sum_d (a_d - b_d)^2 / (2 l_d^2)).
class GprModel {
 public:
  GprModel() = default;
  // Factorizes K + (noise + jitter) I. `jitter` is the escalation step that
  // succeeded at training time.
  GprModel(GprConfig config, Matrix inputs, std::vector<double> alpha, double y_mean, double jitter);

  GprPrediction predict(std::span<const double> x) const;
  double predict_mean(std::span<const double> x) const;

  const GprConfig& config() const { return config_; }
  const Matrix& inputs() const { return inputs_; }
  const std::vector<double>& alpha() const { return alpha_; }
  double y_mean() const { return y_mean_; }
  double jitter() const { return jitter_; }

  double kernel(std::span<const double> a, std::span<const double> b) const;

 private:
  GprConfig config_;
  Matrix inputs_;
  std::vector<double> alpha_;
  double y_mean_ = 0.0;
  double jitter_ = 0.0;
  std::vector<double> inv_sq_length_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
};

// Cholesky of the Gram matrix with jitter escalation 0, 1e-10, 1e-9, ..., 1e-6.
GprModel train_gpr(const GprConfig& config, const Matrix& x, std::span<const double> y);

}  // namespace tarml::models
