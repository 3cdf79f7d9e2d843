#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tarml/matrix.hpp"

namespace tarml::models {

enum class Activation { kTanh, kLogistic };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

struct MlpConfig {
  int hidden = 8;
  Activation activation = Activation::kTanh;
  int epochs = 2000;
  double step_size = 0.1;
  std::uint64_t seed = 1;

  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

void validate(const MlpConfig& config);

// One hidden layer: out = w2 . act(W1 x + b1) + b2. Parameters are packed as
// [W1 row-major (hidden x inputs), b1, w2, b2] for gradient checks.
struct MlpModel {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  Activation activation = Activation::kTanh;
  std::vector<double> params;
  double training_mse = 0.0;

  double predict(std::span<const double> x) const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

std::size_t mlp_param_count(std::size_t inputs, std::size_t hidden);

// Mean squared error of `params` on (x, y); fills `gradient` (same length as
// params) when non-empty.
double mlp_loss(const MlpModel& shape, std::span<const double> params, const Matrix& x,
                std::span<const double> y, std::span<double> gradient);

// Seeded uniform initialisation: W1 ~ U(+-1/sqrt(inputs)), w2 ~ U(+-1/sqrt(hidden)),
// b1 = 0, b2 = mean(y).
MlpModel init_mlp(const MlpConfig& config, std::size_t inputs, double y_mean);

// Full-batch gradient descent on MSE.
MlpModel train_mlp(const MlpConfig& config, const Matrix& x, std::span<const double> y);

}  // namespace tarml::models
