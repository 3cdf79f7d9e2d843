#include "tarml/models/mlp.hpp"

#include <cmath>
#include <sstream>

#include "tarml/error.hpp"
#include "tarml/rng.hpp"

namespace tarml::models {

std::string_view to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "logistic"; }

Activation parse_activation(std::string_view text) {
  if (text == "tanh") return Activation::kTanh;
  if (text == "logistic") return Activation::kLogistic;
  throw Error("unknown activation \"" + std::string(text) + "\" (expected tanh or logistic)");
}

void validate(const MlpConfig& c) {
  if (c.hidden < 1) throw Error("mlp: hidden width must be >= 1");
  if (c.epochs < 1) throw Error("mlp: epochs must be >= 1");
  if (!(c.step_size > 0.0) || !std::isfinite(c.step_size)) throw Error("mlp: step size must be positive");
}

std::size_t mlp_param_count(std::size_t inputs, std::size_t hidden) { return hidden * inputs + 2 * hidden + 1; }

namespace {

double activate(Activation a, double z) {
  return a == Activation::kTanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
}

// Derivative expressed through the activation value.
double activate_slope(Activation a, double value) {
  return a == Activation::kTanh ? 1.0 - value * value : value * (1.0 - value);
}

double forward(std::size_t inputs, std::size_t hidden, Activation act, std::span<const double> p,
               std::span<const double> x, std::span<double> hidden_out) {
  const double* w1 = p.data();
  const double* b1 = w1 + hidden * inputs;
  const double* w2 = b1 + hidden;
  const double b2 = w2[hidden];
  double out = b2;
  for (std::size_t h = 0; h < hidden; ++h) {
    double z = b1[h];
    for (std::size_t d = 0; d < inputs; ++d) z += w1[h * inputs + d] * x[d];
    const double a = activate(act, z);
    if (!hidden_out.empty()) hidden_out[h] = a;
    out += w2[h] * a;
  }
  return out;
}

}  // namespace

double MlpModel::predict(std::span<const double> x) const {
  if (x.size() != inputs) throw Error("mlp: input width mismatch");
  return forward(inputs, hidden, activation, params, x, {});
}

double mlp_loss(const MlpModel& shape, std::span<const double> params, const Matrix& x,
                std::span<const double> y, std::span<double> gradient) {
  const std::size_t in = shape.inputs;
  const std::size_t hid = shape.hidden;
  const double inv_n = 1.0 / static_cast<double>(x.rows);
  std::vector<double> act(hid);
  double loss = 0.0;
  if (!gradient.empty()) std::fill(gradient.begin(), gradient.end(), 0.0);
  double* g_w1 = gradient.empty() ? nullptr : gradient.data();
  double* g_b1 = g_w1 ? g_w1 + hid * in : nullptr;
  double* g_w2 = g_w1 ? g_b1 + hid : nullptr;
  const double* w2 = params.data() + hid * in + hid;

  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto xi = x.row(i);
    const double err = forward(in, hid, shape.activation, params, xi, act) - y[i];
    loss += err * err * inv_n;
    if (!g_w1) continue;
    const double d_out = 2.0 * err * inv_n;
    g_w2[hid] += d_out;
    for (std::size_t h = 0; h < hid; ++h) {
      g_w2[h] += d_out * act[h];
      const double d_z = d_out * w2[h] * activate_slope(shape.activation, act[h]);
      g_b1[h] += d_z;
      for (std::size_t d = 0; d < in; ++d) g_w1[h * in + d] += d_z * xi[d];
    }
  }
  return loss;
}

MlpModel init_mlp(const MlpConfig& config, std::size_t inputs, double y_mean) {
  validate(config);
  MlpModel m;
  m.inputs = inputs;
  m.hidden = static_cast<std::size_t>(config.hidden);
  m.activation = config.activation;
  m.params.assign(mlp_param_count(inputs, m.hidden), 0.0);
  Rng rng(config.seed);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(m.hidden));
  const std::size_t n_w1 = m.hidden * inputs;
  for (std::size_t k = 0; k < n_w1; ++k) m.params[k] = rng.uniform(-r1, r1);
  for (std::size_t h = 0; h < m.hidden; ++h) m.params[n_w1 + m.hidden + h] = rng.uniform(-r2, r2);
  m.params.back() = y_mean;
  return m;
}

MlpModel train_mlp(const MlpConfig& config, const Matrix& x, std::span<const double> y) {
  validate(config);
  if (x.rows == 0 || y.size() != x.rows) throw Error("mlp: training data is empty or mismatched");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());

  MlpModel m = init_mlp(config, x.cols, mean);
  std::vector<double> grad(m.params.size());
  double loss = 0.0;
  for (int e = 0; e < config.epochs; ++e) {
    loss = mlp_loss(m, m.params, x, y, grad);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "mlp: training diverged (non-finite loss at epoch " << e << "); reduce the step size "
          << config.step_size;
      throw Error(msg.str());
    }
    for (std::size_t k = 0; k < grad.size(); ++k) m.params[k] -= config.step_size * grad[k];
  }
  loss = mlp_loss(m, m.params, x, y, {});
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "mlp: training diverged (non-finite final loss); reduce the step size " << config.step_size;
    throw Error(msg.str());
  }
  m.training_mse = loss;
  return m;
}

}  // namespace tarml::models
