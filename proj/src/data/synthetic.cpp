#include "tarml/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tarml/error.hpp"
#include "tarml/rng.hpp"

namespace tarml::data {

std::array<Bounds, kFeatureCount> synthetic_feature_bounds() {
  return {{{5.0, 40.0},
           {20.0, 95.0},
           {5.0, 300.0},
           {0.05, 0.8},
           {0.1, 2.0},
           {20.0, 200.0},
           {0.5, 5.0},
           {25.0, 600.0},
           {450.0, 900.0},
           {10.0, 600.0},
           {6.0, 30.0}}};
}

std::array<double, kTargetCount> synthetic_response(const std::array<double, kFeatureCount>& x) {
  const auto b = synthetic_feature_bounds();
  std::array<double, kFeatureCount> u{};
  for (std::size_t d = 0; d < kFeatureCount; ++d) u[d] = (x[d] - b[d].min) / b[d].span();
  const double size = u[0], ci = u[1], bet = u[2], pore = u[3], load = u[4], flow = u[5];
  const double sc = u[6], gas = u[7], temp = u[8], time = u[9], diam = u[10];
  const double pi = std::numbers::pi;

  const double conversion = 50.0 + 28.0 * std::tanh(3.0 * (temp - 0.45)) + 10.0 * std::sin(pi * sc) -
                            12.0 * time + 6.0 * bet - 5.0 * size + 4.0 * load * (1.0 - flow);
  const double h2 = 40.0 + 15.0 * std::tanh(3.0 * (temp - 0.5)) +
                    8.0 * std::exp(-(sc - 0.4) * (sc - 0.4) / 0.05) - 5.0 * time + 4.0 * pore + 3.0 * gas;
  const double co = 20.0 - 6.0 * sc + 8.0 * temp * temp - 4.0 * ci + 3.0 * flow + 2.0 * std::sin(2.0 * pi * diam);
  const double co2 = 15.0 + 6.0 * sc - 4.0 * temp + 3.0 * std::cos(pi * bet) + 2.0 * load;
  const double ch4 = 10.0 - 7.0 * temp + 3.0 * time + 2.0 * size + 2.0 * std::exp(-5.0 * diam);
  return {conversion, h2, co, co2, ch4};
}

Dataset make_synthetic(std::size_t n, std::uint64_t seed, double noise_fraction) {
  if (n == 0) throw Error("synthetic data: row count must be positive");
  if (!(noise_fraction >= 0.0)) throw Error("synthetic data: noise fraction must be non-negative");
  const auto bounds = synthetic_feature_bounds();
  Rng rng(seed);
  Dataset d;
  d.rows.resize(n);
  for (auto& row : d.rows) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) row.features[f] = rng.uniform(bounds[f].min, bounds[f].max);
    row.targets = synthetic_response(row.features);
  }
  for (std::size_t t = 0; t < kTargetCount; ++t) {
    const auto [lo, hi] = std::minmax_element(d.rows.begin(), d.rows.end(), [&](const Sample& a, const Sample& b) {
      return a.targets[t] < b.targets[t];
    });
    const double sd = noise_fraction * (hi->targets[t] - lo->targets[t]);
    for (auto& row : d.rows) row.targets[t] = std::clamp(row.targets[t] + sd * rng.normal(), 0.0, 100.0);
  }
  return d;
}

}  // namespace tarml::data
