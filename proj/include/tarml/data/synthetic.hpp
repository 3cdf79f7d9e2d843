#pragma once

#include <array>
#include <cstdint>

#include "tarml/data/dataset.hpp"

namespace tarml::data {

// Plausible value ranges of the 11 features, used to draw synthetic inputs.
std::array<Bounds, kFeatureCount> synthetic_feature_bounds();

// Noise-free responses at a feature vector in original units. Each target is a
// smooth, mostly additive function of a few features, inside [0, 100].
std::array<double, kTargetCount> synthetic_response(const std::array<double, kFeatureCount>& features);

// n rows with features uniform in synthetic_feature_bounds() and targets from
// synthetic_response plus Gaussian noise whose standard deviation is
// `noise_fraction` of the target's noise-free range over the sample. Targets
// are clipped to [0, 100].
Dataset make_synthetic(std::size_t n, std::uint64_t seed, double noise_fraction = 0.02);

}  // namespace tarml::data
