#pragma once

#include <cstdint>
#include <vector>

#include "tarml/app/model_dir.hpp"
#include "tarml/data/dataset.hpp"
#include "tarml/models/regressor.hpp"

namespace tarml::app {

// Normalizes `d`, fits one model per target on every row (one shared config or
// one per target) and keeps up to `background_cap` feature rows for
// explanations.
ModelBundle train_bundle(const data::Dataset& d, const std::vector<models::RegressorConfig>& configs,
                         std::uint64_t seed, std::size_t background_cap = 256);

}  // namespace tarml::app
