#pragma once

#include "json.hpp"
#include "tarml/models/regressor.hpp"

namespace tarml::models {

// {"family": "lsboost", "max_splits": 6, ...}; the same object sits under
// "config" in a saved artifact.
nlohmann::json config_to_json(const RegressorConfig& config);
RegressorConfig config_from_json(const nlohmann::json& j);

}  // namespace tarml::models
