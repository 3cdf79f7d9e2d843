#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tarml/data/schema.hpp"
#include "tarml/matrix.hpp"
#include "tarml/models/regressor.hpp"

namespace tarml::app {

// The five per-target models a service answers from, plus the rows explanations
// are measured against. Immutable once built.
struct ModelBundle {
  data::FeatureSchema schema;  // canonical, bounds = training bounds
  std::string fingerprint;
  std::vector<models::Regressor> models;  // schema target order
  Matrix background;  // original units, 11 columns; may be empty

  const data::Bounds& training_bounds(std::size_t feature) const { return schema.features()[feature].bounds; }
  // True where x lies outside the training bounds.
  std::vector<bool> extrapolation(std::span<const double> x) const;
};

// Checks that there is one model per target, in order, sharing one fingerprint
// and one feature scaling; the scaling supplies the training bounds.
ModelBundle make_bundle(std::vector<models::Regressor> models, Matrix background = {});

// Directory layout: <target-key>.v1 artifacts, `schema` holding the
// fingerprint, and background.csv (feature keys as header) when present.
void save_model_dir(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_model_dir(const std::filesystem::path& dir);

std::string background_to_csv(const Matrix& rows);
Matrix parse_background_csv(std::string_view text);

}  // namespace tarml::app
