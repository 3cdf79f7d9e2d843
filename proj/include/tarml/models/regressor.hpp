#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tarml/data/schema.hpp"
#include "tarml/exec.hpp"
#include "tarml/matrix.hpp"
#include "tarml/models/gpr.hpp"
#include "tarml/models/lsboost.hpp"
#include "tarml/models/mlp.hpp"

namespace tarml::models {

enum class Family { kLsBoost, kGpr, kMlp };

std::string_view to_string(Family f);
Family parse_family(std::string_view text);

using RegressorConfig = std::variant<LsBoostConfig, GprConfig, MlpConfig>;

Family family_of(const RegressorConfig& config);
void validate(const RegressorConfig& config);
// Canonical single-line form, e.g. "lsboost max_splits=6 min_leaf=5 cycles=250
// learning_rate=0.295". Equal configs give equal text.
std::string describe(const RegressorConfig& config);

using FittedModel = std::variant<LsBoostModel, GprModel, MlpModel>;

struct TrainingInfo {
  std::uint64_t seed = 0;
  std::optional<std::size_t> fold;  // CV fold held out, when trained inside CV
  std::size_t rows = 0;
  double training_mse = 0.0;  // normalized space
};

// Affine maps between original units and the [0, 1] space the model was fit in.
struct ModelScaling {
  std::vector<data::Bounds> features;
  data::Bounds target{0.0, 1.0};

  static ModelScaling identity(std::size_t features);
  friend bool operator==(const ModelScaling&, const ModelScaling&) = default;
};

struct Prediction {
  double value = 0.0;
  std::optional<double> variance;  // GPR only
};

// A trained model for one target. Immutable after construction.
class Regressor {
 public:
  Regressor(RegressorConfig config, FittedModel model, ModelScaling scaling, std::string schema_fingerprint,
            std::string target, TrainingInfo info);

  Family family() const { return family_of(config_); }
  const RegressorConfig& config() const { return config_; }
  const FittedModel& model() const { return model_; }
  const LsBoostModel* lsboost() const { return std::get_if<LsBoostModel>(&model_); }
  const ModelScaling& scaling() const { return scaling_; }
  const std::string& schema_fingerprint() const { return fingerprint_; }
  const std::string& target() const { return target_; }
  const TrainingInfo& info() const { return info_; }
  std::size_t input_width() const { return scaling_.features.size(); }

  // Normalized in, normalized out.
  double predict_unit(std::span<const double> x_unit) const;
  // Original units in and out.
  Prediction predict(std::span<const double> x) const;
  // As above, but rejects callers built against a different schema.
  Prediction predict(std::span<const double> x, std::string_view expected_fingerprint) const;

  std::vector<double> to_unit(std::span<const double> x) const;
  double target_from_unit(double u) const;

 private:
  RegressorConfig config_;
  FittedModel model_;
  ModelScaling scaling_;
  std::string fingerprint_;
  std::string target_;
  TrainingInfo info_;
};

// Fits on already-normalized data and attaches `scaling` for original-unit use.
Regressor train_regressor(const RegressorConfig& config, const Matrix& x_unit, std::span<const double> y_unit,
                          ModelScaling scaling, std::string schema_fingerprint = {}, std::string target = {},
                          TrainingInfo info = {});

// Predictions for every row of x (original units).
std::vector<double> predict_batch(const Regressor& model, const Matrix& x, Exec exec);

inline constexpr std::string_view kArtifactVersion = "v1";

std::string save_artifact(const Regressor& model);
Regressor load_artifact(std::string_view text);
void save_artifact_file(const Regressor& model, const std::string& path);
Regressor load_artifact_file(const std::string& path);

}  // namespace tarml::models
