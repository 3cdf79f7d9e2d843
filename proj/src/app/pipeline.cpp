#include "tarml/app/pipeline.hpp"

#include <numeric>

#include "tarml/data/preprocess.hpp"
#include "tarml/error.hpp"
#include "tarml/metrics.hpp"
#include "tarml/shap.hpp"

namespace tarml::app {

ModelBundle train_bundle(const data::Dataset& d, const std::vector<models::RegressorConfig>& configs,
                         std::uint64_t seed, std::size_t background_cap) {
  if (configs.size() != 1 && configs.size() != data::kTargetCount) {
    throw Error("expected 1 shared config or one per target");
  }
  const auto [unit, scaling] = data::normalize(d);
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const Matrix x = metrics::feature_matrix(unit, rows);
  const std::string fingerprint = d.schema.fingerprint();

  std::vector<models::Regressor> trained;
  for (std::size_t t = 0; t < data::kTargetCount; ++t) {
    const auto& config = configs.size() == 1 ? configs.front() : configs[t];
    const auto y = metrics::target_column(unit, t, rows);
    models::TrainingInfo info;
    info.seed = seed;
    info.rows = d.size();
    trained.push_back(models::train_regressor(config, x, y, metrics::model_scaling(scaling, t), fingerprint,
                                              d.schema.targets()[t].key, info));
  }
  return make_bundle(std::move(trained),
                     shap::select_background(metrics::feature_matrix(d, rows), background_cap, seed));
}

}  // namespace tarml::app
