#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tarml/data/dataset.hpp"
#include "tarml/data/preprocess.hpp"
#include "tarml/metrics.hpp"
#include "tarml/models/regressor.hpp"
#include "tarml/swarm.hpp"

namespace tarml::tuning {

enum class ParamKind { kContinuous, kInteger, kCategorical };

// One tunable field of a RegressorConfig. Each maps a coordinate p in [0, 1]:
//   continuous   lo + p (hi - lo)       (geometric between lo and hi when log_scale)
//   integer      lo + round(p (hi - lo))
//   categorical  choices[min(floor(p m), m - 1)]
// A descriptor with lo == hi (or one choice) is pinned.
struct HyperParam {
  std::string name;
  ParamKind kind = ParamKind::kContinuous;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
  std::vector<std::string> choices;

  bool pinned() const;
};

struct SearchSpace {
  models::Family family = models::Family::kLsBoost;
  std::vector<HyperParam> params;
  // Values for fields the space does not mention.
  models::RegressorConfig base = models::LsBoostConfig{};
};

void validate(const SearchSpace& space);

// Default spaces. lsboost: max_splits [1, 32], min_leaf [1, 20], cycles [50, 500],
// learning_rate [0.001, 1]. gpr: log-scaled variances and lengthscale. mlp:
// hidden [2, 32], activation {tanh, logistic}, epochs [200, 5000], log step size.
SearchSpace default_space(models::Family family);
// Every field pinned to the given config.
SearchSpace pinned_space(const models::RegressorConfig& config);

models::RegressorConfig decode(std::span<const double> point, const SearchSpace& space);
std::vector<double> encode(const models::RegressorConfig& config, const SearchSpace& space);

struct TraceEntry {
  std::size_t iteration = 0;
  std::size_t particle = 0;
  std::string config;  // describe() of the decoded config
  double objective = 0.0;  // +infinity for failed trainings
  std::string error;
};

struct TuneOptions {
  swarm::PsoParams pso;  // bounds are replaced by the unit box
  std::vector<std::size_t> targets;  // empty = mean over all five
  bool parallel_candidates = true;
};

struct TuneResult {
  models::RegressorConfig best;
  double best_objective = std::numeric_limits<double>::infinity();
  metrics::EvalReport report;  // of the best config
  std::vector<TraceEntry> trace;
  std::size_t trainings = 0;  // distinct configs actually cross-validated

  std::string trace_to_text() const;
};

// PSO over the unit box of `space`; a point's objective is the mean test RMSE
// (normalized space) over folds and selected targets of its decoded config.
// Failed trainings score +infinity and the search continues. Decoded configs
// are cached, so repeated points are not retrained.
TuneResult tune(const SearchSpace& space, const data::Dataset& unit_data, const data::FoldPlan& plan,
                const TuneOptions& options);

}  // namespace tarml::tuning
