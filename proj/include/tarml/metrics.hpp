#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tarml/data/dataset.hpp"
#include "tarml/data/preprocess.hpp"
#include "tarml/exec.hpp"
#include "tarml/models/regressor.hpp"

namespace tarml::metrics {

// 1 - SS_res / SS_tot. Needs at least 2 points and a non-constant y.
double r2(std::span<const double> y, std::span<const double> y_hat);
double mae(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);

struct Scores {
  std::optional<double> r2;  // absent when undefined (size-1 fold, constant y)
  double mae = 0.0;
  double rmse = 0.0;
};

Scores score(std::span<const double> y, std::span<const double> y_hat);

struct Spread {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t count = 0;
};

Spread spread(std::span<const double> values);

enum class Phase { kTrain, kTest };

struct PhaseScores {
  std::vector<Scores> folds;
  Spread r2;
  Spread mae;
  Spread rmse;
};

struct TargetEval {
  std::string target;  // schema key
  PhaseScores train;
  PhaseScores test;

  const PhaseScores& phase(Phase p) const { return p == Phase::kTrain ? train : test; }
};

struct EvalReport {
  std::vector<TargetEval> targets;
  bool original_units = false;

  // Mean test RMSE over targets (the tuning objective).
  double mean_test_rmse() const;

  std::string to_table() const;
  std::string to_json() const;
  // target,phase,fold,r2,mae,rmse rows (per-fold score lists).
  std::string to_violin_csv() const;
};

// One config per target (5 entries) or a single shared config.
struct CvSetup {
  std::vector<models::RegressorConfig> configs;
  std::vector<std::size_t> targets;  // target indices to evaluate; empty = all 5
  std::uint64_t seed = 0;
};

// Trains on the complement of each fold of a normalized dataset and scores
// train and test rows. With `scaling`, scores are computed in original units.
// Fails when a training partition has fewer than 2 rows.
EvalReport evaluate_cv(const CvSetup& setup, const data::Dataset& unit_data, const data::FoldPlan& plan,
                       const data::ScalingSpec* scaling = nullptr, Exec exec = Exec::kParallel);

// Column slice helpers shared with the tuner and CLI.
Matrix feature_matrix(const data::Dataset& d, std::span<const std::size_t> rows);
std::vector<double> target_column(const data::Dataset& d, std::size_t target, std::span<const std::size_t> rows);
models::ModelScaling model_scaling(const data::ScalingSpec& spec, std::size_t target);

}  // namespace tarml::metrics
