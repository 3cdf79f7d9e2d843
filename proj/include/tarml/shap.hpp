#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tarml/data/schema.hpp"
#include "tarml/exec.hpp"
#include "tarml/matrix.hpp"
#include "tarml/models/lsboost.hpp"
#include "tarml/models/regressor.hpp"
#include "tarml/models/tree.hpp"

namespace tarml::shap {

// Interventional Shapley attribution of one prediction against a background
// set: base + sum(values) == prediction.
struct ShapExplanation {
  std::vector<double> instance;
  double base = 0.0;  // mean model output over the background
  std::vector<double> values;
  double prediction = 0.0;
  std::string target;

  double total() const;  // base + sum(values)
};

// Exact values for one tree, scaled by `scale` and added into `phi`; returns
// the tree's mean output over the background. Each background row z
// contributes the Shapley values of the game v(S) = tree(x_S, z_rest), found by
// a single traversal that follows x and z together and only branches where
// they disagree.
double tree_shap_accumulate(const models::RegressionTree& tree, std::span<const double> x, const Matrix& background,
                            std::span<double> phi, double scale = 1.0);

// Boosted ensemble in normalized units: sum over trees of learning_rate * tree values.
ShapExplanation shap_tree(const models::LsBoostModel& model, std::span<const double> x_unit,
                          const Matrix& background_unit);
// Regressor in original units. Throws for non-tree families.
ShapExplanation shap_tree(const models::Regressor& model, std::span<const double> x, const Matrix& background);

using Predictor = std::function<double(std::span<const double>)>;

struct SamplingOptions {
  std::size_t permutations = 2048;
  std::uint64_t seed = 1;
  // Enumerate every ordering of the active features against every background
  // row instead of sampling. Exact; cost grows as d!.
  bool exhaustive = false;
  // Features that take part in the game; the others stay at the instance
  // value. Empty = all.
  std::vector<std::size_t> active;
};

// Permutation estimator. Sampled mode pairs each random ordering with one
// random background row, and the base is the mean output over those rows, so
// base + sum(values) equals f(x) in both modes.
ShapExplanation shap_sampling(const Predictor& f, std::span<const double> x, const Matrix& background,
                              const SamplingOptions& options);
ShapExplanation shap_sampling(const models::Regressor& model, std::span<const double> x, const Matrix& background,
                              const SamplingOptions& options);

// Tree algorithm for lsboost, sampling otherwise (original units).
ShapExplanation explain(const models::Regressor& model, std::span<const double> x, const Matrix& background,
                        const SamplingOptions& fallback = {});

// One explanation per row of `instances`; rows are independent.
std::vector<ShapExplanation> explain_batch(const models::Regressor& model, const Matrix& instances,
                                           const Matrix& background, Exec exec,
                                           const SamplingOptions& fallback = {});

inline constexpr std::size_t kBackgroundCap = 256;

// All rows when there are at most `cap`, else a seeded sample of `cap` rows
// kept in their original order.
Matrix select_background(const Matrix& rows, std::size_t cap = kBackgroundCap, std::uint64_t seed = 1);

struct ShapSummary {
  std::vector<double> max_abs;   // per feature
  std::vector<double> mean_abs;  // per feature
  std::vector<std::size_t> order;  // descending max_abs, ties by index
  // Share of total mean |value| held by each group, in percent. Absent when
  // every attribution is zero.
  std::optional<double> operating_pct;
  std::optional<double> catalyst_pct;
};

ShapSummary summarize(std::span<const ShapExplanation> explanations, const data::FeatureSchema& schema);

// feature,value,shap rows followed by base and prediction.
std::string explanation_to_csv(const ShapExplanation& e, const data::FeatureSchema& schema);
// instance,feature,value,shap rows for several explanations.
std::string explanations_to_csv(std::span<const ShapExplanation> explanations, const data::FeatureSchema& schema);
// rank,feature,group,max_abs_shap,mean_abs_shap rows, then group,percent rows.
std::string summary_to_csv(const ShapSummary& s, const data::FeatureSchema& schema);

}  // namespace tarml::shap
