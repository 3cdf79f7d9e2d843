// Serial reference vs OpenMP kernels. Each benchmark takes one argument:
// 0 runs Exec::kSerial, 1 runs Exec::kParallel.

#include <benchmark/benchmark.h>

#include <vector>

#include "tarml/data/preprocess.hpp"
#include "tarml/data/synthetic.hpp"
#include "tarml/metrics.hpp"
#include "tarml/models/kernels.hpp"
#include "tarml/models/regressor.hpp"
#include "tarml/rng.hpp"
#include "tarml/shap.hpp"
#include "tarml/stats.hpp"

using namespace tarml;

namespace {

Exec mode(const benchmark::State& state) { return state.range(0) == 0 ? Exec::kSerial : Exec::kParallel; }

const data::Dataset& unit_data() {
  static const data::Dataset d = data::normalize(data::make_synthetic(400, 17)).first;
  return d;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.uniform();
  return m;
}

const models::Regressor& boosted() {
  static const models::Regressor m = [] {
    const auto& d = unit_data();
    std::vector<std::size_t> rows(d.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return models::train_regressor(models::LsBoostConfig{6, 5, 200, 0.2}, metrics::feature_matrix(d, rows),
                                   metrics::target_column(d, 0, rows), models::ModelScaling::identity(11),
                                   d.schema.fingerprint(), "conversion");
  }();
  return m;
}

void BM_GramMatrix(benchmark::State& state) {
  const auto x = random_matrix(600, 11, 1);
  const std::vector<double> inv(11, 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(models::gram_matrix(x, inv, 1.0, mode(state)));
}

void BM_PredictBatch(benchmark::State& state) {
  const auto x = random_matrix(20000, 11, 2);
  for (auto _ : state) benchmark::DoNotOptimize(models::predict_batch(boosted(), x, mode(state)));
}

void BM_ExplainBatch(benchmark::State& state) {
  const auto instances = random_matrix(64, 11, 3);
  const auto background = random_matrix(64, 11, 4);
  for (auto _ : state) benchmark::DoNotOptimize(shap::explain_batch(boosted(), instances, background, mode(state)));
}

void BM_Kde2d(benchmark::State& state) {
  const auto& d = unit_data();
  const auto x = d.column(0), y = d.column(11);
  for (auto _ : state) benchmark::DoNotOptimize(stats::kde2d(x, y, stats::GridSpec{}, mode(state)));
}

void BM_SpearmanMatrix(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(stats::spearman_matrix(unit_data(), mode(state)));
}

void BM_EvaluateCv(benchmark::State& state) {
  const auto& d = unit_data();
  const auto plan = data::kfold_split(d.size(), 5, 9);
  metrics::CvSetup setup;
  setup.configs = {models::LsBoostConfig{4, 5, 60, 0.2}};
  for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate_cv(setup, d, plan, nullptr, mode(state)));
}

}  // namespace

BENCHMARK(BM_GramMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExplainBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Kde2d)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpearmanMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateCv)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
