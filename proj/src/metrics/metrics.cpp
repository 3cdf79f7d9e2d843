#include "tarml/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "tarml/error.hpp"
#include "tarml/parallel.hpp"

namespace tarml::metrics {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> y_hat, std::size_t min_len) {
  if (y.size() != y_hat.size()) {
    throw Error("length mismatch: " + std::to_string(y.size()) + " observations vs " +
                std::to_string(y_hat.size()) + " predictions");
  }
  if (y.size() < min_len) throw Error("need at least " + std::to_string(min_len) + " observations");
}

}  // namespace

double r2(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat, 2);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw Error("R2 undefined: observations are constant");
  return 1.0 - ss_res / ss_tot;
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

Scores score(std::span<const double> y, std::span<const double> y_hat) {
  Scores s;
  s.mae = mae(y, y_hat);
  s.rmse = rmse(y, y_hat);
  if (y.size() >= 2) {
    const bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
    if (!constant) s.r2 = r2(y, y_hat);
  }
  return s;
}

Spread spread(std::span<const double> values) {
  Spread s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

namespace {

void summarize(PhaseScores& p) {
  std::vector<double> r2s, maes, rmses;
  for (const auto& f : p.folds) {
    if (f.r2) r2s.push_back(*f.r2);
    maes.push_back(f.mae);
    rmses.push_back(f.rmse);
  }
  p.r2 = spread(r2s);
  p.mae = spread(maes);
  p.rmse = spread(rmses);
}

}  // namespace

Matrix feature_matrix(const data::Dataset& d, std::span<const std::size_t> rows) {
  Matrix m(rows.size(), data::kFeatureCount);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = d.rows.at(rows[r]).features;
    std::copy(f.begin(), f.end(), m.row(r).begin());
  }
  return m;
}

std::vector<double> target_column(const data::Dataset& d, std::size_t target, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(d.rows.at(r).targets.at(target));
  return out;
}

models::ModelScaling model_scaling(const data::ScalingSpec& spec, std::size_t target) {
  models::ModelScaling s;
  s.features.assign(spec.columns.begin(), spec.columns.begin() + data::kFeatureCount);
  s.target = spec.columns.at(data::kFeatureCount + target);
  return s;
}

EvalReport evaluate_cv(const CvSetup& setup, const data::Dataset& unit_data, const data::FoldPlan& plan,
                       const data::ScalingSpec* scaling, Exec exec) {
  if (setup.configs.empty()) throw Error("evaluate_cv: no model config");
  if (setup.configs.size() != 1 && setup.configs.size() != data::kTargetCount) {
    throw Error("evaluate_cv: expected 1 shared config or one per target");
  }
  if (plan.total() != unit_data.size()) throw Error("evaluate_cv: fold plan does not cover the dataset");
  std::vector<std::size_t> targets = setup.targets;
  if (targets.empty()) {
    for (std::size_t t = 0; t < data::kTargetCount; ++t) targets.push_back(t);
  }
  const std::size_t k = plan.folds.size();
  for (std::size_t f = 0; f < k; ++f) {
    if (unit_data.size() - plan.folds[f].size() < 2) {
      throw Error("evaluate_cv: fold " + std::to_string(f) + " leaves fewer than 2 training rows");
    }
  }

  struct Cell {
    Scores train, test;
  };
  std::vector<Cell> cells(targets.size() * k);
  for_each_index(cells.size(), exec, [&](std::size_t job) {
    const std::size_t t = targets[job / k];
    const std::size_t f = job % k;
    const auto& config = setup.configs.size() == 1 ? setup.configs.front() : setup.configs[t];
    const auto train_rows = plan.complement(f);
    const auto& test_rows = plan.folds[f];
    const Matrix x_train = feature_matrix(unit_data, train_rows);
    const auto y_train = target_column(unit_data, t, train_rows);
    const Matrix x_test = feature_matrix(unit_data, test_rows);
    const auto y_test = target_column(unit_data, t, test_rows);
    models::TrainingInfo info;
    info.seed = setup.seed;
    info.fold = f;
    const auto model = models::train_regressor(config, x_train, y_train,
                                               models::ModelScaling::identity(data::kFeatureCount), {}, {}, info);
    auto scored = [&](const Matrix& x, const std::vector<double>& y) {
      std::vector<double> pred(x.rows), obs(y);
      for (std::size_t i = 0; i < x.rows; ++i) pred[i] = model.predict_unit(x.row(i));
      if (scaling) {
        const std::size_t c = data::kFeatureCount + t;
        for (auto& v : pred) v = scaling->from_unit(c, v);
        for (auto& v : obs) v = scaling->from_unit(c, v);
      }
      return score(obs, pred);
    };
    cells[job] = {scored(x_train, y_train), scored(x_test, y_test)};
  });

  EvalReport report;
  report.original_units = scaling != nullptr;
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    TargetEval te;
    te.target = unit_data.schema.targets()[targets[ti]].key;
    for (std::size_t f = 0; f < k; ++f) {
      te.train.folds.push_back(cells[ti * k + f].train);
      te.test.folds.push_back(cells[ti * k + f].test);
    }
    summarize(te.train);
    summarize(te.test);
    report.targets.push_back(std::move(te));
  }
  return report;
}

double EvalReport::mean_test_rmse() const {
  if (targets.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : targets) s += t.test.rmse.mean;
  return s / static_cast<double>(targets.size());
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(12) << "target" << std::setw(7) << "phase" << std::right << std::setw(20)
      << "R2 mean+-sd" << std::setw(22) << "MAE mean+-sd" << std::setw(22) << "RMSE mean+-sd" << "\n";
  auto cell = [](const Spread& s) {
    std::ostringstream c;
    if (s.count == 0) {
      c << "n/a";
    } else {
      c << std::fixed << std::setprecision(4) << s.mean << " +- " << s.stddev;
    }
    return c.str();
  };
  for (const auto& t : targets) {
    for (Phase p : {Phase::kTrain, Phase::kTest}) {
      const auto& ps = t.phase(p);
      out << std::left << std::setw(12) << t.target << std::setw(7) << (p == Phase::kTrain ? "train" : "test")
          << std::right << std::setw(20) << cell(ps.r2) << std::setw(22) << cell(ps.mae) << std::setw(22)
          << cell(ps.rmse) << "\n";
    }
  }
  return out.str();
}

std::string EvalReport::to_json() const {
  using nlohmann::json;
  json j;
  j["units"] = original_units ? "original" : "normalized";
  json targets_json = json::array();
  auto spread_json = [](const Spread& s) {
    return json{{"mean", s.mean}, {"stddev", s.stddev}, {"count", s.count}};
  };
  for (const auto& t : targets) {
    json tj;
    tj["target"] = t.target;
    for (Phase p : {Phase::kTrain, Phase::kTest}) {
      const auto& ps = t.phase(p);
      json folds = json::array();
      for (const auto& f : ps.folds) {
        folds.push_back({{"r2", f.r2 ? json(*f.r2) : json(nullptr)}, {"mae", f.mae}, {"rmse", f.rmse}});
      }
      tj[p == Phase::kTrain ? "train" : "test"] = {
          {"folds", std::move(folds)},
          {"r2", spread_json(ps.r2)},
          {"mae", spread_json(ps.mae)},
          {"rmse", spread_json(ps.rmse)}};
    }
    targets_json.push_back(std::move(tj));
  }
  j["targets"] = std::move(targets_json);
  return j.dump(2) + "\n";
}

std::string EvalReport::to_violin_csv() const {
  std::ostringstream out;
  out << "target,phase,fold,r2,mae,rmse\n";
  for (const auto& t : targets) {
    for (Phase p : {Phase::kTrain, Phase::kTest}) {
      const auto& ps = t.phase(p);
      for (std::size_t f = 0; f < ps.folds.size(); ++f) {
        const auto& s = ps.folds[f];
        out << t.target << ',' << (p == Phase::kTrain ? "train" : "test") << ',' << f << ','
            << (s.r2 ? data::format_number(*s.r2) : std::string("NA")) << ',' << data::format_number(s.mae) << ','
            << data::format_number(s.rmse) << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace tarml::metrics
