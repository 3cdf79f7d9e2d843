#include "tarml/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include "tarml/error.hpp"

namespace tarml::tuning {

using models::Family;
using models::GprConfig;
using models::LsBoostConfig;
using models::MlpConfig;
using models::RegressorConfig;

bool HyperParam::pinned() const {
  return kind == ParamKind::kCategorical ? choices.size() == 1 : lo == hi;
}

void validate(const SearchSpace& space) {
  if (space.params.empty()) throw Error("search space is empty");
  if (models::family_of(space.base) != space.family) throw Error("search space base config has the wrong family");
  for (const auto& p : space.params) {
    if (p.kind == ParamKind::kCategorical) {
      if (p.choices.empty()) throw Error("hyperparameter " + p.name + " has no choices");
    } else if (!(p.lo <= p.hi)) {
      throw Error("hyperparameter " + p.name + " has an empty range");
    } else if (p.log_scale && !(p.lo > 0.0)) {
      throw Error("hyperparameter " + p.name + " is log-scaled but not positive");
    }
  }
}

SearchSpace default_space(Family family) {
  using K = ParamKind;
  switch (family) {
    case Family::kLsBoost:
      return {family,
              {{"max_splits", K::kInteger, 1, 32, false, {}},
               {"min_leaf", K::kInteger, 1, 20, false, {}},
               {"cycles", K::kInteger, 50, 500, false, {}},
               {"learning_rate", K::kContinuous, 0.001, 1.0, false, {}}},
              LsBoostConfig{}};
    case Family::kGpr:
      return {family,
              {{"signal_variance", K::kContinuous, 0.01, 10.0, true, {}},
               {"lengthscale", K::kContinuous, 0.05, 5.0, true, {}},
               {"noise_variance", K::kContinuous, 1e-6, 0.1, true, {}}},
              GprConfig{}};
    case Family::kMlp:
      return {family,
              {{"hidden", K::kInteger, 2, 32, false, {}},
               {"activation", K::kCategorical, 0, 0, false, {"tanh", "logistic"}},
               {"epochs", K::kInteger, 200, 5000, false, {}},
               {"step_size", K::kContinuous, 0.001, 0.5, true, {}}},
              MlpConfig{}};
  }
  throw Error("unknown family");
}

namespace {

// Numeric view of a config field (categoricals by choice index).
double get_field(const RegressorConfig& c, const HyperParam& p) {
  const std::string& n = p.name;
  if (const auto* b = std::get_if<LsBoostConfig>(&c)) {
    if (n == "max_splits") return b->max_splits;
    if (n == "min_leaf") return b->min_leaf;
    if (n == "cycles") return b->cycles;
    if (n == "learning_rate") return b->learning_rate;
  } else if (const auto* g = std::get_if<GprConfig>(&c)) {
    if (n == "signal_variance") return g->signal_variance;
    if (n == "lengthscale") return g->lengthscale;
    if (n == "noise_variance") return g->noise_variance;
  } else if (const auto* m = std::get_if<MlpConfig>(&c)) {
    if (n == "hidden") return m->hidden;
    if (n == "epochs") return m->epochs;
    if (n == "step_size") return m->step_size;
    if (n == "activation") {
      const auto name = std::string(models::to_string(m->activation));
      const auto it = std::find(p.choices.begin(), p.choices.end(), name);
      if (it == p.choices.end()) throw Error("activation " + name + " is not among the search choices");
      return static_cast<double>(it - p.choices.begin());
    }
  }
  throw Error("hyperparameter \"" + n + "\" does not belong to family " +
              std::string(models::to_string(models::family_of(c))));
}

void set_field(RegressorConfig& c, const HyperParam& p, double v) {
  const std::string& n = p.name;
  const int iv = static_cast<int>(v);
  if (auto* b = std::get_if<LsBoostConfig>(&c)) {
    if (n == "max_splits") return void(b->max_splits = iv);
    if (n == "min_leaf") return void(b->min_leaf = iv);
    if (n == "cycles") return void(b->cycles = iv);
    if (n == "learning_rate") return void(b->learning_rate = v);
  } else if (auto* g = std::get_if<GprConfig>(&c)) {
    if (n == "signal_variance") return void(g->signal_variance = v);
    if (n == "lengthscale") return void(g->lengthscale = v);
    if (n == "noise_variance") return void(g->noise_variance = v);
  } else if (auto* m = std::get_if<MlpConfig>(&c)) {
    if (n == "hidden") return void(m->hidden = iv);
    if (n == "epochs") return void(m->epochs = iv);
    if (n == "step_size") return void(m->step_size = v);
    if (n == "activation") return void(m->activation = models::parse_activation(p.choices.at(static_cast<std::size_t>(iv))));
  }
  throw Error("hyperparameter \"" + n + "\" does not belong to family " +
              std::string(models::to_string(models::family_of(c))));
}

}  // namespace

SearchSpace pinned_space(const RegressorConfig& config) {
  SearchSpace space = default_space(models::family_of(config));
  space.base = config;
  for (auto& p : space.params) {
    if (p.kind == ParamKind::kCategorical) {
      p.choices = {p.choices.at(static_cast<std::size_t>(get_field(config, p)))};
    } else {
      p.lo = p.hi = get_field(config, p);
    }
  }
  return space;
}

RegressorConfig decode(std::span<const double> point, const SearchSpace& space) {
  if (point.size() != space.params.size()) throw Error("search point has the wrong dimension");
  RegressorConfig c = space.base;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const auto& p = space.params[i];
    const double u = std::clamp(point[i], 0.0, 1.0);
    double v = 0.0;
    switch (p.kind) {
      case ParamKind::kContinuous:
        if (p.pinned()) {
          v = p.lo;
        } else if (p.log_scale) {
          v = std::exp(std::log(p.lo) + u * (std::log(p.hi) - std::log(p.lo)));
        } else {
          v = p.lo + u * (p.hi - p.lo);
        }
        break;
      case ParamKind::kInteger:
        v = p.lo + std::round(u * (p.hi - p.lo));
        break;
      case ParamKind::kCategorical: {
        const auto m = static_cast<double>(p.choices.size());
        v = std::min(std::floor(u * m), m - 1.0);
        break;
      }
    }
    set_field(c, p, v);
  }
  return c;
}

std::vector<double> encode(const RegressorConfig& config, const SearchSpace& space) {
  std::vector<double> point;
  for (const auto& p : space.params) {
    const double v = get_field(config, p);
    double u = 0.0;
    if (p.kind == ParamKind::kCategorical) {
      u = (v + 0.5) / static_cast<double>(p.choices.size());
    } else if (!p.pinned()) {
      u = p.log_scale ? (std::log(v) - std::log(p.lo)) / (std::log(p.hi) - std::log(p.lo))
                      : (v - p.lo) / (p.hi - p.lo);
    }
    point.push_back(std::clamp(u, 0.0, 1.0));
  }
  return point;
}

std::string TuneResult::trace_to_text() const {
  std::ostringstream out;
  for (const auto& e : trace) {
    out << "iteration=" << e.iteration << " particle=" << e.particle << " objective="
        << (std::isfinite(e.objective) ? data::format_number(e.objective) : std::string("inf")) << " config=\""
        << e.config << "\"";
    if (!e.error.empty()) out << " error=\"" << e.error << "\"";
    out << "\n";
  }
  return out.str();
}

TuneResult tune(const SearchSpace& space, const data::Dataset& unit_data, const data::FoldPlan& plan,
                const TuneOptions& options) {
  validate(space);

  struct Entry {
    double objective = std::numeric_limits<double>::infinity();
    std::optional<metrics::EvalReport> report;
    std::string error;
  };
  std::mutex mutex;
  std::map<std::string, Entry> cache;
  std::size_t trainings = 0;

  const Exec inner = options.parallel_candidates ? Exec::kSerial : Exec::kParallel;
  auto evaluate = [&](const RegressorConfig& config) -> Entry {
    const std::string key = models::describe(config);
    {
      std::lock_guard lock(mutex);
      if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    Entry e;
    try {
      metrics::CvSetup setup{{config}, options.targets, options.pso.seed};
      e.report = metrics::evaluate_cv(setup, unit_data, plan, nullptr, inner);
      e.objective = e.report->mean_test_rmse();
      if (!std::isfinite(e.objective)) {
        e.objective = std::numeric_limits<double>::infinity();
        e.error = "non-finite test RMSE";
      }
    } catch (const std::exception& ex) {
      e.error = ex.what();
      e.report.reset();
    }
    std::lock_guard lock(mutex);
    auto [it, inserted] = cache.emplace(key, std::move(e));
    if (inserted) ++trainings;
    return it->second;
  };

  TuneResult result;
  swarm::PsoParams pso = options.pso;
  pso.bounds.assign(space.params.size(), data::Bounds{0.0, 1.0});
  pso.evaluation = options.parallel_candidates ? Exec::kParallel : Exec::kSerial;
  pso.observer = [&](std::size_t iteration, const std::vector<std::vector<double>>& positions,
                     std::span<const double>) {
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const auto config = decode(positions[i], space);
      const Entry e = evaluate(config);  // cached by now
      result.trace.push_back({iteration, i, models::describe(config), e.objective, e.error});
    }
  };
  // Failures must not abort the swarm, so they are reported to PSO as the
  // largest finite value and as +infinity in the trace.
  const auto best = swarm::pso_minimize(
      [&](std::span<const double> point) {
        const double v = evaluate(decode(point, space)).objective;
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
      },
      pso);

  result.best = decode(best.position, space);
  const Entry e = evaluate(result.best);
  if (!e.report) throw Error("tuning failed: every candidate configuration failed to train (" + e.error + ")");
  result.best_objective = e.objective;
  result.report = *e.report;
  result.trainings = trainings;
  return result;
}

}  // namespace tarml::tuning
