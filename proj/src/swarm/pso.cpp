#include <algorithm>
#include <cmath>
#include <sstream>

#include "tarml/data/dataset.hpp"
#include "tarml/error.hpp"
#include "tarml/parallel.hpp"
#include "tarml/rng.hpp"
#include "tarml/swarm.hpp"
#include "swarm_internal.hpp"

namespace tarml::swarm {

void validate(const PsoParams& p) {
  if (p.swarm_size < 2) throw Error("pso: swarm size must be at least 2");
  if (p.bounds.empty()) throw Error("pso: no search dimensions");
  for (std::size_t d = 0; d < p.bounds.size(); ++d) {
    if (!(p.bounds[d].min < p.bounds[d].max)) {
      throw Error("pso: bounds of dimension " + std::to_string(d) + " are empty");
    }
  }
  for (double w : {p.inertia_start, p.inertia_end}) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error("pso: inertia weight must lie in [0, 1]");
  }
  if (!(p.cognitive >= 0.0) || !(p.social >= 0.0)) throw Error("pso: acceleration coefficients must be >= 0");
  if (!(p.velocity_clamp > 0.0)) throw Error("pso: velocity clamp must be positive");
  if (!p.initial_positions.empty()) {
    if (p.initial_positions.size() != p.swarm_size) throw Error("pso: one initial position per particle required");
    for (const auto& x : p.initial_positions) {
      if (x.size() != p.bounds.size()) throw Error("pso: initial position has the wrong dimension");
      for (std::size_t d = 0; d < x.size(); ++d) {
        if (!p.bounds[d].contains(x[d])) throw Error("pso: initial position outside the box");
      }
    }
  }
}

namespace detail {

Swarm init_swarm(const PsoParams& p, Rng& rng) {
  const std::size_t dims = p.bounds.size();
  Swarm s;
  s.vmax.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) s.vmax[d] = p.velocity_clamp * p.bounds[d].span();
  s.position.resize(p.swarm_size, std::vector<double>(dims));
  s.velocity.resize(p.swarm_size, std::vector<double>(dims));
  for (std::size_t i = 0; i < p.swarm_size; ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      s.position[i][d] = p.initial_positions.empty() ? rng.uniform(p.bounds[d].min, p.bounds[d].max)
                                                     : p.initial_positions[i][d];
      s.velocity[i][d] = rng.uniform(-s.vmax[d], s.vmax[d]);
    }
  }
  return s;
}

double inertia(const PsoParams& p, std::size_t iteration) {
  if (p.iterations <= 1) return p.inertia_start;
  const double t = static_cast<double>(iteration) / static_cast<double>(p.iterations - 1);
  return p.inertia_start - (p.inertia_start - p.inertia_end) * t;
}

void move_particle(const PsoParams& p, const Swarm& s, double w, std::span<const double> personal,
                   std::span<const double> guide, Rng& rng, std::vector<double>& x, std::vector<double>& v) {
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double r1 = rng.uniform();
    const double r2 = rng.uniform();
    double vd = w * v[d] + p.cognitive * r1 * (personal[d] - x[d]) + p.social * r2 * (guide[d] - x[d]);
    vd = std::clamp(vd, -s.vmax[d], s.vmax[d]);
    double xd = x[d] + vd;
    if (xd < p.bounds[d].min) {
      xd = p.bounds[d].min;
      vd = 0.0;
    } else if (xd > p.bounds[d].max) {
      xd = p.bounds[d].max;
      vd = 0.0;
    }
    x[d] = xd;
    v[d] = vd;
  }
}

}  // namespace detail

PsoResult pso_minimize(const Objective& objective, const PsoParams& params) {
  validate(params);
  Rng rng(params.seed);
  detail::Swarm s = detail::init_swarm(params, rng);
  const std::size_t n = params.swarm_size;

  PsoResult result;
  std::vector<double> value(n);
  auto evaluate_all = [&] {
    for_each_index(n, params.evaluation, [&](std::size_t i) { value[i] = objective(s.position[i]); });
    result.evaluations += n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(value[i])) {
        std::ostringstream msg;
        msg << "pso: objective returned a non-finite value at particle " << i;
        throw Error(msg.str());
      }
    }
  };

  evaluate_all();
  if (params.observer) params.observer(0, s.position, value);
  std::vector<std::vector<double>> best_pos = s.position;
  std::vector<double> best_val = value;
  std::size_t leader = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (best_val[i] < best_val[leader]) leader = i;
  }
  result.position = best_pos[leader];
  result.value = best_val[leader];
  result.trace.push_back(result.value);

  for (std::size_t it = 0; it < params.iterations; ++it) {
    const double w = detail::inertia(params, it);
    for (std::size_t i = 0; i < n; ++i) {
      detail::move_particle(params, s, w, best_pos[i], result.position, rng, s.position[i], s.velocity[i]);
    }
    evaluate_all();
    if (params.observer) params.observer(it + 1, s.position, value);
    for (std::size_t i = 0; i < n; ++i) {
      if (value[i] < best_val[i]) {
        best_val[i] = value[i];
        best_pos[i] = s.position[i];
      }
      if (best_val[i] < result.value) {
        result.value = best_val[i];
        result.position = best_pos[i];
      }
    }
    result.trace.push_back(result.value);
  }
  return result;
}

std::string trace_to_text(std::span<const double> trace) {
  std::ostringstream out;
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ' ' << data::format_number(trace[i]) << '\n';
  return out.str();
}

}  // namespace tarml::swarm
