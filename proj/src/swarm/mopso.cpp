#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tarml/data/csv.hpp"
#include "tarml/data/dataset.hpp"
#include "tarml/error.hpp"
#include "tarml/parallel.hpp"
#include "tarml/rng.hpp"
#include "tarml/swarm.hpp"
#include "swarm_internal.hpp"

namespace tarml::swarm {

bool dominates(std::span<const double> a, std::span<const double> b, std::span<const Sense> senses) {
  if (a.size() != b.size() || a.size() != senses.size()) {
    throw Error("dominates: objective vectors of different lengths");
  }
  bool strictly_better = false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    const bool maximize = senses[m] == Sense::kMaximize;
    const double am = maximize ? -a[m] : a[m];
    const double bm = maximize ? -b[m] : b[m];
    if (am > bm) return false;
    if (am < bm) strictly_better = true;
  }
  return strictly_better;
}

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("dominates: objective vectors of different lengths");
  bool strictly_better = false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m] > b[m]) return false;
    if (a[m] < b[m]) strictly_better = true;
  }
  return strictly_better;
}

void validate(const MopsoParams& p) {
  validate(p.pso);
  if (p.archive_capacity < 1) throw Error("mopso: archive capacity must be at least 1");
  if (p.senses.size() < 2) throw Error("mopso: at least two objectives are required");
}

std::vector<double> crowding_distance(const std::vector<std::vector<double>>& f) {
  const std::size_t n = f.size();
  std::vector<double> dist(n, 0.0);
  if (n == 0) return dist;
  const double inf = std::numeric_limits<double>::infinity();
  if (n <= 2) return std::vector<double>(n, inf);
  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < f.front().size(); ++m) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a][m] < f[b][m]; });
    const double lo = f[order.front()][m];
    const double hi = f[order.back()][m];
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    if (!(hi > lo)) continue;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      dist[order[k]] += (f[order[k + 1]][m] - f[order[k - 1]][m]) / (hi - lo);
    }
  }
  return dist;
}

namespace {

struct Member {
  std::vector<double> x;
  std::vector<double> f;    // minimization form
  std::vector<double> raw;  // as returned by the objective
};

class Archive {
 public:
  explicit Archive(std::size_t capacity) : capacity_(capacity) {}

  void offer(const std::vector<double>& x, const std::vector<double>& f, const std::vector<double>& raw) {
    for (const auto& m : members_) {
      if (dominates(m.f, f) || m.f == f) return;
    }
    std::erase_if(members_, [&](const Member& m) { return dominates(f, m.f); });
    members_.push_back({x, f, raw});
  }

  void truncate() {
    while (members_.size() > capacity_) {
      const auto d = distances();
      const auto most_crowded = static_cast<std::size_t>(std::min_element(d.begin(), d.end()) - d.begin());
      members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(most_crowded));
    }
  }

  std::vector<double> distances() const {
    std::vector<std::vector<double>> f;
    f.reserve(members_.size());
    for (const auto& m : members_) f.push_back(m.f);
    return crowding_distance(f);
  }

  const std::vector<Member>& members() const { return members_; }

 private:
  std::size_t capacity_;
  std::vector<Member> members_;
};

}  // namespace

MopsoResult mopso(const MultiObjective& objectives, const MopsoParams& params) {
  validate(params);
  const PsoParams& p = params.pso;
  const std::size_t n = p.swarm_size;
  const std::size_t m = params.senses.size();
  Rng rng(p.seed);
  detail::Swarm s = detail::init_swarm(p, rng);

  MopsoResult result;
  std::vector<std::vector<double>> raw(n), f(n);
  auto evaluate_all = [&] {
    for_each_index(n, p.evaluation, [&](std::size_t i) { raw[i] = objectives(s.position[i]); });
    result.evaluations += n;
    for (std::size_t i = 0; i < n; ++i) {
      if (raw[i].size() != m) throw Error("mopso: objective returned the wrong number of values");
      f[i].resize(m);
      for (std::size_t k = 0; k < m; ++k) {
        if (!std::isfinite(raw[i][k])) {
          throw Error("mopso: objective returned a non-finite value at particle " + std::to_string(i));
        }
        f[i][k] = params.senses[k] == Sense::kMaximize ? -raw[i][k] : raw[i][k];
      }
    }
  };

  Archive archive(params.archive_capacity);
  evaluate_all();
  std::vector<std::vector<double>> best_x = s.position;
  std::vector<std::vector<double>> best_f = f;
  for (std::size_t i = 0; i < n; ++i) archive.offer(s.position[i], f[i], raw[i]);
  archive.truncate();
  result.archive_sizes.push_back(archive.members().size());

  for (std::size_t it = 0; it < p.iterations; ++it) {
    const double w = detail::inertia(p, it);
    const auto crowd = archive.distances();
    const auto& members = archive.members();
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(rng.below(members.size()));
      const auto b = static_cast<std::size_t>(rng.below(members.size()));
      const std::size_t leader = crowd[b] > crowd[a] ? b : a;
      detail::move_particle(p, s, w, best_x[i], members[leader].x, rng, s.position[i], s.velocity[i]);
    }
    evaluate_all();
    for (std::size_t i = 0; i < n; ++i) {
      archive.offer(s.position[i], f[i], raw[i]);
      if (dominates(f[i], best_f[i])) {
        best_x[i] = s.position[i];
        best_f[i] = f[i];
      } else if (!dominates(best_f[i], f[i]) && rng.uniform() < 0.5) {
        best_x[i] = s.position[i];
        best_f[i] = f[i];
      }
    }
    archive.truncate();
    result.archive_sizes.push_back(archive.members().size());
  }

  for (const auto& mem : archive.members()) {
    ParetoSolution sol{mem.x, mem.raw, true};
    for (std::size_t d = 0; d < mem.x.size(); ++d) sol.feasible = sol.feasible && p.bounds[d].contains(mem.x[d]);
    result.solutions.push_back(std::move(sol));
  }
  return result;
}

ParetoSummary summarize(const std::vector<ParetoSolution>& solutions) {
  ParetoSummary s;
  if (solutions.empty()) return s;
  const double inf = std::numeric_limits<double>::infinity();
  s.decision_ranges.assign(solutions.front().decision.size(), Bounds{inf, -inf});
  s.objective_ranges.assign(solutions.front().objectives.size(), Bounds{inf, -inf});
  for (const auto& sol : solutions) {
    for (std::size_t d = 0; d < sol.decision.size(); ++d) {
      s.decision_ranges[d].min = std::min(s.decision_ranges[d].min, sol.decision[d]);
      s.decision_ranges[d].max = std::max(s.decision_ranges[d].max, sol.decision[d]);
    }
    for (std::size_t k = 0; k < sol.objectives.size(); ++k) {
      s.objective_ranges[k].min = std::min(s.objective_ranges[k].min, sol.objectives[k]);
      s.objective_ranges[k].max = std::max(s.objective_ranges[k].max, sol.objectives[k]);
    }
  }
  return s;
}

std::string pareto_to_csv(const std::vector<ParetoSolution>& solutions, const std::vector<std::string>& decision_names,
                          const std::vector<std::string>& objective_names) {
  std::ostringstream out;
  bool first = true;
  for (const auto* names : {&decision_names, &objective_names}) {
    for (const auto& name : *names) {
      out << (first ? "" : ",") << data::quote_csv_cell(name);
      first = false;
    }
  }
  out << "\n";
  for (const auto& sol : solutions) {
    first = true;
    for (const auto* values : {&sol.decision, &sol.objectives}) {
      for (double v : *values) {
        out << (first ? "" : ",") << data::format_number(v);
        first = false;
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace tarml::swarm
