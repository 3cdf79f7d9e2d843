#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tarml/data/schema.hpp"
#include "tarml/exec.hpp"

namespace tarml::swarm {

using data::Bounds;

struct PsoParams {
  std::size_t swarm_size = 40;
  std::size_t iterations = 500;
  // Inertia decays linearly from start to end over the iterations.
  double inertia_start = 0.9;
  double inertia_end = 0.4;
  double cognitive = 2.0;
  double social = 2.0;
  std::vector<Bounds> bounds;
  double velocity_clamp = 0.2;  // fraction of each dimension's range
  std::uint64_t seed = 1;
  // Optional starting positions, one per particle; otherwise uniform in the box.
  std::vector<std::vector<double>> initial_positions;
  // Objective calls within one iteration may run concurrently when the
  // objective is reentrant. Results do not depend on this setting.
  Exec evaluation = Exec::kSerial;
  // Called after every evaluation batch (iteration 0 is the initial swarm),
  // from the calling thread, with the evaluated positions and their values.
  std::function<void(std::size_t iteration, const std::vector<std::vector<double>>& positions,
                     std::span<const double> values)>
      observer;
};

void validate(const PsoParams& params);

using Objective = std::function<double(std::span<const double>)>;

struct PsoResult {
  std::vector<double> position;
  double value = 0.0;
  std::vector<double> trace;  // best value after initialisation and after each iteration
  std::size_t evaluations = 0;
};

// Global-best PSO minimizing `objective` over the box. Positions leaving the
// box are clamped and the offending velocity component is zeroed.
PsoResult pso_minimize(const Objective& objective, const PsoParams& params);

std::string trace_to_text(std::span<const double> trace);

enum class Sense { kMinimize, kMaximize };

// True iff a is no worse than b in every objective and strictly better in one.
bool dominates(std::span<const double> a, std::span<const double> b, std::span<const Sense> senses);
bool dominates(std::span<const double> a, std::span<const double> b);  // all minimized

struct MopsoParams {
  PsoParams pso;
  std::size_t archive_capacity = 100;
  std::vector<Sense> senses;  // one per objective; size is the objective count
};

void validate(const MopsoParams& params);

using MultiObjective = std::function<std::vector<double>(std::span<const double>)>;

struct ParetoSolution {
  std::vector<double> decision;
  std::vector<double> objectives;  // as returned by the objective (not negated)
  bool feasible = true;
};

struct MopsoResult {
  std::vector<ParetoSolution> solutions;  // mutually non-dominated
  std::vector<std::size_t> archive_sizes;  // after initialisation and after each iteration
  std::size_t evaluations = 0;
};

// NSGA-II crowding distance of each point (minimization form); boundary points
// get +infinity.
std::vector<double> crowding_distance(const std::vector<std::vector<double>>& objectives);

// Multi-objective PSO with a bounded non-dominated archive. Leaders come from a
// binary tournament on crowding distance; when the archive overflows, the most
// crowded member is dropped until it fits.
MopsoResult mopso(const MultiObjective& objectives, const MopsoParams& params);

// Per-column min/max of decisions and objectives over a solution set.
struct ParetoSummary {
  std::vector<Bounds> decision_ranges;
  std::vector<Bounds> objective_ranges;
};

ParetoSummary summarize(const std::vector<ParetoSolution>& solutions);

// Header then one row per solution: decision columns, objective columns.
std::string pareto_to_csv(const std::vector<ParetoSolution>& solutions, const std::vector<std::string>& decision_names,
                          const std::vector<std::string>& objective_names);

}  // namespace tarml::swarm
