#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "oracles.hpp"
#include "tarml/error.hpp"
#include "tarml/swarm.hpp"

namespace tarml::swarm {
namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

PsoParams sphere_params(std::uint64_t seed) {
  PsoParams p;
  p.swarm_size = 40;
  p.iterations = 500;
  p.bounds.assign(10, Bounds{-5.0, 5.0});
  p.seed = seed;
  return p;
}

TEST(Pso, SphereConvergesInMostSeeds) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = pso_minimize(sphere, sphere_params(seed));
    hits += r.value < 1e-4;
    EXPECT_EQ(r.evaluations, 40u * 501u);
  }
  EXPECT_GE(hits, 9);
}

TEST(Pso, OneDimensionalQuadratic) {
  PsoParams p;
  p.swarm_size = 20;
  p.iterations = 200;
  p.bounds = {{0.0, 10.0}};
  const auto r = pso_minimize([](auto x) { return (x[0] - 3.0) * (x[0] - 3.0); }, p);
  EXPECT_NEAR(r.position[0], 3.0, 1e-3);
}

TEST(Pso, StartingAtOptimumStaysThere) {
  PsoParams p;
  p.swarm_size = 5;
  p.iterations = 30;
  p.bounds.assign(3, Bounds{-1.0, 1.0});
  p.initial_positions.assign(5, std::vector<double>(3, 0.0));
  const auto r = pso_minimize(sphere, p);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.position, std::vector<double>(3, 0.0));
}

TEST(Pso, TraceNonIncreasingAndDeterministic) {
  auto p = sphere_params(3);
  p.iterations = 50;
  const auto a = pso_minimize(sphere, p);
  ASSERT_EQ(a.trace.size(), 51u);
  for (std::size_t i = 1; i < a.trace.size(); ++i) EXPECT_LE(a.trace[i], a.trace[i - 1]);
  EXPECT_EQ(a.trace.back(), a.value);
  p.evaluation = Exec::kParallel;
  const auto b = pso_minimize(sphere, p);
  EXPECT_EQ(a.position, b.position);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(Pso, ObserverSeesEveryBatchInBounds) {
  auto p = sphere_params(4);
  p.iterations = 10;
  std::size_t batches = 0;
  p.observer = [&](std::size_t it, const std::vector<std::vector<double>>& pos, std::span<const double> values) {
    EXPECT_EQ(it, batches++);
    EXPECT_EQ(pos.size(), values.size());
    for (const auto& x : pos) {
      for (double v : x) EXPECT_TRUE(v >= -5.0 && v <= 5.0);
    }
  };
  pso_minimize(sphere, p);
  EXPECT_EQ(batches, 11u);
}

TEST(Pso, Errors) {
  auto p = sphere_params(1);
  EXPECT_THROW(pso_minimize([](auto) { return NAN; }, p), Error);
  p.bounds[0] = {1.0, -1.0};
  EXPECT_THROW(validate(p), Error);
  p = sphere_params(1);
  p.swarm_size = 0;
  EXPECT_THROW(validate(p), Error);
  EXPECT_NE(trace_to_text(std::vector<double>{2.0, 1.0}).find('1'), std::string::npos);
}

TEST(Dominates, Cases) {
  const std::vector<double> a{1, 1}, b{2, 2}, c{1, 2}, d{2, 1};
  EXPECT_TRUE(dominates(a, b));
  EXPECT_FALSE(dominates(b, a));
  EXPECT_FALSE(dominates(c, d));
  EXPECT_FALSE(dominates(d, c));
  EXPECT_FALSE(dominates(a, a));
  const std::vector<Sense> max_min{Sense::kMaximize, Sense::kMinimize};
  EXPECT_TRUE(dominates(d, b, max_min));
  EXPECT_TRUE(dominates(b, c, max_min));
  EXPECT_THROW(dominates(a, std::vector<double>{1.0}), Error);
}

TEST(Crowding, BoundaryInfiniteInteriorFinite) {
  const auto cd = crowding_distance({{0, 4}, {1, 2}, {2, 1}, {4, 0}});
  EXPECT_TRUE(std::isinf(cd[0]));
  EXPECT_TRUE(std::isinf(cd[3]));
  EXPECT_NEAR(cd[1], 2.0 / 4.0 + 3.0 / 4.0, 1e-15);
  EXPECT_NEAR(cd[2], 3.0 / 4.0 + 2.0 / 4.0, 1e-15);
}

MopsoParams two_objective_params(std::uint64_t seed) {
  MopsoParams p;
  p.pso.swarm_size = 40;
  p.pso.iterations = 200;
  p.pso.bounds = {{-5.0, 5.0}};
  p.pso.seed = seed;
  p.archive_capacity = 50;
  p.senses = {Sense::kMinimize, Sense::kMinimize};
  return p;
}

TEST(Mopso, SchafferFront) {
  const auto r = mopso([](auto x) { return std::vector<double>{x[0] * x[0], (x[0] - 2) * (x[0] - 2)}; },
                       two_objective_params(1));
  ASSERT_FALSE(r.solutions.empty());
  EXPECT_LE(r.solutions.size(), 50u);
  double min1 = 1e9, min2 = 1e9;
  std::vector<std::vector<double>> objs;
  for (const auto& s : r.solutions) {
    EXPECT_GE(s.decision[0], -0.05);
    EXPECT_LE(s.decision[0], 2.05);
    min1 = std::min(min1, s.objectives[0]);
    min2 = std::min(min2, s.objectives[1]);
    objs.push_back(s.objectives);
  }
  EXPECT_LT(min1, 0.01);
  EXPECT_LT(min2, 0.01);
  EXPECT_TRUE(oracle::mutually_non_dominated(objs));
  EXPECT_EQ(r.archive_sizes.size(), 201u);
}

TEST(Mopso, IdenticalObjectivesCollapse) {
  const auto r = mopso([](auto x) { return std::vector<double>{x[0] * x[0], x[0] * x[0]}; }, two_objective_params(2));
  for (const auto& a : r.solutions) {
    for (const auto& b : r.solutions) {
      EXPECT_NEAR(a.objectives[0], b.objectives[0], 1e-2);
    }
  }
}

TEST(Mopso, MaximizeSenseAndSerialEqualsParallel) {
  auto p = two_objective_params(3);
  p.senses = {Sense::kMaximize, Sense::kMinimize};
  p.pso.bounds = {{0.0, 1.0}, {0.0, 1.0}};
  p.pso.iterations = 60;
  auto f = [](std::span<const double> x) { return std::vector<double>{x[0] + x[1], x[0] * x[0] + x[1]}; };
  const auto a = mopso(f, p);
  p.pso.evaluation = Exec::kParallel;
  const auto b = mopso(f, p);
  ASSERT_EQ(a.solutions.size(), b.solutions.size());
  std::vector<std::vector<double>> negated;
  for (std::size_t i = 0; i < a.solutions.size(); ++i) {
    EXPECT_EQ(a.solutions[i].decision, b.solutions[i].decision);
    negated.push_back({-a.solutions[i].objectives[0], a.solutions[i].objectives[1]});
  }
  EXPECT_TRUE(oracle::mutually_non_dominated(negated));
  const auto summary = summarize(a.solutions);
  ASSERT_EQ(summary.decision_ranges.size(), 2u);
  EXPECT_LE(summary.objective_ranges[0].min, summary.objective_ranges[0].max);
  const auto csv = pareto_to_csv(a.solutions, {"x1", "x2"}, {"f1", "f2"});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x1,x2,f1,f2");
}

TEST(Mopso, NonFiniteObjectiveRejected) {
  EXPECT_THROW(mopso([](auto) { return std::vector<double>{1.0, INFINITY}; }, two_objective_params(1)), Error);
}

}  // namespace
}  // namespace tarml::swarm
