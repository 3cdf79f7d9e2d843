#pragma once

#include <span>
#include <vector>

#include "tarml/rng.hpp"
#include "tarml/swarm.hpp"

namespace tarml::swarm::detail {

struct Swarm {
  std::vector<std::vector<double>> position;
  std::vector<std::vector<double>> velocity;
  std::vector<double> vmax;
};

Swarm init_swarm(const PsoParams& p, Rng& rng);
double inertia(const PsoParams& p, std::size_t iteration);

// Velocity and position update for one particle, drawing two uniforms per
// dimension in dimension order.
void move_particle(const PsoParams& p, const Swarm& s, double w, std::span<const double> personal,
                   std::span<const double> guide, Rng& rng, std::vector<double>& x, std::vector<double>& v);

}  // namespace tarml::swarm::detail
