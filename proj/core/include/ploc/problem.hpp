#pragma once

// Full problem description: domain, degeneracy exponent p in (1,2), control
// box [a,b], reaction f, running cost f0, and convex control cost g.

#include <cstdint>

#include "ploc/expressions.hpp"
#include "ploc/grid.hpp"

namespace ploc {

struct ProblemSpec {
  DomainSpec domain;
  double p = 1.5;   // must lie in (1, 2)
  double a = 0.0;   // control bounds, a < b
  double b = 1.0;
  ScalarFunc f;
  RunningCost f0;
  ControlCost g;

  // Throws std::invalid_argument on violated preconditions:
  //  - p outside (1, 2) ("p must lie in (1, 2)"),
  //  - a >= b,
  //  - growth exponent r at or above the critical Sobolev exponent,
  //  - midpoint-convexity probe of g failing (100 sample points x 50 u-pairs,
  //    deterministic seed).
  void validate() const;

  double critical_exponent() const;  // np/(n-p) for n > p, else +inf
};

// Convexity probe used by validate(); exposed for tests. Returns the worst
// midpoint-convexity violation  g(mid) - (g(u1)+g(u2))/2  over the sample.
double convexity_probe(const ProblemSpec& spec, std::uint64_t seed = 0x9e3779b97f4a7c15ull);

}  // namespace ploc
