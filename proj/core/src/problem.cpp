#include "ploc/problem.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace ploc {

double ProblemSpec::critical_exponent() const {
  const double n = static_cast<double>(domain.dim);
  if (n <= p) return std::numeric_limits<double>::infinity();
  return n * p / (n - p);
}

double convexity_probe(const ProblemSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(spec.domain.x0, spec.domain.x1);
  std::uniform_real_distribution<double> uy(spec.domain.y0, spec.domain.y1);
  std::uniform_real_distribution<double> uu(spec.a, spec.b);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    Vec2 x{ux(rng), spec.domain.dim == 2 ? uy(rng) : 0.0};
    for (int j = 0; j < 50; ++j) {
      const double u1 = uu(rng), u2 = uu(rng);
      const double mid = spec.g.value(x, 0.5 * (u1 + u2));
      const double chord = 0.5 * (spec.g.value(x, u1) + spec.g.value(x, u2));
      worst = std::max(worst, mid - chord);
    }
  }
  return worst;
}

void ProblemSpec::validate() const {
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("p must lie in (1, 2)");
  if (!(a < b)) throw std::invalid_argument("control bounds require a < b");
  if (!f.value || !f.deriv) throw std::invalid_argument("reaction term f incomplete");
  if (!f0.value || !f0.deriv_y) throw std::invalid_argument("running cost f0 incomplete");
  if (!g.value) throw std::invalid_argument("control cost g missing");
  if (f.growth.r >= critical_exponent())
    throw std::invalid_argument("growth exponent r exceeds the critical Sobolev exponent");
  const double viol = convexity_probe(*this);
  if (viol > 1e-10)
    throw std::invalid_argument("control cost g failed the midpoint convexity probe");
}

}  // namespace ploc
