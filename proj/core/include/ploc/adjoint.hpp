#pragma once

// Linearized-diffusion adjoint solves and multiplier normalization. The
// adjoint matrix is byte-for-byte the state Newton matrix (same assembly
// path), so reciprocity and the coercivity bracket carry over unchanged.

#include <optional>
#include <vector>

#include "ploc/problem.hpp"
#include "ploc/state_solver.hpp"

namespace ploc {

// Relative cutoff separating the nondegenerate set {|grad y| > theta}.
inline constexpr double kDegenerateThetaRel = 1e-4;

struct DegenerateMask {
  std::vector<bool> in_mask;  // true where |grad y| <= theta (degenerate)
  double theta = 0.0;
  double measure = 0.0;  // quadrature measure of the degenerate set
};

double default_degenerate_theta(const std::vector<Vec2>& grad_y);
DegenerateMask degenerate_mask(const Grid& grid, const std::vector<Vec2>& grad_y, double theta);

// Solves  K(y; eps) psi = load(source)  on interior dofs.
Field solve_adjoint(const Field& y, double eps, double p, const CellField& source);

// Limit form with the reaction coupling moved to the left-hand side:
//   (K(y; eps) - M_{f'(y)}) psi = -mu * load(f0_y(x, y)).
// Used by the reference bootstrap and the final candidate polish.
Field solve_limit_adjoint(const ProblemSpec& spec, const Field& y, double eps, double mu);

// int_{|grad y| > theta} (eps^2 + |grad y|^2)^{(p-2)/2} |grad psi|^2.
double weighted_energy(const Field& y, const Field& psi, double eps, double p, double theta);

// int_{mask} |grad psi|^2 over the degenerate set.
double degenerate_gradient_norm(const Field& y, const Field& psi, double theta);

struct MultiplierPair {
  Field psi;    // normalized adjoint
  double mu = 0.0;
  double normalization_residual = 0.0;  // | ||psi||_L2 + mu - 1 |
  std::optional<double> weighted_energy;  // attached by the homotopy driver
};

// mu = 1 / (||psi_raw||_L2 + 1), psi = mu * psi_raw, so ||psi|| + mu = 1.
MultiplierPair normalize_multiplier(const Field& psi_raw);

}  // namespace ploc
