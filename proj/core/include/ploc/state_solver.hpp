#pragma once

// Regularized p-Laplacian state solves, 1 < p < 2:
//   -div( (eps^2 + |grad y|^2)^{(p-2)/2} grad y ) = rhs          (solve_state)
//   -div( ... )                                   = f(y) + u     (solve_semilinear)
// both with homogeneous Dirichlet data. solve_state minimizes the strictly
// convex energy  int (eps^2+|grad y|^2)^{p/2}/p - rhs*y  by damped Newton;
// the semilinear variant is plain Newton with residual backtracking and can
// sit on any of several solution branches depending on its seed.

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "ploc/expressions.hpp"
#include "ploc/grid.hpp"

namespace ploc {

// Symmetric linearization of the regularized p-Laplacian flux at gradient g:
//   A = s^{p-2} ( I + (p-2) g g^T / s^2 ),   s = sqrt(eps^2 + |g|^2).
// For 1 < p < 2 the spectrum is pinched in [(p-1) s^{p-2}, s^{p-2}].
struct DiffusionTensor {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;
  double s = 0.0;  // regularized gradient magnitude

  Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }
  double quad(Vec2 u, Vec2 v) const { return dot(u, apply(v)); }
};

DiffusionTensor diffusion_tensor(Vec2 g, double eps, double p);

// Regularized flux s^{p-2} g; at eps = 0 the degenerate point g = 0 follows
// `policy`: Signal throws DegenerateEvaluation, ExtendZero returns 0 (the
// continuous extension, valid for p > 1).
enum class DegeneratePolicy { Signal, ExtendZero };

struct DegenerateEvaluation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Vec2 regularized_flux(Vec2 g, double eps, double p,
                      DegeneratePolicy policy = DegeneratePolicy::Signal);

struct NewtonConfig {
  int max_iter = 50;
  // tol_abs sits above the assembly roundoff floor: near flux zeros the
  // weight (eps^2+|grad y|^2)^{(p-2)/2} reaches ~eps^{p-2} and amplifies
  // machine noise in the residual to ~1e-12 at eps = 1e-6, n = 512.
  double tol_abs = 1e-10;
  double tol_rel = 1e-12;
  double armijo_slope = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 30;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;       // Euclidean norm of the interior residual
  double linf = 0.0;           // max |y| over nodes
  bool indefinite_jacobian = false;
  bool growth_violated = false;  // semilinear only: GrowthSpec failed on the range
  std::vector<double> step_lengths;
  std::vector<double> energies;  // solve_state only; nonincreasing
};

// Interior residual  r_i = int (eps^2+|grad y|^2)^{(p-2)/2} grad y . grad phi_i
//                          - int rhs phi_i.
Eigen::VectorXd assemble_residual(const Field& y, const CellField& rhs, double eps, double p,
                                  DegeneratePolicy policy = DegeneratePolicy::Signal);

// Interior tangent matrix K_ij = int grad phi_j^T A(grad y; eps) grad phi_i.
// SPD for eps > 0; throws std::invalid_argument for eps <= 0.
Eigen::SparseMatrix<double> assemble_jacobian(const Field& y, double eps, double p);

// f'-weighted mass matrix  M_ij = int f'(y) phi_i phi_j  (interior dofs).
Eigen::SparseMatrix<double> assemble_weighted_mass(const Field& y,
                                                   const std::function<double(double)>& weight);

// Same with the weight given directly per quadrature point.
Eigen::SparseMatrix<double> assemble_weighted_mass(const Grid& grid, const CellField& w);

// Load vector  l_i = int rhs phi_i.
Eigen::VectorXd assemble_load(const Grid& grid, const CellField& rhs);

double state_energy(const Field& y, const CellField& rhs, double eps, double p);

Field solve_state(const Grid& grid, const CellField& rhs, double eps, double p,
                  const Field& y0, const NewtonConfig& cfg, SolveReport* report = nullptr);

// Convenience wrapper: geometric continuation in eps down to eps_target,
// warm-starting each stage, for cold starts at strongly degenerate targets.
Field solve_state_continued(const Grid& grid, const CellField& rhs, double eps_target, double p,
                            const NewtonConfig& cfg, SolveReport* report = nullptr);

Field solve_semilinear(const Grid& grid, const ScalarFunc& f, const CellField& u, double eps,
                       double p, const Field& y0, const NewtonConfig& cfg,
                       SolveReport* report = nullptr);

// Reaction given per quadrature point, value(q, y(x_q)) with its y-derivative:
//   -div( (eps^2+|grad y|^2)^{(p-2)/2} grad y ) = value(q, y(x_q)).
// Same damped Newton as solve_semilinear; backbone for reactions that carry
// spatial data (adjoint values, penalty centers) next to the y-dependence.
struct PointwiseReaction {
  std::function<double(std::size_t, double)> value;
  std::function<double(std::size_t, double)> deriv;
};

Field solve_reaction(const Grid& grid, const PointwiseReaction& reaction, double eps, double p,
                     const Field& y0, const NewtonConfig& cfg, SolveReport* report = nullptr);

// Distinct-solution threshold for multistart deduplication (L-inf distance).
inline constexpr double kDistinctSolutionLinf = 1e-3;

struct BranchSolution {
  Field y;
  SolveReport report;
};

// Runs solve_semilinear from every seed, keeps converged runs, and collapses
// results closer than kDistinctSolutionLinf in L-inf (first hit wins).
std::vector<BranchSolution> multistart_semilinear(const Grid& grid, const ScalarFunc& f,
                                                  const CellField& u, double eps, double p,
                                                  const std::vector<Field>& seeds,
                                                  const NewtonConfig& cfg);

}  // namespace ploc
