#include "ploc/adjoint.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace ploc {

double default_degenerate_theta(const std::vector<Vec2>& grad_y) {
  double m = 0.0;
  for (const Vec2& g : grad_y) m = std::max(m, g.norm());
  return kDegenerateThetaRel * m;
}

DegenerateMask degenerate_mask(const Grid& grid, const std::vector<Vec2>& grad_y, double theta) {
  DegenerateMask mask;
  mask.theta = theta;
  mask.in_mask.resize(grid.n_quad());
  double measure = 0.0, c = 0.0;
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    mask.in_mask[q] = grad_y[q].norm() <= theta;
    if (mask.in_mask[q]) {
      const double term = grid.quad_weights[q] - c;
      const double t = measure + term;
      c = (t - measure) - term;
      measure = t;
    }
  }
  mask.measure = measure;
  return mask;
}

Field solve_adjoint(const Field& y, double eps, double p, const CellField& source) {
  const Grid& grid = *y.grid;
  Eigen::SparseMatrix<double> K = assemble_jacobian(y, eps, p);
  Eigen::VectorXd l = assemble_load(grid, source);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("adjoint factorization failed");
  Eigen::VectorXd psi = ldlt.solve(l);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("adjoint solve failed");
  return field_from_interior(grid, psi);
}

Field solve_limit_adjoint(const ProblemSpec& spec, const Field& y, double eps, double mu) {
  const Grid& grid = *y.grid;
  Eigen::SparseMatrix<double> A = assemble_jacobian(y, eps, spec.p);
  A -= assemble_weighted_mass(y, spec.f.deriv);
  CellField yv = values_at_quadrature(y);
  CellField src(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q)
    src[q] = -mu * spec.f0.deriv_y(grid.quad_points[q], yv[q]);
  Eigen::VectorXd l = assemble_load(grid, src);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd psi = ldlt.solve(l);
    if (ldlt.info() == Eigen::Success) return field_from_interior(grid, psi);
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  if (lu.info() != Eigen::Success) throw std::runtime_error("limit adjoint factorization failed");
  return field_from_interior(grid, lu.solve(l));
}

double weighted_energy(const Field& y, const Field& psi, double eps, double p, double theta) {
  const Grid& grid = *y.grid;
  auto gy = gradient_at_quadrature(y);
  auto gp = gradient_at_quadrature(psi);
  CellField dens(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    if (gy[q].norm() > theta) {
      const double s2 = eps * eps + gy[q].norm2();
      dens[q] = std::pow(s2, 0.5 * (p - 2.0)) * gp[q].norm2();
    }
  }
  return integrate(grid, dens);
}

double degenerate_gradient_norm(const Field& y, const Field& psi, double theta) {
  const Grid& grid = *y.grid;
  auto gy = gradient_at_quadrature(y);
  auto gp = gradient_at_quadrature(psi);
  CellField dens(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q)
    if (gy[q].norm() <= theta) dens[q] = gp[q].norm2();
  return integrate(grid, dens);
}

MultiplierPair normalize_multiplier(const Field& psi_raw) {
  MultiplierPair pair;
  const double l2 = norm(psi_raw, NormKind::L2);
  pair.mu = 1.0 / (l2 + 1.0);
  pair.psi = psi_raw;
  pair.psi.nodal *= pair.mu;
  pair.normalization_residual = std::abs(norm(pair.psi, NormKind::L2) + pair.mu - 1.0);
  return pair;
}

}  // namespace ploc
