#include "ploc/state_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace ploc {

DiffusionTensor diffusion_tensor(Vec2 g, double eps, double p) {
  DiffusionTensor A;
  A.s = std::sqrt(eps * eps + g.norm2());
  const double sp = std::pow(A.s, p - 2.0);
  const double c = (p - 2.0) * sp / (A.s * A.s);
  A.a11 = sp + c * g.x * g.x;
  A.a12 = c * g.x * g.y;
  A.a22 = sp + c * g.y * g.y;
  return A;
}

Vec2 regularized_flux(Vec2 g, double eps, double p, DegeneratePolicy policy) {
  const double s2 = eps * eps + g.norm2();
  if (s2 == 0.0) {
    if (policy == DegeneratePolicy::Signal)
      throw DegenerateEvaluation("flux evaluated at grad y = 0 with eps = 0");
    return {0.0, 0.0};
  }
  return std::pow(s2, 0.5 * (p - 2.0)) * g;
}

Eigen::VectorXd assemble_residual(const Field& y, const CellField& rhs, double eps, double p,
                                  DegeneratePolicy policy) {
  const Grid& g = *y.grid;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(g.n_interior);
  auto grads = gradient_at_quadrature(y);
  for (std::size_t e = 0; e < g.n_elems(); ++e) {
    for (int q = 0; q < g.nq; ++q) {
      const std::size_t gq = e * g.nq + q;
      const Vec2 flux = regularized_flux(grads[gq], eps, p, policy);
      const double w = g.quad_weights[gq];
      for (int l = 0; l < g.nodes_per_elem; ++l) {
        const int ii = g.interior_index[g.elems[e][l]];
        if (ii >= 0) r[ii] += w * (dot(flux, g.dphi[q][l]) - rhs[gq] * g.phi[q][l]);
      }
    }
  }
  return r;
}

Eigen::SparseMatrix<double> assemble_jacobian(const Field& y, double eps, double p) {
  if (!(eps > 0.0)) throw std::invalid_argument("assemble_jacobian requires eps > 0");
  const Grid& g = *y.grid;
  auto grads = gradient_at_quadrature(y);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(g.n_elems() * g.nq * g.nodes_per_elem * g.nodes_per_elem);
  for (std::size_t e = 0; e < g.n_elems(); ++e) {
    for (int q = 0; q < g.nq; ++q) {
      const std::size_t gq = e * g.nq + q;
      const DiffusionTensor A = diffusion_tensor(grads[gq], eps, p);
      const double w = g.quad_weights[gq];
      for (int i = 0; i < g.nodes_per_elem; ++i) {
        const int ii = g.interior_index[g.elems[e][i]];
        if (ii < 0) continue;
        for (int j = 0; j < g.nodes_per_elem; ++j) {
          const int jj = g.interior_index[g.elems[e][j]];
          if (jj < 0) continue;
          trips.emplace_back(ii, jj, w * A.quad(g.dphi[q][i], g.dphi[q][j]));
        }
      }
    }
  }
  Eigen::SparseMatrix<double> K(g.n_interior, g.n_interior);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

Eigen::SparseMatrix<double> assemble_weighted_mass(const Field& y,
                                                   const std::function<double(double)>& weight) {
  const Grid& g = *y.grid;
  CellField yv = values_at_quadrature(y);
  CellField w(g);
  for (std::size_t q = 0; q < g.n_quad(); ++q) w[q] = weight(yv[q]);
  return assemble_weighted_mass(g, w);
}

Eigen::SparseMatrix<double> assemble_weighted_mass(const Grid& g, const CellField& w) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(g.n_elems() * g.nq * g.nodes_per_elem * g.nodes_per_elem);
  for (std::size_t e = 0; e < g.n_elems(); ++e) {
    for (int q = 0; q < g.nq; ++q) {
      const std::size_t gq = e * g.nq + q;
      const double wq = g.quad_weights[gq] * w[gq];
      for (int i = 0; i < g.nodes_per_elem; ++i) {
        const int ii = g.interior_index[g.elems[e][i]];
        if (ii < 0) continue;
        for (int j = 0; j < g.nodes_per_elem; ++j) {
          const int jj = g.interior_index[g.elems[e][j]];
          if (jj < 0) continue;
          trips.emplace_back(ii, jj, wq * g.phi[q][i] * g.phi[q][j]);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> M(g.n_interior, g.n_interior);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

Eigen::VectorXd assemble_load(const Grid& g, const CellField& rhs) {
  Eigen::VectorXd l = Eigen::VectorXd::Zero(g.n_interior);
  for (std::size_t e = 0; e < g.n_elems(); ++e) {
    for (int q = 0; q < g.nq; ++q) {
      const std::size_t gq = e * g.nq + q;
      const double w = g.quad_weights[gq];
      for (int i = 0; i < g.nodes_per_elem; ++i) {
        const int ii = g.interior_index[g.elems[e][i]];
        if (ii >= 0) l[ii] += w * rhs[gq] * g.phi[q][i];
      }
    }
  }
  return l;
}

double state_energy(const Field& y, const CellField& rhs, double eps, double p) {
  const Grid& g = *y.grid;
  auto grads = gradient_at_quadrature(y);
  CellField yv = values_at_quadrature(y);
  CellField dens(g);
  for (std::size_t q = 0; q < g.n_quad(); ++q) {
    const double s2 = eps * eps + grads[q].norm2();
    dens[q] = std::pow(s2, 0.5 * p) / p - rhs[q] * yv[q];
  }
  return integrate(g, dens);
}

namespace {

// Shared sparse solve with SPD-first strategy; flips `indefinite` and falls
// back to LU when the Cholesky-type factorization reports trouble.
Eigen::VectorXd sparse_solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                             bool* indefinite) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd x = ldlt.solve(b);
    if (ldlt.info() == Eigen::Success) return x;
  }
  if (indefinite) *indefinite = true;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  if (lu.info() != Eigen::Success) throw std::runtime_error("sparse factorization failed");
  return lu.solve(b);
}

}  // namespace

Field solve_state(const Grid& grid, const CellField& rhs, double eps, double p, const Field& y0,
                  const NewtonConfig& cfg, SolveReport* report) {
  if (!(eps > 0.0)) throw std::invalid_argument("solve_state requires eps > 0");
  SolveReport rep;
  Field y = y0.grid ? y0 : Field(grid);
  // Dirichlet values are hard zeros regardless of the seed.
  for (std::size_t i = 0; i < grid.n_nodes(); ++i)
    if (grid.interior_index[i] < 0) y[i] = 0.0;

  Eigen::VectorXd r = assemble_residual(y, rhs, eps, p);
  const double r0 = r.norm();
  double energy = state_energy(y, rhs, eps, p);
  rep.energies.push_back(energy);

  for (int it = 0; it < cfg.max_iter; ++it) {
    if (r.norm() <= cfg.tol_abs + cfg.tol_rel * r0) {
      rep.converged = true;
      break;
    }
    Eigen::SparseMatrix<double> K = assemble_jacobian(y, eps, p);
    Eigen::VectorXd d = sparse_solve(K, -r, &rep.indefinite_jacobian);
    const double slope = r.dot(d);  // derivative of the energy along d

    double t = 1.0;
    Field cand = y;
    double cand_energy = energy;
    bool accepted = false;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      cand = field_from_interior(grid, interior_vector(y) + t * d);
      cand_energy = state_energy(cand, rhs, eps, p);
      if (cand_energy <= energy + cfg.armijo_slope * t * slope) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack_factor;
    }
    if (!accepted && cand_energy >= energy) break;  // stall: keep last iterate

    y = cand;
    energy = cand_energy;
    rep.step_lengths.push_back(t);
    rep.energies.push_back(energy);
    rep.iterations = it + 1;
    r = assemble_residual(y, rhs, eps, p);
  }
  if (!rep.converged) rep.converged = r.norm() <= cfg.tol_abs + cfg.tol_rel * r0;
  rep.residual = r.norm();
  rep.linf = norm(y, NormKind::Linf);
  if (report) *report = rep;
  return y;
}

Field solve_state_continued(const Grid& grid, const CellField& rhs, double eps_target, double p,
                            const NewtonConfig& cfg, SolveReport* report) {
  std::vector<double> path;
  for (double e = 1e-1; e > eps_target * 1.0001; e *= 1e-1) path.push_back(e);
  path.push_back(eps_target);
  Field y(grid);
  SolveReport rep;
  for (double e : path) y = solve_state(grid, rhs, e, p, y, cfg, &rep);
  if (report) *report = rep;
  return y;
}

Field solve_reaction(const Grid& grid, const PointwiseReaction& reaction, double eps, double p,
                     const Field& y0, const NewtonConfig& cfg, SolveReport* report) {
  if (!(eps > 0.0)) throw std::invalid_argument("solve_reaction requires eps > 0");
  SolveReport rep;
  Field y = y0.grid ? y0 : Field(grid);
  for (std::size_t i = 0; i < grid.n_nodes(); ++i)
    if (grid.interior_index[i] < 0) y[i] = 0.0;

  auto rhs_of = [&](const Field& yy) {
    CellField yv = values_at_quadrature(yy);
    CellField rhs(grid);
    for (std::size_t q = 0; q < grid.n_quad(); ++q) rhs[q] = reaction.value(q, yv[q]);
    return rhs;
  };

  CellField rhs = rhs_of(y);
  Eigen::VectorXd r = assemble_residual(y, rhs, eps, p);
  const double r0 = r.norm();

  for (int it = 0; it < cfg.max_iter; ++it) {
    if (r.norm() <= cfg.tol_abs + cfg.tol_rel * r0) {
      rep.converged = true;
      break;
    }
    Eigen::SparseMatrix<double> J = assemble_jacobian(y, eps, p);
    {
      CellField yv = values_at_quadrature(y);
      CellField w(grid);
      for (std::size_t q = 0; q < grid.n_quad(); ++q) w[q] = reaction.deriv(q, yv[q]);
      J -= assemble_weighted_mass(grid, w);
    }
    Eigen::VectorXd d = sparse_solve(J, -r, &rep.indefinite_jacobian);

    // Backtrack on the residual norm; sufficient decrease in ||r||.
    const double rn = r.norm();
    double t = 1.0;
    bool accepted = false;
    Field cand = y;
    Eigen::VectorXd rc = r;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      cand = field_from_interior(grid, interior_vector(y) + t * d);
      rc = assemble_residual(cand, rhs_of(cand), eps, p);
      if (rc.norm() <= (1.0 - cfg.armijo_slope * t) * rn) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack_factor;
    }
    if (!accepted) break;
    y = cand;
    r = rc;
    rep.step_lengths.push_back(t);
    rep.iterations = it + 1;
  }
  if (!rep.converged) rep.converged = r.norm() <= cfg.tol_abs + cfg.tol_rel * r0;
  rep.residual = r.norm();
  rep.linf = norm(y, NormKind::Linf);
  if (report) *report = rep;
  return y;
}

Field solve_semilinear(const Grid& grid, const ScalarFunc& f, const CellField& u, double eps,
                       double p, const Field& y0, const NewtonConfig& cfg, SolveReport* report) {
  PointwiseReaction reaction;
  reaction.value = [&](std::size_t q, double yv) { return f(yv) + u[q]; };
  reaction.deriv = [&](std::size_t, double yv) { return f.deriv(yv); };
  SolveReport rep;
  Field y = solve_reaction(grid, reaction, eps, p, y0, cfg, &rep);

  // Growth certificate over the achieved value range.
  CellField yv = values_at_quadrature(y);
  for (std::size_t q = 0; q < grid.n_quad(); ++q)
    if (!f.growth.admits(yv[q], f(yv[q]))) {
      rep.growth_violated = true;
      break;
    }
  if (report) *report = rep;
  return y;
}

std::vector<BranchSolution> multistart_semilinear(const Grid& grid, const ScalarFunc& f,
                                                  const CellField& u, double eps, double p,
                                                  const std::vector<Field>& seeds,
                                                  const NewtonConfig& cfg) {
  std::vector<BranchSolution> out;
  for (const Field& seed : seeds) {
    SolveReport rep;
    Field y = solve_semilinear(grid, f, u, eps, p, seed, cfg, &rep);
    if (!rep.converged) continue;
    bool duplicate = false;
    for (const auto& kept : out) {
      const double dist = (kept.y.nodal - y.nodal).cwiseAbs().maxCoeff();
      if (dist <= kDistinctSolutionLinf) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) out.push_back({std::move(y), rep});
  }
  return out;
}

}  // namespace ploc
