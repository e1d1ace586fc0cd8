#include "ploc/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace ploc {

void PenaltyParams::validate(const ProblemSpec& spec) const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (!(m >= 1.0)) throw std::invalid_argument("m must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must lie in (0, 1]");
  for (std::size_t q = 0; q < ubar.size(); ++q) {
    if (ubar[q] < spec.a - 1e-12 || ubar[q] > spec.b + 1e-12)
      throw std::invalid_argument("reference control leaves [a, b]");
    if (u_center[q] < spec.a - 1e-12 || u_center[q] > spec.b + 1e-12)
      throw std::invalid_argument("proximal u-center leaves [a, b]");
    if (v_center[q] < v_lo(q) - 1e-12 || v_center[q] > v_hi(q) + 1e-12)
      throw std::invalid_argument("proximal v-center leaves the admissible tube");
  }
}

PenaltyParams make_penalty_params(const ProblemSpec& spec, const Grid& grid, const Field& ybar,
                                  const CellField& ubar, double tau, double m, double sigma,
                                  double eps) {
  PenaltyParams pp;
  pp.tau = tau;
  pp.m = m;
  pp.sigma = sigma;
  pp.eps = eps;
  pp.ybar = ybar;
  CellField yv = values_at_quadrature(ybar);
  pp.f_ybar = CellField(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) pp.f_ybar[q] = spec.f(yv[q]);
  pp.ubar = ubar;
  pp.u_center = ubar;
  pp.v_center = pp.f_ybar;  // centers default to the reference point
  return pp;
}

double eval_J(const ProblemSpec& spec, const Field& y, const CellField& u) {
  const Grid& grid = *y.grid;
  CellField yv = values_at_quadrature(y);
  CellField dens(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const Vec2 x = grid.quad_points[q];
    dens[q] = spec.f0.value(x, yv[q]) + spec.g.value(x, u[q]);
  }
  return integrate(grid, dens);
}

namespace {

double penalty_integral(const ProblemSpec& spec, const PenaltyParams& pp, const Field& y,
                        const ControlPair& pair, bool with_sigma) {
  const Grid& grid = *y.grid;
  CellField yv = values_at_quadrature(y);
  CellField dens(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const double dv = pair.v[q] - spec.f(yv[q]);
    const double du = pair.u[q] - pp.ubar[q];
    const double dvr = pair.v[q] - pp.f_ybar[q];
    double val = pp.m * dv * dv + pp.tau * du * du + pp.tau * dvr * dvr;
    if (with_sigma) {
      const double dvc = pair.v[q] - pp.v_center[q];
      const double duc = pair.u[q] - pp.u_center[q];
      val += pp.sigma * (dvc * dvc + duc * duc);
    }
    dens[q] = val;
  }
  return integrate(grid, dens);
}

}  // namespace

double eval_J_tau_m(const ProblemSpec& spec, const PenaltyParams& pp, const Field& y,
                    const ControlPair& pair) {
  return eval_J(spec, y, pair.u) + penalty_integral(spec, pp, y, pair, false);
}

double eval_J_sigma_eps(const ProblemSpec& spec, const PenaltyParams& pp, const Field& y,
                        const ControlPair& pair) {
  return eval_J(spec, y, pair.u) + penalty_integral(spec, pp, y, pair, true);
}

PointRefs point_refs(const Grid& grid, const PenaltyParams& pp, std::size_t q) {
  return {grid.quad_points[q], pp.ubar[q], pp.f_ybar[q], pp.u_center[q], pp.v_center[q]};
}

double eval_hamiltonian(const ProblemSpec& spec, const PenaltyParams& pp, const PointRefs& at,
                        double y, double psi, double v, double u, HamiltonianMode mode,
                        double mu) {
  if (mode == HamiltonianMode::Limit) return psi * u - mu * spec.g.value(at.x, u);
  const double dv = v - spec.f(y);
  const double du = u - at.ubar;
  const double dvr = v - at.f_ybar;
  double h = psi * (v + u) - spec.g.value(at.x, u) - pp.m * dv * dv - pp.tau * du * du -
             pp.tau * dvr * dvr;
  if (mode == HamiltonianMode::SigmaEps) {
    const double duc = u - at.u_center;
    const double dvc = v - at.v_center;
    h -= pp.sigma * (duc * duc + dvc * dvc);
  }
  return h;
}

double integral_hamiltonian(const ProblemSpec& spec, const PenaltyParams& pp, const Field& y,
                            const Field& psi, const ControlPair& pair, HamiltonianMode mode,
                            double mu) {
  const Grid& grid = *y.grid;
  CellField yv = values_at_quadrature(y);
  CellField pv = values_at_quadrature(psi);
  CellField dens(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q)
    dens[q] = eval_hamiltonian(spec, pp, point_refs(grid, pp, q), yv[q], pv[q], pair.v[q],
                               pair.u[q], mode, mu);
  return integrate(grid, dens);
}

CellField adjoint_source(const ProblemSpec& spec, const PenaltyParams& pp, const Field& y,
                         const CellField& v) {
  const Grid& grid = *y.grid;
  CellField yv = values_at_quadrature(y);
  CellField src(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const Vec2 x = grid.quad_points[q];
    src[q] = -spec.f0.deriv_y(x, yv[q]) - 2.0 * pp.m * (spec.f(yv[q]) - v[q]) * spec.f.deriv(yv[q]);
  }
  return src;
}

AdjointGradient gradient_via_adjoint(const ProblemSpec& spec, const PenaltyParams& pp,
                                     const ControlPair& pair, const Field& y_warm,
                                     const NewtonConfig& cfg) {
  const Grid& grid = *pair.v.grid;
  CellField rhs(grid);
  rhs.q = pair.v.q + pair.u.q;

  AdjointGradient out;
  out.y = solve_state(grid, rhs, pp.eps, spec.p, y_warm, cfg, &out.state_report);
  out.psi = solve_adjoint(out.y, pp.eps, spec.p, adjoint_source(spec, pp, out.y, pair.v));

  CellField yv = values_at_quadrature(out.y);
  CellField pv = values_at_quadrature(out.psi);
  out.grad_v = CellField(grid);
  out.grad_u = CellField(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const Vec2 x = grid.quad_points[q];
    out.grad_v[q] = -pv[q] + 2.0 * pp.m * (pair.v[q] - spec.f(yv[q])) +
                    2.0 * pp.tau * (pair.v[q] - pp.f_ybar[q]) +
                    2.0 * pp.sigma * (pair.v[q] - pp.v_center[q]);
    out.grad_u[q] = -pv[q] + control_slope(spec.g, x, pair.u[q], spec.a, spec.b) +
                    2.0 * pp.tau * (pair.u[q] - pp.ubar[q]) +
                    2.0 * pp.sigma * (pair.u[q] - pp.u_center[q]);
  }
  return out;
}

}  // namespace ploc
