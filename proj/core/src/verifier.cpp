#include "ploc/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace ploc {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string diag_line(const std::string& key, double v) { return "  " + key + " = " + fmt(v); }

}  // namespace

bool VerificationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckReport& c) { return c.pass; });
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  for (const CheckReport& c : checks) {
    os << "[" << c.name << "] " << (c.pass ? "PASS" : "FAIL") << "\n";
    os << diag_line("value", c.value) << "\n";
    os << diag_line("threshold", c.threshold) << "  (" << c.comparison << ")\n";
    if (!c.diagnostics.empty()) os << c.diagnostics << "\n";
    os << "\n";
  }
  os << "overall: " << (all_pass() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

void write_report(const std::string& path, const VerificationReport& report) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);
  const std::string text = report.to_text();
  std::fwrite(text.data(), 1, text.size(), fp);
  std::fclose(fp);
}

CheckReport check_nontriviality(const MultiplierPair& pair) {
  CheckReport c;
  c.name = "nontriviality";
  c.threshold = 1e-8;
  c.comparison = "value > threshold";
  const double h10 = norm(pair.psi, NormKind::H10);
  c.value = pair.mu + h10;
  c.pass = c.value > c.threshold;
  const double l2_residual = std::abs(norm(pair.psi, NormKind::L2) + pair.mu - 1.0);
  c.diagnostics = diag_line("mu", pair.mu) + "\n" + diag_line("psi_h10", h10) + "\n" +
                  diag_line("l2_normalization_residual", l2_residual);
  if (pair.mu < 1e-6) c.diagnostics += "\n  note: possibly abnormal multiplier (mu < 1e-6)";
  return c;
}

CheckReport check_adjoint_residual(const ProblemSpec& spec, const Field& y, const Field& psi,
                                   double mu, double theta, double eps_check, double tol) {
  if (!(eps_check > 0.0))
    throw std::invalid_argument("check_adjoint_residual requires eps_check > 0");
  const Grid& g = *y.grid;
  auto grads = gradient_at_quadrature(y);
  auto grads_psi = gradient_at_quadrature(psi);
  CellField yv = values_at_quadrature(y);
  CellField pv = values_at_quadrature(psi);

  // Residual of  K psi - (f'(y) psi - mu f0_y)  over nondegenerate points.
  Eigen::VectorXd r = Eigen::VectorXd::Zero(g.n_interior);
  for (std::size_t e = 0; e < g.n_elems(); ++e) {
    for (int q = 0; q < g.nq; ++q) {
      const std::size_t gq = e * g.nq + q;
      if (grads[gq].norm() <= theta) continue;
      const DiffusionTensor A = diffusion_tensor(grads[gq], eps_check, spec.p);
      const Vec2 flux = A.apply(grads_psi[gq]);
      const double react = spec.f.deriv(yv[gq]) * pv[gq] - mu * spec.f0.deriv_y(g.quad_points[gq], yv[gq]);
      const double w = g.quad_weights[gq];
      for (int l = 0; l < g.nodes_per_elem; ++l) {
        const int ii = g.interior_index[g.elems[e][l]];
        if (ii >= 0) r[ii] += w * (dot(flux, g.dphi[q][l]) - react * g.phi[q][l]);
      }
    }
  }

  // Dual norm through the Poisson Riesz map: ||r||_* = sqrt(r^T S^{-1} r).
  Field zero(g);
  Eigen::SparseMatrix<double> S = assemble_jacobian(zero, 1.0, 2.0);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(S);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("Poisson stiffness factorization failed");
  const double dual2 = r.dot(ldlt.solve(r));
  const double dual = std::sqrt(std::max(0.0, dual2));
  const double scale = norm(psi, NormKind::H10) + std::abs(mu);

  CheckReport c;
  c.name = "adjoint_residual";
  c.threshold = tol;
  c.comparison = "value <= threshold";
  c.value = scale > 0.0 ? dual / scale : dual;
  c.pass = c.value <= c.threshold;
  c.diagnostics = diag_line("dual_norm_raw", dual) + "\n" + diag_line("scale_h10_plus_mu", scale) +
                  "\n" + diag_line("theta", theta) + "\n" + diag_line("eps_check", eps_check);
  return c;
}

CheckReport check_degenerate_set(const Field& y, const Field& psi, double theta, double tol) {
  const Grid& g = *y.grid;
  auto grads = gradient_at_quadrature(y);
  DegenerateMask mask = degenerate_mask(g, grads, theta);
  const double num = degenerate_gradient_norm(y, psi, theta);
  const double h10 = norm(psi, NormKind::H10);
  const double den = h10 * h10;

  CheckReport c;
  c.name = "degenerate_set";
  c.threshold = tol;
  c.comparison = "value <= threshold";
  c.value = den > 0.0 ? num / den : 0.0;
  c.pass = c.value <= c.threshold;
  c.diagnostics = diag_line("mask_measure", mask.measure) + "\n" + diag_line("theta", theta) +
                  "\n" + diag_line("gradient_mass_on_mask", num);
  return c;
}

CheckReport check_hamiltonian_max(const ProblemSpec& spec, const CellField& u, const Field& psi,
                                  double mu, int n_probes) {
  if (n_probes < 100) throw std::invalid_argument("check_hamiltonian_max requires n_probes >= 100");
  const Grid& g = *u.grid;
  CellField pv = values_at_quadrature(psi);

  double worst = -std::numeric_limits<double>::infinity();
  double worst_gap = 0.0;
  std::size_t worst_q = 0;
  for (std::size_t q = 0; q < g.n_quad(); ++q) {
    const Vec2 x = g.quad_points[q];
    const double h_cand = pv[q] * u[q] - mu * spec.g.value(x, u[q]);
    double h_max = h_cand;
    for (int j = 0; j < n_probes; ++j) {
      const double uu = spec.a + (spec.b - spec.a) * j / double(n_probes - 1);
      h_max = std::max(h_max, pv[q] * uu - mu * spec.g.value(x, uu));
    }
    const double rel = (h_max - h_cand) / (1.0 + std::abs(h_max));
    if (rel > worst) {
      worst = rel;
      worst_gap = h_max - h_cand;
      worst_q = q;
    }
  }

  CheckReport c;
  c.name = "hamiltonian_max";
  c.threshold = 1e-6;
  c.comparison = "value <= threshold";
  c.value = worst;
  c.pass = c.value <= c.threshold;
  c.diagnostics = diag_line("worst_absolute_gap", worst_gap) + "\n" +
                  diag_line("worst_quad_point_index", double(worst_q)) + "\n" +
                  diag_line("n_probes", double(n_probes));
  return c;
}

CheckReport check_spike_derivative(const ProblemSpec& spec, const PenaltyParams& pp,
                                   const ControlPair& pair, const Field& y,
                                   const ControlPair& probe, const NewtonConfig& ncfg,
                                   const std::vector<double>& deltas) {
  if (deltas.size() < 2) throw std::invalid_argument("check_spike_derivative needs >= 2 deltas");
  const Grid& g = *y.grid;

  CellField rhs0(g);
  rhs0.q = pair.v.q + pair.u.q;
  Field y0 = solve_state(g, rhs0, pp.eps, spec.p, y, ncfg);
  const double J0 = eval_J_sigma_eps(spec, pp, y0, pair);

  std::vector<double> quotients;
  std::string diag;
  for (double d : deltas) {
    ControlPair mix;
    mix.v = CellField(g);
    mix.u = CellField(g);
    mix.v.q = (1.0 - d) * pair.v.q + d * probe.v.q;
    mix.u.q = (1.0 - d) * pair.u.q + d * probe.u.q;
    CellField rhs(g);
    rhs.q = mix.v.q + mix.u.q;
    Field yd = solve_state(g, rhs, pp.eps, spec.p, y0, ncfg);
    const double Jd = eval_J_sigma_eps(spec, pp, yd, mix);
    quotients.push_back((Jd - J0) / d);
    diag += diag_line("quotient_delta_" + fmt(d), quotients.back()) + "\n";
  }

  // Linear Richardson step on the two smallest deltas: q(d) = D + c d + ...
  const std::size_t k = deltas.size() - 1;
  const double d1 = deltas[k - 1], d2 = deltas[k];
  const double extrap = (d1 * quotients[k] - d2 * quotients[k - 1]) / (d1 - d2);

  // Adjoint-side prediction: directional derivative along (probe - pair).
  AdjointGradient ag = gradient_via_adjoint(spec, pp, pair, y0, ncfg);
  CellField dens(g);
  for (std::size_t q = 0; q < g.n_quad(); ++q)
    dens[q] = ag.grad_v[q] * (probe.v[q] - pair.v[q]) + ag.grad_u[q] * (probe.u[q] - pair.u[q]);
  const double predicted = integrate(g, dens);

  const double mismatch = std::abs(extrap - predicted);
  const double allowed = 1e-3 * std::abs(predicted) + 1e-6;

  CheckReport c;
  c.name = "spike_derivative";
  c.threshold = -1e-5;
  c.comparison = "value >= threshold (one-sided derivative)";
  c.value = extrap;
  c.pass = extrap >= -1e-5 && mismatch <= allowed;
  c.diagnostics = diag + diag_line("adjoint_predicted", predicted) + "\n" +
                  diag_line("mismatch", mismatch) + "\n" + diag_line("mismatch_allowed", allowed);
  return c;
}

CheckReport check_bangbang(const ProblemSpec& spec, const CellField& u, const Field& psi,
                           double mu, const Field& y) {
  const Grid& g = *u.grid;
  CellField pv = values_at_quadrature(psi);
  const double delta_flat = 1e-3 * (std::abs(mu) + norm(psi, NormKind::Linf));

  CellField at_bounds(g), flat(g);
  for (std::size_t q = 0; q < g.n_quad(); ++q) {
    const bool extreme = std::abs(u[q] - spec.a) <= 1e-9 || std::abs(u[q] - spec.b) <= 1e-9;
    at_bounds[q] = extreme ? 1.0 : 0.0;
    flat[q] = std::abs(pv[q] - mu) <= delta_flat ? 1.0 : 0.0;
  }
  const double measure = spec.domain.measure();
  const double frac_extreme = integrate(g, at_bounds) / measure;
  const double frac_flat = integrate(g, flat) / measure;

  auto grads = gradient_at_quadrature(y);
  DegenerateMask mask = degenerate_mask(g, grads, default_degenerate_theta(grads));
  const double frac_degenerate = mask.measure / measure;

  CheckReport c;
  c.name = "bangbang";
  c.threshold = 0.99;
  c.comparison = "value >= threshold";
  c.value = frac_extreme;
  c.pass = frac_extreme >= 0.99 && frac_flat <= 0.01 && frac_degenerate <= 0.01;
  c.diagnostics = diag_line("flat_set_fraction", frac_flat) + "\n" +
                  diag_line("degenerate_fraction", frac_degenerate) + "\n" +
                  diag_line("delta_flat", delta_flat);
  return c;
}

}  // namespace ploc
