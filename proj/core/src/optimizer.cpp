#include "ploc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ploc {

namespace {

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double golden_max(const std::function<double(double)>& phi, double lo, double hi, int iters) {
  constexpr double invphi = 0.6180339887498949;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = phi(c), fd = phi(d);
  for (int i = 0; i < iters; ++i) {
    if (fc > fd) {
      hi = d; d = c; fd = fc;
      c = hi - invphi * (hi - lo);
      fc = phi(c);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + invphi * (hi - lo);
      fd = phi(d);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double maximize_scalar_u(const ProblemSpec& spec, Vec2 x, double c, double gscale, double q,
                         double r, int golden_iters) {
  const double a = spec.a, b = spec.b;
  switch (spec.g.form) {
    case ControlCost::Form::Linear: {
      const double slope = c - gscale * spec.g.lin_slope;
      if (q > 0.0) return clip(r + slope / (2.0 * q), a, b);
      if (slope > 0.0) return b;
      if (slope < 0.0) return a;
      return 0.5 * (a + b);  // exactly flat: midpoint tie-break
    }
    case ControlCost::Form::Quadratic: {
      const double curv = gscale * spec.g.quad_a + q;
      const double lin = c - gscale * spec.g.quad_b + 2.0 * q * r;
      if (curv > 0.0) return clip(lin / (2.0 * curv), a, b);
      if (lin > 0.0) return b;
      if (lin < 0.0) return a;
      return 0.5 * (a + b);
    }
    case ControlCost::Form::Generic:
      break;
  }
  auto phi = [&](double u) {
    const double du = u - r;
    return c * u - gscale * spec.g.value(x, u) - q * du * du;
  };
  const double interior = golden_max(phi, a, b, std::max(golden_iters, 30));
  double best = interior, fbest = phi(interior);
  if (phi(a) > fbest) { best = a; fbest = phi(a); }
  if (phi(b) > fbest) { best = b; }
  return best;
}

CellField update_v_pointwise(const ProblemSpec& spec, const PenaltyParams& pp, const Field& psi,
                             const Field& y) {
  const Grid& grid = *y.grid;
  CellField yv = values_at_quadrature(y);
  CellField pv = values_at_quadrature(psi);
  CellField v(grid);
  const double denom = pp.m + pp.tau + pp.sigma;
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const double unclipped = (0.5 * pv[q] + pp.m * spec.f(yv[q]) + pp.tau * pp.f_ybar[q] +
                              pp.sigma * pp.v_center[q]) / denom;
    v[q] = clip(unclipped, pp.v_lo(q), pp.v_hi(q));
  }
  return v;
}

CellField update_u_pointwise(const ProblemSpec& spec, const PenaltyParams& pp, const Field& psi,
                             const InnerSolveConfig& cfg) {
  const Grid& grid = *psi.grid;
  CellField pv = values_at_quadrature(psi);
  CellField u(grid);
  const double q2 = pp.tau + pp.sigma;
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const double r = q2 > 0.0 ? (pp.tau * pp.ubar[q] + pp.sigma * pp.u_center[q]) / q2 : 0.0;
    u[q] = maximize_scalar_u(spec, grid.quad_points[q], pv[q], 1.0, q2, r, cfg.golden_iters);
  }
  return u;
}

CellField maximize_limit_hamiltonian(const ProblemSpec& spec, const Field& psi, double mu,
                                     int golden_iters) {
  const Grid& grid = *psi.grid;
  CellField pv = values_at_quadrature(psi);
  CellField u(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q)
    u[q] = maximize_scalar_u(spec, grid.quad_points[q], pv[q], mu, 0.0, 0.0, golden_iters);
  return u;
}

namespace {

ControlPair project_pair(const PenaltyParams& pp, const ProblemSpec& spec, ControlPair pair) {
  for (std::size_t q = 0; q < pair.v.size(); ++q) {
    pair.v[q] = clip(pair.v[q], pp.v_lo(q), pp.v_hi(q));
    pair.u[q] = clip(pair.u[q], spec.a, spec.b);
  }
  return pair;
}

// One sweep step at proximal weight eta: the u-update is the pointwise
// Hamiltonian maximization from the frozen adjoint; the v-update is
// substituted into the state equation and the coupled system is solved by
// Newton (solve_reaction). Substituting v = v*(y) instead of freezing it at
// the previous state kills the large-m instability of the plain alternation:
// v* tends to f(y) as m grows, and iterating v -> state -> v is then a Picard
// iteration for the semilinear equation, which diverges once f' times the
// inverse-stiffness scale exceeds 1. The proximal term eta |u - u_cur|^2
// tempers only the u-update; it leaves fixed points unchanged for any eta.
// Damping v the same way would backfire: an eta (v_cur - f(y)) term inside v
// makes the adjoint source m (v - f(y)) grow with eta, so past a point more
// damping no longer lowers the sweep gain, it only strangles the step.
bool coupled_step(const ProblemSpec& spec, const PenaltyParams& pp, const Field& psi,
                  const InnerSolveConfig& cfg, const NewtonConfig& newton, double eta,
                  const ControlPair& cur, const Field& y_seed, ControlPair& out, Field& y_out) {
  const Grid& grid = *y_seed.grid;
  CellField pv = values_at_quadrature(psi);

  out.u = CellField(grid);
  const double q2 = pp.tau + pp.sigma + eta;
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const double r =
        q2 > 0.0 ? (pp.tau * pp.ubar[q] + pp.sigma * pp.u_center[q] + eta * cur.u[q]) / q2 : 0.0;
    out.u[q] = maximize_scalar_u(spec, grid.quad_points[q], pv[q], 1.0, q2, r, cfg.golden_iters);
  }

  const double denom = pp.m + pp.tau + pp.sigma;
  auto vraw = [&](std::size_t q, double yv) {
    return (0.5 * pv[q] + pp.m * spec.f(yv) + pp.tau * pp.f_ybar[q] +
            pp.sigma * pp.v_center[q]) / denom;
  };
  PointwiseReaction reaction;
  reaction.value = [&](std::size_t q, double yv) {
    return clip(vraw(q, yv), pp.v_lo(q), pp.v_hi(q)) + out.u[q];
  };
  reaction.deriv = [&](std::size_t q, double yv) {
    const double raw = vraw(q, yv);
    if (raw <= pp.v_lo(q) || raw >= pp.v_hi(q)) return 0.0;  // clip active: flat
    return pp.m * spec.f.deriv(yv) / denom;
  };
  SolveReport rep;
  y_out = solve_reaction(grid, reaction, pp.eps, spec.p, y_seed, newton, &rep);
  if (!rep.converged) return false;

  out.v = CellField(grid);
  CellField yv = values_at_quadrature(y_out);
  for (std::size_t q = 0; q < grid.n_quad(); ++q)
    out.v[q] = clip(vraw(q, yv[q]), pp.v_lo(q), pp.v_hi(q));
  return true;
}

double control_distance_l2(const Grid& grid, const ControlPair& x, const ControlPair& y) {
  CellField d(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const double dv = x.v[q] - y.v[q];
    const double du = x.u[q] - y.u[q];
    d[q] = dv * dv + du * du;
  }
  return std::sqrt(std::max(0.0, integrate(grid, d)));
}

}  // namespace

InnerSolveResult solve_inner(const ProblemSpec& spec, const PenaltyParams& pp,
                             const ControlPair& warm, const Field& y_warm,
                             const InnerSolveConfig& cfg, const NewtonConfig& newton) {
  const Grid& grid = *warm.v.grid;
  InnerSolveResult res;
  res.pair = project_pair(pp, spec, warm);

  CellField rhs(grid);
  rhs.q = res.pair.v.q + res.pair.u.q;
  res.y = solve_state(grid, rhs, pp.eps, spec.p, y_warm, newton);
  double J = eval_J_sigma_eps(spec, pp, res.y, res.pair);
  res.objective_history.push_back(J);
  res.psi = solve_adjoint(res.y, pp.eps, spec.p, adjoint_source(spec, pp, res.y, res.pair.v));

  const double accept_slack = 1e-12;
  // Steps shorter than this are below what the objective can resolve: the
  // sufficient-decrease demand is O(len^2) while J carries O(accept_slack)
  // solver noise on hard stages, so accept/reject outcomes there are coin
  // flips. Such steps are taken unconditionally and the step-ratio test is
  // not trusted.
  const double noise_len = 0.1 * cfg.control_tol_l2;
  const double eta0 = 1e-3;
  double eta = 0.0;  // adaptive proximal damping, carried across sweeps
  Eigen::VectorXd prev_step_v, prev_step_u;
  bool have_prev_step = false;
  bool rho_hot = false;  // one non-contracting ratio seen; confirm before damping

  // Anderson mixing state: snapshots of the iterate and its undamped pointwise
  // target, both packed as one vector (v then u). The target is a pure
  // function of the iterate, so the history survives eta changes unharmed.
  const std::size_t nq = grid.n_quad();
  std::vector<Eigen::VectorXd> aa_x, aa_g;
  int aa_cooldown = 0;
  auto pack = [&](const ControlPair& c) {
    Eigen::VectorXd z(2 * nq);
    z.head(nq) = c.v.q;
    z.tail(nq) = c.u.q;
    return z;
  };

  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    const double J_before = J;
    ControlPair next;
    Field y_next;
    double J_next = 0.0;
    bool have_candidate = false;
    int rejections = 0;

    if (cfg.use_pointwise_updates) {
      // The undamped explicit map decides convergence: its fixed point is the
      // inner optimality system. Either the pair is close to its pointwise
      // maximizer in L2, or the residual misfit costs less than the gap
      // tolerance in integrated Hamiltonian (flat switch regions).
      ControlPair target0;
      target0.v = update_v_pointwise(spec, pp, res.psi, res.y);
      target0.u = update_u_pointwise(spec, pp, res.psi, cfg);
      if (control_distance_l2(grid, target0, res.pair) < cfg.control_tol_l2) {
        res.converged = true;
        break;
      }
      const double gap =
          integral_hamiltonian(spec, pp, res.y, res.psi, target0, HamiltonianMode::SigmaEps) -
          integral_hamiltonian(spec, pp, res.y, res.psi, res.pair, HamiltonianMode::SigmaEps);
      if (gap <= cfg.hamiltonian_gap_tol * (1.0 + std::abs(J))) {
        res.converged = true;
        break;
      }

      // Anderson jump: combine the recent residuals g(x_i) - x_i so that the
      // least-squares mix cancels the slow modes, and propose the matching
      // combination of targets. One secant direction (plain Aitken) leaves a
      // jump-backwash two-mode cycle on large-m stages; two or three kill it.
      // Safeguarded by a no-increase test on the true objective.
      if (cfg.anderson_depth > 1) {
        aa_x.push_back(pack(res.pair));
        aa_g.push_back(pack(target0));
        if (aa_x.size() > static_cast<std::size_t>(cfg.anderson_depth)) {
          aa_x.erase(aa_x.begin());
          aa_g.erase(aa_g.begin());
        }
        if (aa_cooldown > 0) --aa_cooldown;
        const std::size_t h = aa_x.size();
        if (h >= 2 && aa_cooldown == 0) {
          const std::size_t mcols = h - 1;
          Eigen::VectorXd fk = aa_g.back() - aa_x.back();
          Eigen::MatrixXd A(2 * nq, mcols);
          for (std::size_t j = 0; j < mcols; ++j)
            A.col(j) = (aa_g[j + 1] - aa_x[j + 1]) - (aa_g[j] - aa_x[j]);
          Eigen::VectorXd gamma = A.colPivHouseholderQr().solve(fk);
          Eigen::VectorXd xa = aa_g.back();
          for (std::size_t j = 0; j < mcols; ++j) xa -= gamma[j] * (aa_g[j + 1] - aa_g[j]);
          ControlPair cand;
          cand.v = CellField(grid);
          cand.u = CellField(grid);
          cand.v.q = xa.head(nq);
          cand.u.q = xa.tail(nq);
          cand = project_pair(pp, spec, cand);
          CellField rhs2(grid);
          rhs2.q = cand.v.q + cand.u.q;
          Field y_c = solve_state(grid, rhs2, pp.eps, spec.p, res.y, newton);
          const double J_c = eval_J_sigma_eps(spec, pp, y_c, cand);
          if (J_c <= J + accept_slack * (1.0 + std::abs(J))) {
            res.pair = std::move(cand);
            res.y = std::move(y_c);
            J = J_c;
            res.objective_history.push_back(J);
            res.sweeps = sweep + 1;
            res.psi =
                solve_adjoint(res.y, pp.eps, spec.p, adjoint_source(spec, pp, res.y, res.pair.v));
            have_prev_step = false;  // step statistics do not span a jump
            rho_hot = false;
            continue;
          }
          aa_x.clear();
          aa_g.clear();
          aa_cooldown = 5;
        }
      }

      for (int k = 0; k < 40 && !have_candidate; ++k) {
        ControlPair cand;
        Field y_c;
        if (!coupled_step(spec, pp, res.psi, cfg, newton, eta, res.pair, res.y, cand, y_c)) {
          eta = eta == 0.0 ? eta0 : 2.0 * eta;  // Newton stalled: damp the step
          ++rejections;
          continue;
        }
        const double d2 = control_distance_l2(grid, cand, res.pair);
        const double J_c = eval_J_sigma_eps(spec, pp, y_c, cand);
        if (d2 < noise_len || J_c <= J - 1e-4 * d2 * d2 + accept_slack * (1.0 + std::abs(J))) {
          next = std::move(cand);
          y_next = std::move(y_c);
          J_next = J_c;
          have_candidate = true;
        } else {
          eta = eta == 0.0 ? eta0 : 2.0 * eta;  // overshoot: damp harder
          ++rejections;
        }
      }
      // eta is sticky: within a stage it only ratchets up. Relaxing it after a
      // clean sweep re-destabilizes the map on the next one, and the resulting
      // accept/reject sawtooth starves the Aitken tail of the two consecutive
      // same-map steps it needs.
    }

    if (!have_candidate) {
      // Either pure-PG mode or an alternating sweep that failed to descend:
      // projected gradient with Armijo backtracking from the current pair.
      AdjointGradient gr = gradient_via_adjoint(spec, pp, res.pair, res.y, newton);
      double t = cfg.pg_step0;
      bool accepted = false;
      for (int bt = 0; bt <= cfg.pg_max_backtracks; ++bt) {
        ControlPair cand;
        cand.v = CellField(grid);
        cand.u = CellField(grid);
        cand.v.q = res.pair.v.q - t * gr.grad_v.q;
        cand.u.q = res.pair.u.q - t * gr.grad_u.q;
        cand = project_pair(pp, spec, cand);
        const double move = control_distance_l2(grid, cand, res.pair);
        if (move == 0.0) break;
        CellField rhs3(grid);
        rhs3.q = cand.v.q + cand.u.q;
        Field y_c = solve_state(grid, rhs3, pp.eps, spec.p, res.y, newton);
        const double J_c = eval_J_sigma_eps(spec, pp, y_c, cand);
        if (J_c <= J - 1e-4 * move * move / t) {
          next = cand;
          y_next = y_c;
          J_next = J_c;
          res.psi = gr.psi;
          accepted = true;
          ++res.pg_steps;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        res.converged = cfg.use_pointwise_updates ? false : true;
        if (!res.converged) res.stall_reason = "no descent step found";
        break;
      }
    }

    const double delta = control_distance_l2(grid, next, res.pair);
    Eigen::VectorXd step_v = next.v.q - res.pair.v.q;
    Eigen::VectorXd step_u = next.u.q - res.pair.u.q;
    res.pair = next;
    res.y = y_next;
    J = J_next;
    res.objective_history.push_back(J);
    res.sweeps = sweep + 1;
    res.psi = solve_adjoint(res.y, pp.eps, spec.p, adjoint_source(spec, pp, res.y, res.pair.v));
    if (delta < cfg.control_tol_l2) {
      res.converged = true;
      break;
    }

    // Orbit detection: a non-contracting step ratio with the objective
    // stagnant at noise level is a slowly growing mode the acceptance slack
    // cannot reject (it raises J by less than the slack per sweep); damp
    // harder and restart the step statistics under the new map. Two caveats
    // learned the hard way: a ratio near 1 with real objective progress is a
    // switch front traveling downhill, which damping only slows, so it is
    // left to the Anderson jumps; and the sweep right after a jump routinely
    // reports one transient ratio above 1 before the tail settles, so the
    // bump waits for two in a row.
    const bool clean = rejections == 0;
    const bool measured = clean && have_prev_step && delta > noise_len;
    if (!measured) rho_hot = false;
    if (measured) {
      const double den = prev_step_v.squaredNorm() + prev_step_u.squaredNorm();
      const double rho =
          den > 0.0 ? (step_v.dot(prev_step_v) + step_u.dot(prev_step_u)) / den : 0.0;
      const bool j_progress = (J_before - J) > 10.0 * accept_slack * (1.0 + std::abs(J));
      if (std::abs(rho) > 0.9995 && !j_progress) {
        if (rho_hot) {
          eta = eta == 0.0 ? eta0 : 2.0 * eta;
          have_prev_step = false;
          rho_hot = false;
          continue;
        }
        rho_hot = true;
      } else {
        rho_hot = false;
      }
    }
    prev_step_v = std::move(step_v);
    prev_step_u = std::move(step_u);
    have_prev_step = clean;
  }

  if (!res.converged && res.stall_reason.empty()) res.stall_reason = "sweep budget exhausted";
  res.objective = J;
  res.hamiltonian_integral =
      integral_hamiltonian(spec, pp, res.y, res.psi, res.pair, HamiltonianMode::SigmaEps);

  // Variational-inequality diagnostic: the solved pair should (weakly) beat
  // random admissible probes in integrated Hamiltonian.
  std::mt19937_64 rng(cfg.probe_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.probe_count; ++k) {
    ControlPair probe;
    probe.v = CellField(grid);
    probe.u = CellField(grid);
    for (std::size_t q = 0; q < grid.n_quad(); ++q) {
      probe.v[q] = pp.v_lo(q) + 2.0 * unit(rng);
      probe.u[q] = spec.a + (spec.b - spec.a) * unit(rng);
    }
    const double hp =
        integral_hamiltonian(spec, pp, res.y, res.psi, probe, HamiltonianMode::SigmaEps);
    worst = std::min(worst, res.hamiltonian_integral - hp);
  }
  res.hamiltonian_gap_min = worst;
  return res;
}

}  // namespace ploc
