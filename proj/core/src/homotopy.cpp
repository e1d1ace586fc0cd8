#include "ploc/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace ploc {

void Schedule::validate() const {
  auto decreasing = [](const std::vector<double>& s) {
    for (std::size_t i = 1; i < s.size(); ++i)
      if (!(s[i] < s[i - 1])) return false;
    return true;
  };
  if (eps.empty() || sigma.empty() || m.empty() || tau.empty())
    throw std::invalid_argument("schedule: all four sequences must be nonempty");
  if (!decreasing(eps)) throw std::invalid_argument("schedule: eps must decrease");
  if (eps.front() > 1.0 || eps.back() < kMinEps)
    throw std::invalid_argument("schedule: eps must stay within [1e-8, 1]");
  for (std::size_t i = 1; i < sigma.size(); ++i)
    if (!(sigma[i] < sigma[i - 1])) throw std::invalid_argument("schedule: sigma must decrease");
  if (sigma.back() < 0.0) throw std::invalid_argument("schedule: sigma must be >= 0");
  for (std::size_t i = 1; i < m.size(); ++i)
    if (!(m[i] > m[i - 1])) throw std::invalid_argument("schedule: m must increase");
  if (m.front() < 1.0) throw std::invalid_argument("schedule: m must start at >= 1");
  if (m.back() > kMaxPenaltyM) throw std::invalid_argument("schedule: m is capped at 1e4");
  if (!decreasing(tau)) throw std::invalid_argument("schedule: tau must decrease");
  if (!(tau.front() < 1.0 && tau.back() > 0.0))
    throw std::invalid_argument("schedule: tau must stay within (0, 1)");
}

double bisect_parameter(double prev, double next) {
  if (prev > 0.0 && next > 0.0) return std::sqrt(prev * next);
  return 0.5 * (prev + next);
}

namespace {

using nlohmann::json;

json record_to_json(const StageRecord& r) {
  return json{{"record", r.kind},
              {"tau", r.tau},
              {"m", r.m},
              {"sigma", r.sigma},
              {"eps", r.eps},
              {"objective", r.objective},
              {"penalty_l2", r.penalty_l2},
              {"control_move_l2", r.control_move_l2},
              {"mu", r.mu},
              {"normalization_residual", r.normalization_residual},
              {"hamiltonian_gap", r.hamiltonian_gap},
              {"penalty_bound_residual", r.penalty_bound_residual},
              {"psi_limit_indicator", r.psi_limit_indicator},
              {"degenerate_norm_rel", r.degenerate_norm_rel},
              {"degenerate_measure", r.degenerate_measure},
              {"weighted_energy_eps", r.weighted_energy_eps},
              {"weighted_energy_zero", r.weighted_energy_zero},
              {"psi_raw_l2", r.psi_raw_l2},
              {"psi_raw_linf", r.psi_raw_linf},
              {"f_drift_linf", r.f_drift_linf},
              {"past_n_tau", r.past_n_tau},
              {"inner_converged", r.inner_converged},
              {"inner_sweeps", r.inner_sweeps},
              {"pg_steps", r.pg_steps},
              {"insertions", r.insertions}};
}

}  // namespace

void write_telemetry(const std::string& path, const HomotopyTelemetry& t) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);
  json meta{{"record", "meta"},
            {"schedule_eps", t.schedule.eps},
            {"schedule_sigma", t.schedule.sigma},
            {"schedule_m", t.schedule.m},
            {"schedule_tau", t.schedule.tau},
            {"bootstrap_heuristic", t.bootstrap_heuristic},
            {"n_tau_policy", t.n_tau_policy},
            {"aborted", t.aborted},
            {"abort_reason", t.abort_reason},
            {"last_inner_failure", t.last_inner_failure},
            {"extraction_distance_l2", t.extraction_distance_l2},
            {"total_insertions", t.total_insertions}};
  std::fprintf(fp, "%s\n", meta.dump().c_str());
  for (const StageRecord& r : t.records)
    std::fprintf(fp, "%s\n", record_to_json(r).dump().c_str());
  std::fclose(fp);
}

namespace {

struct Workspace {
  const ProblemSpec& spec;
  const Grid& grid;
  const Field& ybar;
  const CellField& ubar;
  const Schedule& sched;
  const InnerSolveConfig& icfg;
  const NewtonConfig& ncfg;

  ControlPair cur;
  Field y;
  CellField u_prev_stage;
  CellField f_at_ybar;

  HomotopyResult* R = nullptr;
  int total_insertions = 0;
  bool aborted = false;

  MultiplierPair last_stage_pair;
  PenaltyParams last_pp;
  std::uint64_t record_counter = 0;
};

PenaltyParams stage_params(Workspace& w, double tau, double m, double sigma, double eps,
                           const CellField& v_c, const CellField& u_c) {
  PenaltyParams pp =
      make_penalty_params(w.spec, w.grid, w.ybar, w.ubar, tau, m, sigma, eps);
  pp.v_center = v_c;
  pp.u_center = u_c;
  return pp;
}

// Shared diagnostics computed for every telemetry record.
void fill_common_diagnostics(Workspace& w, StageRecord& r, const Field& y, const Field& psi_raw,
                             const ControlPair& pair) {
  const Grid& grid = w.grid;
  CellField yv = values_at_quadrature(y);
  CellField pv = values_at_quadrature(psi_raw);

  MultiplierPair mp = normalize_multiplier(psi_raw);
  r.mu = mp.mu;
  r.normalization_residual = mp.normalization_residual;
  r.psi_raw_l2 = norm(psi_raw, NormKind::L2);
  r.psi_raw_linf = norm(psi_raw, NormKind::Linf);

  CellField pen(grid), limit_gap(grid);
  double bound_residual = 0.0, f_drift = 0.0;
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const double fy = w.spec.f(yv[q]);
    const double dv = pair.v[q] - fy;
    pen[q] = dv * dv;
    const double excess = std::abs(r.m * dv) - 2.0 * std::abs(pv[q]) - r.tau;
    bound_residual = std::max(bound_residual, std::max(0.0, excess));
    limit_gap[q] = 2.0 * mp.mu * r.m * dv - mp.mu * pv[q];
    f_drift = std::max(f_drift, std::abs(fy - w.f_at_ybar[q]));
  }
  r.penalty_l2 = std::sqrt(std::max(0.0, integrate(grid, pen)));
  r.penalty_bound_residual = bound_residual;
  r.psi_limit_indicator = norm_l2(grid, limit_gap);
  r.f_drift_linf = f_drift;
  r.past_n_tau = f_drift < 0.5;

  auto grads = gradient_at_quadrature(y);
  const double theta = default_degenerate_theta(grads);
  DegenerateMask mask = degenerate_mask(grid, grads, theta);
  r.degenerate_measure = mask.measure;
  const double num = degenerate_gradient_norm(y, mp.psi, theta);
  const double h10 = norm(mp.psi, NormKind::H10);
  r.degenerate_norm_rel = h10 > 0.0 ? num / (h10 * h10) : 0.0;
  r.weighted_energy_eps = weighted_energy(y, mp.psi, r.eps, w.spec.p, theta);
  r.weighted_energy_zero = weighted_energy(y, mp.psi, 0.0, w.spec.p, theta);
}

double min_probe_gap(Workspace& w, const PenaltyParams& pp, const Field& y, const Field& psi,
                     const ControlPair& pair, std::uint64_t salt) {
  const Grid& grid = w.grid;
  const double h_star =
      integral_hamiltonian(w.spec, pp, y, psi, pair, HamiltonianMode::SigmaEps);
  std::mt19937_64 rng(w.icfg.probe_seed ^ (salt * 0x9e3779b97f4a7c15ull + 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < w.icfg.probe_count; ++k) {
    ControlPair probe;
    probe.v = CellField(grid);
    probe.u = CellField(grid);
    for (std::size_t q = 0; q < grid.n_quad(); ++q) {
      probe.v[q] = pp.v_lo(q) + 2.0 * unit(rng);
      probe.u[q] = w.spec.a + (w.spec.b - w.spec.a) * unit(rng);
    }
    worst = std::min(worst, h_star - integral_hamiltonian(w.spec, pp, y, psi, probe,
                                                          HamiltonianMode::SigmaEps));
  }
  return worst;
}

bool attempt_inner(Workspace& w, double tau, double m, double sigma, double eps,
                   const CellField& v_c, const CellField& u_c) {
  PenaltyParams pp = stage_params(w, tau, m, sigma, eps, v_c, u_c);
  InnerSolveResult res;
  char stage[128];
  std::snprintf(stage, sizeof stage, "tau=%g m=%g sigma=%g eps=%g: ", tau, m, sigma, eps);
  try {
    res = solve_inner(w.spec, pp, w.cur, w.y, w.icfg, w.ncfg);
  } catch (const std::exception& e) {
    w.R->telemetry.last_inner_failure = stage + std::string(e.what());
    return false;
  }
  if (!res.converged) {
    w.R->telemetry.last_inner_failure = stage + res.stall_reason;
    StageRecord r;
    r.kind = "inner_fail";
    r.tau = tau;
    r.m = m;
    r.sigma = sigma;
    r.eps = eps;
    r.objective = res.objective;
    r.hamiltonian_gap = res.hamiltonian_gap_min;
    r.inner_converged = false;
    r.inner_sweeps = res.sweeps;
    r.pg_steps = res.pg_steps;
    r.insertions = w.total_insertions;
    fill_common_diagnostics(w, r, res.y, res.psi, res.pair);
    w.R->telemetry.records.push_back(std::move(r));
    ++w.record_counter;
    return false;
  }

  w.cur = res.pair;
  w.y = res.y;

  StageRecord r;
  r.kind = "inner";
  r.tau = tau;
  r.m = m;
  r.sigma = sigma;
  r.eps = eps;
  r.objective = res.objective;
  r.hamiltonian_gap = res.hamiltonian_gap_min;
  r.inner_converged = res.converged;
  r.inner_sweeps = res.sweeps;
  r.pg_steps = res.pg_steps;
  r.insertions = w.total_insertions;
  fill_common_diagnostics(w, r, res.y, res.psi, res.pair);
  w.R->telemetry.records.push_back(std::move(r));
  ++w.record_counter;
  return true;
}

// Synchronized per-(tau, m) summary: re-solve the state at the current
// controls, take the raw adjoint there, re-apply the pointwise updates from
// that exact adjoint, and record the resulting tuple. The update identities
// (penalty bound, Hamiltonian maximality) hold to machine precision for it.
void make_stage_record(Workspace& w, double tau, double m, double sigma_last,
                       const CellField& v_c, const CellField& u_c) {
  const Grid& grid = w.grid;
  const double eps_min = w.sched.eps.back();
  PenaltyParams pp = stage_params(w, tau, m, sigma_last, eps_min, v_c, u_c);

  CellField rhs(grid);
  rhs.q = w.cur.v.q + w.cur.u.q;
  Field y_star = solve_state(grid, rhs, eps_min, w.spec.p, w.y, w.ncfg);
  Field psi_raw = solve_adjoint(y_star, eps_min, w.spec.p,
                                adjoint_source(w.spec, pp, y_star, w.cur.v));
  ControlPair star;
  star.v = update_v_pointwise(w.spec, pp, psi_raw, y_star);
  star.u = update_u_pointwise(w.spec, pp, psi_raw, w.icfg);

  StageRecord r;
  r.kind = "stage";
  r.tau = tau;
  r.m = m;
  r.sigma = sigma_last;
  r.eps = eps_min;
  r.objective = eval_J_tau_m(w.spec, pp, y_star, star);
  {
    CellField du(grid);
    du.q = star.u.q - w.u_prev_stage.q;
    r.control_move_l2 = norm_l2(grid, du);
  }
  r.hamiltonian_gap = min_probe_gap(w, pp, y_star, psi_raw, star, w.record_counter);
  r.inner_converged = true;
  r.insertions = w.total_insertions;
  fill_common_diagnostics(w, r, y_star, psi_raw, star);
  w.R->telemetry.records.push_back(std::move(r));
  ++w.record_counter;

  w.cur = star;
  w.y = y_star;
  w.u_prev_stage = star.u;
  w.last_stage_pair = normalize_multiplier(psi_raw);
  w.last_pp = pp;
}

enum class SeqOutcome { Ok, Propagate };

// Walks `seq` through `attempt`; a failed first element propagates to the
// caller (its own step was too large), later failures bisect the step with a
// budget of 3 insertions before giving up on the whole run.
template <typename F>
SeqOutcome run_sequence(Workspace& w, const std::vector<double>& seq, F&& attempt) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (w.aborted) return SeqOutcome::Propagate;
    if (attempt(seq[i])) continue;
    if (i == 0) return SeqOutcome::Propagate;

    double prev = seq[i - 1];  // last value that succeeded
    double hi = seq[i];        // nearest value that failed
    int budget = 3;
    for (;;) {
      if (w.aborted) return SeqOutcome::Propagate;
      if (budget == 0) {
        w.aborted = true;
        w.R->telemetry.aborted = true;
        w.R->telemetry.abort_reason = "schedule step failed after 3 bisection insertions";
        return SeqOutcome::Propagate;
      }
      --budget;
      ++w.total_insertions;
      w.R->telemetry.total_insertions = w.total_insertions;
      const double mid = bisect_parameter(prev, hi);
      if (attempt(mid)) {
        prev = mid;
        if (attempt(seq[i])) break;
        hi = seq[i];
      } else {
        hi = mid;
      }
    }
  }
  return SeqOutcome::Ok;
}

}  // namespace

HomotopyResult run_homotopy(const ProblemSpec& spec, const Grid& grid, const Field& ybar,
                            const CellField& ubar, const Schedule& sched,
                            const InnerSolveConfig& icfg, const NewtonConfig& ncfg) {
  spec.validate();
  sched.validate();

  HomotopyResult R;
  R.telemetry.schedule = sched;

  Workspace w{spec, grid, ybar, ubar, sched, icfg, ncfg};
  w.R = &R;
  w.y = ybar;
  CellField ybar_q = values_at_quadrature(ybar);
  w.f_at_ybar = CellField(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) w.f_at_ybar[q] = spec.f(ybar_q[q]);
  w.cur.v = w.f_at_ybar;  // center of the admissible tube
  w.cur.u = ubar;
  w.u_prev_stage = ubar;
  w.last_stage_pair = normalize_multiplier(Field(grid));  // placeholder until a stage lands

  auto m_attempt = [&](double tau) {
    return [&, tau](double m) -> bool {
      if (w.aborted) return false;
      // Proximal centers: the outer iterate entering this (tau, m) block.
      const CellField v_c = w.cur.v;
      const CellField u_c = w.cur.u;
      auto sigma_attempt = [&](double sigma) -> bool {
        if (w.aborted) return false;
        auto eps_attempt = [&](double eps) -> bool {
          return attempt_inner(w, tau, m, sigma, eps, v_c, u_c);
        };
        return run_sequence(w, sched.eps, eps_attempt) == SeqOutcome::Ok;
      };
      if (run_sequence(w, sched.sigma, sigma_attempt) != SeqOutcome::Ok) return false;
      make_stage_record(w, tau, m, sched.sigma.back(), v_c, u_c);
      return true;
    };
  };

  auto tau_attempt = [&](double tau) -> bool {
    if (w.aborted) return false;
    return run_sequence(w, sched.m, m_attempt(tau)) == SeqOutcome::Ok;
  };

  const SeqOutcome out = run_sequence(w, sched.tau, tau_attempt);
  if (out != SeqOutcome::Ok || w.aborted) {
    if (!R.telemetry.aborted) {
      R.telemetry.aborted = true;
      R.telemetry.abort_reason = "first schedule stage failed";
    }
    R.y = w.y;
    R.u = w.cur.u;
    R.u_stage = w.cur.u;
    R.v = w.cur.v;
    R.pair = w.last_stage_pair;
    R.success = false;
    return R;
  }

  // Limit extraction: realize the vanishing-smoothing control from the final
  // multiplier pair, re-solving the state and adjoint until the extracted
  // control stops moving (saturated cells pin down immediately; only the
  // handful of near-tie cells can flip).
  const double eps_min = sched.eps.back();
  MultiplierPair pair = w.last_stage_pair;
  Field y = w.y;
  CellField u_prev = w.cur.u;
  for (int k = 0; k < 3; ++k) {
    CellField u_ext = maximize_limit_hamiltonian(spec, pair.psi, pair.mu, icfg.golden_iters);
    if (k > 0 && (u_ext.q - u_prev.q).cwiseAbs().maxCoeff() == 0.0) break;
    u_prev = u_ext;
    y = solve_semilinear(grid, spec.f, u_ext, eps_min, spec.p, y, ncfg);
    Field psi_raw =
        solve_adjoint(y, eps_min, spec.p, adjoint_source(spec, w.last_pp, y, w.cur.v));
    pair = normalize_multiplier(psi_raw);
  }
  CellField u_final = maximize_limit_hamiltonian(spec, pair.psi, pair.mu, icfg.golden_iters);

  {
    CellField du(grid);
    du.q = u_final.q - w.cur.u.q;
    R.telemetry.extraction_distance_l2 = norm_l2(grid, du);
  }
  auto grads = gradient_at_quadrature(y);
  pair.weighted_energy =
      weighted_energy(y, pair.psi, eps_min, spec.p, default_degenerate_theta(grads));

  R.y = y;
  R.u = u_final;
  R.u_stage = w.cur.u;
  R.v = w.cur.v;
  R.pair = pair;
  R.success = true;
  return R;
}

BootstrapResult bootstrap_reference(const ProblemSpec& spec, const Grid& grid, double eps,
                                    const NewtonConfig& ncfg, int max_iters) {
  BootstrapResult best;
  best.objective = std::numeric_limits<double>::infinity();

  // State seeds: zero and signed interior bumps; control seeds: constants.
  std::vector<Field> state_seeds;
  state_seeds.emplace_back(grid);
  for (double amp : {1.0, -1.0}) {
    state_seeds.push_back(nodal_interpolate(grid, [&](Vec2 x) {
      constexpr double pi = std::numbers::pi;
      const double sx = std::sin(pi * (x.x - spec.domain.x0) / (spec.domain.x1 - spec.domain.x0));
      if (spec.domain.dim == 1) return amp * sx;
      const double sy = std::sin(pi * (x.y - spec.domain.y0) / (spec.domain.y1 - spec.domain.y0));
      return amp * sx * sy;
    }));
  }

  for (double u0 : {spec.a, 0.5 * (spec.a + spec.b), spec.b}) {
    for (const Field& seed : state_seeds) {
      CellField u(grid, u0);
      SolveReport rep;
      Field y = solve_semilinear(grid, spec.f, u, eps, spec.p, seed, ncfg, &rep);
      if (!rep.converged) continue;

      double J = eval_J(spec, y, u);
      int iters = 0;
      for (; iters < max_iters; ++iters) {
        Field psi = solve_limit_adjoint(spec, y, eps, 1.0);
        CellField pv = values_at_quadrature(psi);
        CellField grad(grid);
        for (std::size_t q = 0; q < grid.n_quad(); ++q)
          grad[q] = -pv[q] + control_slope(spec.g, grid.quad_points[q], u[q], spec.a, spec.b);

        double t = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
          CellField cand(grid);
          for (std::size_t q = 0; q < grid.n_quad(); ++q)
            cand[q] = std::min(spec.b, std::max(spec.a, u[q] - t * grad[q]));
          CellField dv(grid);
          dv.q = cand.q - u.q;
          const double move = norm_l2(grid, dv);
          if (move == 0.0) break;
          SolveReport rc;
          Field y_c = solve_semilinear(grid, spec.f, cand, eps, spec.p, y, ncfg, &rc);
          if (rc.converged) {
            const double J_c = eval_J(spec, y_c, cand);
            if (J_c <= J - 1e-4 * move * move / t) {
              u = cand;
              y = y_c;
              J = J_c;
              accepted = true;
              break;
            }
          }
          t *= 0.5;
        }
        if (!accepted) break;
      }
      if (J < best.objective) {
        best.objective = J;
        best.ybar = y;
        best.ubar = u;
        best.pg_iterations = iters;
      }
    }
  }
  if (!best.ybar.grid) throw std::runtime_error("bootstrap: no state seed converged");
  return best;
}

}  // namespace ploc
