#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ploc/config.hpp"
#include "ploc/verifier.hpp"

namespace ploc {

namespace {

int verbosity() {
  const char* env = std::getenv("PLOC_VERBOSITY");
  if (!env) return 1;
  const int v = std::atoi(env);
  return v < 0 ? 0 : (v > 2 ? 2 : v);
}

void say(int level, const char* fmt, ...) {
  if (verbosity() < level) return;
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stdout, fmt, args);
  va_end(args);
  std::fputc('\n', stdout);
}

struct CommonFlags {
  std::string instance;
  std::string config_path;
  std::optional<int> n;
  std::optional<double> eps;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--instance", f.instance, "catalog instance name");
  cmd->add_option("--config", f.config_path, "configuration file");
  cmd->add_option("--n", f.n, "cells per axis");
  cmd->add_option("--eps", f.eps, "terminal regularization");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--seed", f.seed, "probe seed");
}

// Merge file config (if any), instance defaults, and flag overrides.
RunConfig resolve(const CommonFlags& f, const char* fallback_instance = nullptr) {
  RunConfig cfg;
  if (!f.config_path.empty()) {
    cfg = load_config(f.config_path);
    if (!f.instance.empty() && cfg.instance != f.instance)
      throw ConfigError("--instance conflicts with the instance named in --config");
  } else {
    std::string name = f.instance;
    if (name.empty() && fallback_instance) name = fallback_instance;
    if (name.empty())
      throw ConfigError("either --instance or --config is required for this command");
    try {
      const LibraryInstance& it = find_instance(name);
      cfg.instance = it.name;
      cfg.problem = it.spec;
      cfg.n = it.default_n;
      cfg.eps_target = it.default_eps;
    } catch (const std::out_of_range& e) {
      throw ConfigError(e.what());
    }
  }
  if (f.n) cfg.n = *f.n;
  if (f.eps) cfg.eps_target = *f.eps;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (f.seed) cfg.seed = *f.seed;
  if (cfg.n < 2) throw ConfigError("--n must be >= 2");
  if (!(cfg.eps_target > 0.0 && cfg.eps_target <= 1.0)) throw ConfigError("--eps must lie in (0, 1]");
  return cfg;
}

CellField default_control_field(const RunConfig& cfg, const Grid& grid) {
  if (!cfg.instance.empty()) {
    const LibraryInstance& it = find_instance(cfg.instance);
    return sample_at_quadrature(grid, it.default_control);
  }
  return CellField(grid, 0.5 * (cfg.problem.a + cfg.problem.b));
}

std::filesystem::path ensure_out(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Warm eps continuation for cold semilinear solves at strongly degenerate
// targets.
Field continued_semilinear(const ProblemSpec& spec, const Grid& grid, const CellField& u,
                           double eps_target, const NewtonConfig& ncfg, SolveReport* rep) {
  std::vector<double> path;
  for (double e = 1e-1; e > eps_target * 1.0001; e *= 1e-1) path.push_back(e);
  path.push_back(eps_target);
  Field y(grid);
  for (double e : path) y = solve_semilinear(grid, spec.f, u, e, spec.p, y, ncfg, rep);
  return y;
}

InnerSolveConfig inner_config(const RunConfig& cfg) {
  InnerSolveConfig icfg = cfg.inner;
  if (cfg.seed != 0) icfg.probe_seed ^= cfg.seed;
  return icfg;
}

int run_solve_state(const CommonFlags& flags) {
  RunConfig cfg = resolve(flags);
  const Grid grid = build_grid(cfg.problem.domain, cfg.n);
  const CellField u = default_control_field(cfg, grid);
  SolveReport rep;
  Field y = continued_semilinear(cfg.problem, grid, u, cfg.eps_target, cfg.newton, &rep);
  const auto dir = ensure_out(cfg);
  write_field_csv((dir / "y.csv").string(), y);
  write_field_csv((dir / "u.csv").string(), u);
  say(1, "solve-state: n=%d eps=%g converged=%d residual=%.3e max|y|=%.6f", cfg.n, cfg.eps_target,
      int(rep.converged), rep.residual, rep.linf);
  if (!rep.converged) {
    std::fprintf(stderr, "state solve did not converge (residual %.3e)\n", rep.residual);
    return 2;
  }
  return 0;
}

struct PipelineOutput {
  RunConfig cfg;
  Grid grid;
  BootstrapResult boot;
  HomotopyResult result;
};

PipelineOutput run_pipeline(const CommonFlags& flags, const char* fallback_instance) {
  PipelineOutput out{resolve(flags, fallback_instance), Grid{}, {}, {}};
  out.grid = build_grid(out.cfg.problem.domain, out.cfg.n);
  say(1, "bootstrap: projected-gradient multistart at eps=%g", out.cfg.schedule.eps.front());
  out.boot = bootstrap_reference(out.cfg.problem, out.grid, out.cfg.schedule.eps.front(),
                                 out.cfg.newton);
  say(1, "bootstrap: objective=%.8f pg_iterations=%d", out.boot.objective, out.boot.pg_iterations);
  out.result = run_homotopy(out.cfg.problem, out.grid, out.boot.ybar, out.boot.ubar,
                            out.cfg.schedule, inner_config(out.cfg), out.cfg.newton);
  out.result.telemetry.bootstrap_heuristic = true;
  for (const StageRecord& r : out.result.telemetry.records)
    say(2, "  [%s] tau=%g m=%g sigma=%g eps=%g J=%.8f penalty=%.3e mu=%.6f", r.kind.c_str(), r.tau,
        r.m, r.sigma, r.eps, r.objective, r.penalty_l2, r.mu);
  say(1, "homotopy: %s, %zu records, %d insertions, mu=%.6f",
      out.result.success ? "completed" : "aborted", out.result.telemetry.records.size(),
      out.result.telemetry.total_insertions, out.result.pair.mu);
  return out;
}

void write_pipeline_outputs(const PipelineOutput& out) {
  const auto dir = ensure_out(out.cfg);
  write_field_csv((dir / "y.csv").string(), out.result.y);
  write_field_csv((dir / "u.csv").string(), out.result.u);
  write_field_csv((dir / "v.csv").string(), out.result.v);
  write_field_csv((dir / "psi.csv").string(), out.result.pair.psi);
  write_telemetry((dir / "telemetry.ndrec").string(), out.result.telemetry);
}

int run_optimize(const CommonFlags& flags) {
  PipelineOutput out = run_pipeline(flags, nullptr);
  write_pipeline_outputs(out);
  if (!out.result.success) {
    std::fprintf(stderr, "homotopy aborted: %s (last inner failure: %s)\n",
                 out.result.telemetry.abort_reason.c_str(),
                 out.result.telemetry.last_inner_failure.c_str());
    return 2;
  }
  const double J = eval_J(out.cfg.problem, out.result.y, out.result.u);
  say(1, "optimize: J=%.8f mu=%.6f extraction_distance=%.3e", J, out.result.pair.mu,
      out.result.telemetry.extraction_distance_l2);
  return 0;
}

VerificationReport verify_candidate(const PipelineOutput& out) {
  const ProblemSpec& spec = out.cfg.problem;
  const Grid& grid = out.grid;
  const HomotopyResult& res = out.result;
  const double eps_min = out.cfg.schedule.eps.back();

  VerificationReport report;
  report.checks.push_back(check_nontriviality(res.pair));

  auto grads = gradient_at_quadrature(res.y);
  const double theta = default_degenerate_theta(grads);
  report.checks.push_back(check_adjoint_residual(spec, res.y, res.pair.psi, res.pair.mu, theta,
                                                 eps_min));
  report.checks.push_back(check_degenerate_set(res.y, res.pair.psi, theta));
  report.checks.push_back(check_hamiltonian_max(spec, res.u, res.pair.psi, res.pair.mu));

  // The spike check wants an inner optimum of the final-stage penalized
  // problem; re-solve it from the returned pair (warm, cheap) and probe with
  // a seeded random feasible pair.
  PenaltyParams pp =
      make_penalty_params(spec, grid, out.boot.ybar, out.boot.ubar,
                          out.cfg.schedule.tau.back(), out.cfg.schedule.m.back(), 0.0, eps_min);
  ControlPair warm{res.v, res.u};
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    warm.v[q] = std::min(pp.v_hi(q), std::max(pp.v_lo(q), warm.v[q]));
    warm.u[q] = std::min(spec.b, std::max(spec.a, warm.u[q]));
  }
  InnerSolveResult inner = solve_inner(spec, pp, warm, res.y, inner_config(out.cfg),
                                       out.cfg.newton);
  std::mt19937_64 rng(0x5eedf00dULL ^ out.cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ControlPair probe{CellField(grid), CellField(grid)};
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    probe.v[q] = pp.v_lo(q) + 2.0 * unit(rng);
    probe.u[q] = spec.a + (spec.b - spec.a) * unit(rng);
  }
  report.checks.push_back(
      check_spike_derivative(spec, pp, inner.pair, inner.y, probe, out.cfg.newton));

  if (spec.g.form == ControlCost::Form::Linear)
    report.checks.push_back(check_bangbang(spec, res.u, res.pair.psi, res.pair.mu, res.y));
  return report;
}

int run_verify(const CommonFlags& flags, const char* fallback_instance) {
  PipelineOutput out = run_pipeline(flags, fallback_instance);
  write_pipeline_outputs(out);
  if (!out.result.success) {
    std::fprintf(stderr, "homotopy aborted: %s (last inner failure: %s)\n",
                 out.result.telemetry.abort_reason.c_str(),
                 out.result.telemetry.last_inner_failure.c_str());
    return 2;
  }
  VerificationReport report = verify_candidate(out);
  const auto dir = ensure_out(out.cfg);
  write_report((dir / "report.txt").string(), report);
  if (verbosity() >= 1) std::fputs(report.to_text().c_str(), stdout);
  return report.all_pass() ? 0 : 1;
}

int run_demo_multiplicity(const CommonFlags& flags) {
  RunConfig cfg = resolve(flags, "multisolution");
  const Grid grid = build_grid(cfg.problem.domain, cfg.n);
  const CellField u = default_control_field(cfg, grid);

  // Seed at zero plus scaled copies of the saturated-forcing profile: |f| is
  // capped by its growth constant, so +-profile brackets every branch and the
  // half-amplitude pair aims at unstable middle branches.
  const double c_sat = cfg.problem.f.growth.C + u.q.cwiseAbs().maxCoeff();
  const Field sat = constant_forcing_profile(grid, c_sat);
  std::vector<Field> seeds;
  seeds.emplace_back(grid);
  for (double scale : {1.0, -1.0, 0.5, -0.5}) {
    Field s = sat;
    s.nodal *= scale;
    seeds.push_back(std::move(s));
  }

  auto branches = multistart_semilinear(grid, cfg.problem.f, u, cfg.eps_target, cfg.problem.p,
                                        seeds, cfg.newton);
  const auto dir = ensure_out(cfg);
  double max_sep = 0.0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    write_field_csv((dir / ("y_branch_" + std::to_string(i) + ".csv")).string(), branches[i].y);
    say(1, "branch %zu: max|y|=%.6f residual=%.3e", i, branches[i].report.linf,
        branches[i].report.residual);
    for (std::size_t j = 0; j < i; ++j)
      max_sep = std::max(max_sep,
                         (branches[i].y.nodal - branches[j].y.nodal).cwiseAbs().maxCoeff());
  }
  say(1, "demo-multiplicity: %zu distinct branches, max separation %.6f", branches.size(),
      max_sep);
  return branches.size() >= 2 ? 0 : 1;
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"optimal control of degenerate quasilinear elliptic equations"};
  app.require_subcommand(1);

  CommonFlags f_state, f_opt, f_verify, f_multi, f_bang;
  auto* c_state = app.add_subcommand("solve-state", "solve the state equation at a fixed control");
  add_common(c_state, f_state);
  auto* c_opt = app.add_subcommand("optimize", "run the penalization homotopy");
  add_common(c_opt, f_opt);
  auto* c_verify = app.add_subcommand("verify", "optimize, then verify first-order optimality");
  add_common(c_verify, f_verify);
  auto* c_multi = app.add_subcommand("demo-multiplicity", "multistart the semilinear state");
  add_common(c_multi, f_multi);
  auto* c_bang = app.add_subcommand("demo-bangbang", "verify the bang-bang structure");
  add_common(c_bang, f_bang);
  app.add_subcommand("list-instances", "print the instance catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  }

  try {
    if (app.got_subcommand("list-instances")) {
      for (const LibraryInstance& it : instance_catalog()) std::printf("%s\n", it.name.c_str());
      return 0;
    }
    if (app.got_subcommand(c_state)) return run_solve_state(f_state);
    if (app.got_subcommand(c_opt)) return run_optimize(f_opt);
    if (app.got_subcommand(c_verify)) return run_verify(f_verify, nullptr);
    if (app.got_subcommand(c_multi)) return run_demo_multiplicity(f_multi);
    if (app.got_subcommand(c_bang)) return run_verify(f_bang, "bangbang_sec6");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 2;
  }
  return 3;
}

}  // namespace

int cli_main(int argc, const char* const* argv) { return dispatch(argc, argv); }

}  // namespace ploc
