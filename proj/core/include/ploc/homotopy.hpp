#pragma once

// Outer continuation over the penalization parameters, nested in the proof
// order: for each tau (outermost), for each m, for each sigma, sweep eps
// downward (innermost), warm-starting everything. After each (tau, m) block
// a synchronized stage record is taken: the state is re-solved, the raw
// adjoint is computed from it, the pointwise updates are re-applied from that
// exact adjoint, and the recorded tuple therefore satisfies the pointwise
// update identities to machine precision.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ploc/optimizer.hpp"

namespace ploc {

inline constexpr double kMaxPenaltyM = 1e4;
inline constexpr double kMinEps = 1e-8;

struct Schedule {
  std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};  // decreasing
  std::vector<double> sigma{1e-1, 1e-2, 0.0};                   // decreasing to sigma_min
  std::vector<double> m{1.0, 1e1, 1e2, 1e3, 1e4};               // increasing, <= 1e4
  std::vector<double> tau{1e-1, 1e-2, 1e-3};                    // decreasing

  void validate() const;  // monotonicity, caps, floors
};

// One telemetry line. kind == "inner" after every (tau, m, sigma, eps) inner
// solve; kind == "inner_fail" for attempts that stalled (diagnostics only);
// kind == "stage" for the synchronized per-(tau, m) summary.
struct StageRecord {
  std::string kind;
  double tau = 0.0, m = 0.0, sigma = 0.0, eps = 0.0;
  double objective = 0.0;
  double penalty_l2 = 0.0;            // ||v - f(y)||_L2
  double control_move_l2 = 0.0;       // stage only: ||u - u_prev_stage||_L2
  double mu = 0.0;
  double normalization_residual = 0.0;
  double hamiltonian_gap = 0.0;       // min over probes of int H(result)-H(probe)
  double penalty_bound_residual = 0.0;  // max_q max(0, |m(v-f(y))| - 2|psi_raw| - tau)
  double psi_limit_indicator = 0.0;     // ||2 mu m (v-f(y)) - psi||_L2
  double degenerate_norm_rel = 0.0;
  double degenerate_measure = 0.0;
  double weighted_energy_eps = 0.0;   // int_{|grad y|>theta} (eps^2+|.|^2)^{(p-2)/2}|grad psi|^2
  double weighted_energy_zero = 0.0;  // same with eps = 0 in the weight
  double psi_raw_l2 = 0.0;
  double psi_raw_linf = 0.0;
  double f_drift_linf = 0.0;          // max_q |f(y) - f(ybar)|, the N_tau surrogate
  bool past_n_tau = false;
  bool inner_converged = false;
  int inner_sweeps = 0;
  int pg_steps = 0;
  int insertions = 0;                 // schedule bisections consumed at this point
};

struct HomotopyTelemetry {
  std::vector<StageRecord> records;
  Schedule schedule;
  bool bootstrap_heuristic = false;   // reference pair came from bootstrap_reference
  std::string n_tau_policy = "C0_quadrature";  // surrogate for the N_tau threshold
  bool aborted = false;
  std::string abort_reason;
  std::string last_inner_failure;       // diagnostic for aborted runs
  double extraction_distance_l2 = 0.0;  // ||u_final - u_last_stage||_L2
  int total_insertions = 0;
};

// Line-delimited self-describing records, one JSON object per line.
void write_telemetry(const std::string& path, const HomotopyTelemetry& t);

struct HomotopyResult {
  bool success = false;
  Field y;
  CellField u;        // limit-extracted control (pointwise limit-Hamiltonian maximizer)
  CellField u_stage;  // control at the last synchronized stage record, pre-extraction
  CellField v;        // last stage relaxed control
  MultiplierPair pair;
  HomotopyTelemetry telemetry;
};

HomotopyResult run_homotopy(const ProblemSpec& spec, const Grid& grid, const Field& ybar,
                            const CellField& ubar, const Schedule& sched,
                            const InnerSolveConfig& icfg, const NewtonConfig& ncfg);

struct BootstrapResult {
  Field ybar;
  CellField ubar;
  double objective = 0.0;
  bool heuristic = true;  // always: coarse multistart projected gradient
  int pg_iterations = 0;
};

// Coarse reference pair via projected gradient on the original cost at
// eps_max, multistarted over constant controls {a, mid, b} and signed state
// seeds. Makes no global-optimality claim.
BootstrapResult bootstrap_reference(const ProblemSpec& spec, const Grid& grid, double eps,
                                    const NewtonConfig& ncfg, int max_iters = 200);

// Midpoint used when a schedule step is bisected after an inner failure.
double bisect_parameter(double prev, double next);

}  // namespace ploc
