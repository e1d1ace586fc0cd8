#pragma once

// Penalized objectives and Hamiltonians for the relaxed control pair (v, u):
//   J(y, u)            = int f0(x, y) + g(x, u)
//   J_tau_m            = J + int m|v - f(y)|^2 + tau|u - ubar|^2 + tau|v - f(ybar)|^2
//   J_sigma_eps        = J_tau_m + int sigma|v - v_c|^2 + sigma|u - u_c|^2
// with v constrained to the tube [f(ybar) - 1, f(ybar) + 1] pointwise and the
// state resolved from -div((eps^2+|grad y|^2)^{(p-2)/2} grad y) = v + u.

#include "ploc/adjoint.hpp"
#include "ploc/problem.hpp"
#include "ploc/state_solver.hpp"

namespace ploc {

struct ControlPair {
  CellField v;
  CellField u;
};

// Penalty weights plus the reference data they are anchored to. f_ybar and
// ubar are the reference state's reaction values and the reference control
// sampled at quadrature points; (v_center, u_center) are the proximal centers
// (previous outer iterate under the homotopy).
struct PenaltyParams {
  double tau = 0.1;    // in (0, 1)
  double m = 1.0;      // >= 1
  double sigma = 0.0;  // >= 0
  double eps = 1e-2;   // in (0, 1]

  Field ybar;
  CellField f_ybar;
  CellField ubar;
  CellField v_center;
  CellField u_center;

  void validate(const ProblemSpec& spec) const;  // throws std::invalid_argument
  double v_lo(std::size_t q) const { return f_ybar[q] - 1.0; }
  double v_hi(std::size_t q) const { return f_ybar[q] + 1.0; }
};

PenaltyParams make_penalty_params(const ProblemSpec& spec, const Grid& grid, const Field& ybar,
                                  const CellField& ubar, double tau, double m, double sigma,
                                  double eps);

double eval_J(const ProblemSpec& spec, const Field& y, const CellField& u);
double eval_J_tau_m(const ProblemSpec& spec, const PenaltyParams& pp, const Field& y,
                    const ControlPair& pair);
double eval_J_sigma_eps(const ProblemSpec& spec, const PenaltyParams& pp, const Field& y,
                        const ControlPair& pair);

enum class HamiltonianMode { SigmaEps, TauM, Limit };

// Per-point reference data for the Hamiltonian at one quadrature point.
struct PointRefs {
  Vec2 x;
  double ubar = 0.0;
  double f_ybar = 0.0;
  double u_center = 0.0;
  double v_center = 0.0;
};

PointRefs point_refs(const Grid& grid, const PenaltyParams& pp, std::size_t q);

// SigmaEps:  psi (v+u) - g - m|v-f(y)|^2 - tau|u-ubar|^2 - tau|v-f_ybar|^2
//            - sigma|u-u_c|^2 - sigma|v-v_c|^2
// TauM:      drops the sigma terms
// Limit:     psi u - mu g(x, u)
double eval_hamiltonian(const ProblemSpec& spec, const PenaltyParams& pp, const PointRefs& at,
                        double y, double psi, double v, double u, HamiltonianMode mode,
                        double mu = 1.0);

// Quadrature integral of the Hamiltonian over the domain for field data.
double integral_hamiltonian(const ProblemSpec& spec, const PenaltyParams& pp, const Field& y,
                            const Field& psi, const ControlPair& pair, HamiltonianMode mode,
                            double mu = 1.0);

struct AdjointGradient {
  CellField grad_v;
  CellField grad_u;
  Field y;    // state resolved at (v, u)
  Field psi;  // adjoint used for the gradient
  SolveReport state_report;
};

// Reduced-gradient of eval_J_sigma_eps through one state + one adjoint solve:
//   source  = -f0_y(x, y) - 2 m (f(y) - v) f'(y)
//   grad_v  = -psi + 2m(v - f(y)) + 2tau(v - f(ybar)) + 2sigma(v - v_c)
//   grad_u  = -psi + g_u(x, u) + 2tau(u - ubar) + 2sigma(u - u_c)
AdjointGradient gradient_via_adjoint(const ProblemSpec& spec, const PenaltyParams& pp,
                                     const ControlPair& pair, const Field& y_warm,
                                     const NewtonConfig& cfg);

// Adjoint source above, exposed for the homotopy's stage records.
CellField adjoint_source(const ProblemSpec& spec, const PenaltyParams& pp, const Field& y,
                         const CellField& v);

}  // namespace ploc
