#pragma once

// First-order optimality checks for a final candidate (y, u, psi, mu):
// multiplier nontriviality, the linearized adjoint equation away from the
// degenerate set, flatness of the adjoint gradient on the degenerate set,
// pointwise Hamiltonian maximality, the one-sided derivative of the penalized
// cost along convex control variations, and the bang-bang structure test for
// linear control cost. All checks are pure and deterministic.

#include <string>
#include <vector>

#include "ploc/objective.hpp"

namespace ploc {

struct CheckReport {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparison;   // "value > threshold" or "value <= threshold"
  std::string diagnostics;  // newline-separated key = value lines
};

struct VerificationReport {
  std::vector<CheckReport> checks;

  bool all_pass() const;
  std::string to_text() const;
};

void write_report(const std::string& path, const VerificationReport& report);

// mu + ||psi||_H10 must be strictly positive (threshold 1e-8). Cross-checks
// the normalization ||psi||_L2 + mu = 1 and flags mu < 1e-6 as a possibly
// abnormal multiplier (the check still passes; abnormality is not an error).
CheckReport check_nontriviality(const MultiplierPair& pair);

// Dual-norm residual of  K(y; eps_check) psi = f'(y) psi - mu f0_y(x, y)
// restricted to quadrature points with |grad y| > theta, normalized by
// ||psi||_H10 + mu. The dual norm is taken through the Poisson stiffness
// Riesz map. The default tolerance reflects the truncation of the penalty
// sequence (final tau), not linear-solver precision: a fresh adjoint solve
// scores near 1e-12, homotopy output near the final tau.
CheckReport check_adjoint_residual(const ProblemSpec& spec, const Field& y, const Field& psi,
                                   double mu, double theta, double eps_check,
                                   double tol = 1e-2);

// Relative adjoint-gradient mass on the degenerate set:
//   int_{|grad y| <= theta} |grad psi|^2 / int |grad psi|^2   (0/0 -> 0),
// threshold 1e-4.
CheckReport check_degenerate_set(const Field& y, const Field& psi, double theta,
                                 double tol = 1e-4);

// Pointwise maximality of psi u - mu g(x, u) over [a, b] against a u-grid of
// n_probes points; worst gap relative to 1 + |pointwise max|, threshold 1e-6.
CheckReport check_hamiltonian_max(const ProblemSpec& spec, const CellField& u, const Field& psi,
                                  double mu, int n_probes = 100);

// One-sided derivative of the penalized cost along the convex variation
// (1-delta) pair + delta probe: finite-difference quotients at each delta,
// Richardson-extrapolated to 0+, must be >= -1e-5 and agree with the
// adjoint-assembled directional derivative to 1e-3 relative (absolute floor
// 1e-6 covering the probe == pair case, where both sit at solver noise).
CheckReport check_spike_derivative(const ProblemSpec& spec, const PenaltyParams& pp,
                                   const ControlPair& pair, const Field& y,
                                   const ControlPair& probe, const NewtonConfig& ncfg,
                                   const std::vector<double>& deltas = {1e-2, 1e-3, 1e-4});

// Bang-bang structure for linear control cost: fraction of quadrature measure
// with u in {a, b} (within 1e-9) must be >= 0.99, the flat set
// {|psi - mu| <= delta_flat}, delta_flat = 1e-3 (|mu| + ||psi||_Linf), and the
// degenerate set {|grad y| <= theta} must each stay <= 0.01 of the domain.
CheckReport check_bangbang(const ProblemSpec& spec, const CellField& u, const Field& psi,
                           double mu, const Field& y);

}  // namespace ploc
