#pragma once

// Builtin instance catalog. Each entry carries the full problem description,
// a default control (the one solve-state uses), suggested discretization
// parameters, and a note on what behavior the instance is built to exhibit.

#include <functional>
#include <string>
#include <vector>

#include "ploc/problem.hpp"

namespace ploc {

struct LibraryInstance {
  std::string name;
  ProblemSpec spec;
  std::function<double(Vec2)> default_control;  // pointwise, inside [a, b]
  int default_n = 256;
  double default_eps = 1e-6;
  std::string structure;  // which structural assumptions hold and why
  std::string expected;   // documented expected behavior at desk scale
};

// The five catalog instances, in a fixed order:
//   closed_form_1d, monotone_decoupled, multisolution, bangbang_sec6,
//   radial_degenerate.
const std::vector<LibraryInstance>& instance_catalog();

// Throws std::out_of_range listing the valid names.
const LibraryInstance& find_instance(const std::string& name);

// Exact 1D profile solved by  -(|y'|^{p-2} y')' = rhs  on (0,1), y(0)=y(1)=0,
// for the piecewise forcing +c / 0 / +c on [0, 0.4] / [0.4, 0.6] / [0.6, 1]
// at p = 3/2: the gradient vanishes identically on the middle band.
double radial_degenerate_profile(double x, double c);

// The piecewise forcing above, used as the instance default control.
double radial_degenerate_forcing(double x, double c);

// Nodal interpolant of the exact p = 3/2 state for constant forcing c (1D),
// or a sine bump of the matching amplitude c^2/24 (2D). Used as a multistart
// seed: a reaction bounded by |f| <= C cannot push the state past the
// constant-forcing-C profile, so +-profile seeds bracket the branches.
Field constant_forcing_profile(const Grid& grid, double c);

// Smooth tracking instance used by the optimizer cross-check: f == 0,
// f0 = w (y - beta x(1-x))^2 (1D) and the 2D tensor analogue, quadratic
// control cost 0.5 (u - 1)^2, box [0, 2]. Not part of the catalog.
ProblemSpec make_quadratic_tracking(double w = 1.0, double beta = 0.05, int dim = 1);

}  // namespace ploc
