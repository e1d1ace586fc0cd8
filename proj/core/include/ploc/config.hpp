#pragma once

// Flat key-value run configuration with dotted section names:
//
//   instance = monotone_decoupled   # catalog name, or omit and use problem.*
//   mesh.n = 256
//   problem.p = 1.5                 # inline problem definition
//   problem.a = 0.5
//   problem.b = 2.0
//   problem.f = affine:0,-1         # zero | affine:c0,c1 | poly3:c0,..,c3 |
//                                   # arctan:lambda,kappa | offset_arctan:c0,l,k
//   problem.f0 = track:1,0.3        # zero | track:w,yd
//   problem.g = linear:1            # linear:slope | quadratic:a,b
//   schedule.eps = 1e-1,1e-2,1e-3   # comma-separated, monotone
//   ...
//   output.dir = out
//   seed = 0
//
// '#' starts a comment; parsing is strict: unknown or duplicate keys are
// errors carrying the line number. Nonlinearities are restricted to the
// builtin forms above so the structural checks stay decidable.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "ploc/homotopy.hpp"
#include "ploc/problems.hpp"

namespace ploc {

struct ConfigError : std::runtime_error {
  int line = 0;  // 0 when not tied to a specific line

  ConfigError(const std::string& msg, int line_no = 0)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
        line(line_no) {}
};

struct RunConfig {
  std::string instance;  // catalog name; empty means inline problem.* keys
  ProblemSpec problem;   // resolved either way
  int n = 256;
  double eps_target = 1e-6;  // terminal regularization for plain state solves
  Schedule schedule;
  InnerSolveConfig inner;
  NewtonConfig newton;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

// Builtin expression parsing (kind or kind:comma-separated-params). Throws
// ConfigError on unknown kinds or wrong arity.
ScalarFunc parse_scalar_func(const std::string& text);
RunningCost parse_running_cost(const std::string& text);
ControlCost parse_control_cost(const std::string& text);

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Serialization; load_config(write_config(c)) reproduces c for any config
// whose nonlinearities are builtin forms (catalog instances serialize by
// name, so profile-based entries round-trip too).
std::string config_to_text(const RunConfig& c);
void write_config(const std::string& path, const RunConfig& c);

}  // namespace ploc
