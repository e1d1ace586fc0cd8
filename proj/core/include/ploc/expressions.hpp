#pragma once

// Scalar nonlinearities appearing in the control problem:
//   f(y)      reaction term (with derivative and growth certificate),
//   f0(x, y)  running state cost,
//   g(x, u)   control cost (convex in u).
// The C++ API accepts arbitrary callables; user-facing config files are
// restricted to the builtin forms constructed by the factories below.

#include <functional>
#include <optional>
#include <string>

#include "ploc/grid.hpp"

namespace ploc {

// Growth certificate |f(y)| <= C (1 + |y|^{r-1}); r must stay below the
// critical Sobolev exponent of the ambient space (checked at problem level).
struct GrowthSpec {
  double C = 1.0;
  double r = 1.0;

  bool admits(double y, double fy) const;
};

struct ScalarFunc {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
  GrowthSpec growth;
  std::string repr;  // round-trips through config files for builtin forms

  double operator()(double y) const { return value(y); }
};

// Builtin reaction terms.
ScalarFunc scalar_zero();
ScalarFunc scalar_affine(double c0, double c1);                 // c0 + c1*y
ScalarFunc scalar_poly3(double c0, double c1, double c2, double c3);
ScalarFunc scalar_arctan(double lambda, double kappa);          // lambda*atan(kappa*y)
ScalarFunc scalar_affine_plus_arctan(double c0, double lambda, double kappa);

// Running cost f0 and its y-derivative.
struct RunningCost {
  std::function<double(Vec2, double)> value;
  std::function<double(Vec2, double)> deriv_y;
  std::string repr;
};

RunningCost running_zero();
// w * (y - yd)^2 with constant target.
RunningCost running_tracking(double w, double yd);
// w * (y - yd(x))^2 with a spatial target profile (library instances only;
// not expressible in config files).
RunningCost running_tracking_profile(double w, std::function<double(Vec2)> yd);

// Control cost, convex in u. The analytic form tag lets the pointwise
// maximizer use closed-form updates; Generic falls back to golden section.
struct ControlCost {
  enum class Form { Linear, Quadratic, Generic };

  std::function<double(Vec2, double)> value;
  std::function<double(Vec2, double)> deriv_u;  // may be empty -> central diff
  Form form = Form::Generic;
  double lin_slope = 0.0;   // Linear: g = lin_slope * u + offset(x)
  double quad_a = 0.0;      // Quadratic: g = quad_a*u^2 + quad_b*u + offset(x)
  double quad_b = 0.0;
  std::string repr;
};

ControlCost control_linear(double slope);
ControlCost control_quadratic(double a, double b);
// w * (u - ur(x))^2; convex quadratic with a spatially varying center, so the
// closed-form update is still available through deriv_u (Generic form uses
// golden section, which this intentionally exercises).
ControlCost control_tracking_profile(double w, std::function<double(Vec2)> ur);

// Symmetric-difference fallback for g_u when no derivative is supplied.
// Step 1e-6*(b-a); one-sided at the box ends so g is never evaluated
// outside [a, b].
double control_slope(const ControlCost& g, Vec2 x, double u, double a, double b);

}  // namespace ploc
