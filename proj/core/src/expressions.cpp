#include "ploc/expressions.hpp"

#include <cmath>
#include <sstream>

namespace ploc {

bool GrowthSpec::admits(double y, double fy) const {
  return std::abs(fy) <= C * (1.0 + std::pow(std::abs(y), r - 1.0)) + 1e-12;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ScalarFunc scalar_zero() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }, {0.0, 1.0}, "zero"};
}

ScalarFunc scalar_affine(double c0, double c1) {
  GrowthSpec gs{std::abs(c0) + std::abs(c1) + 1.0, 2.0};
  return {[=](double y) { return c0 + c1 * y; },
          [=](double) { return c1; },
          gs,
          "affine:" + fmt(c0) + "," + fmt(c1)};
}

ScalarFunc scalar_poly3(double c0, double c1, double c2, double c3) {
  double cmax = std::abs(c0) + std::abs(c1) + std::abs(c2) + std::abs(c3);
  double deg = c3 != 0.0 ? 3.0 : (c2 != 0.0 ? 2.0 : 1.0);
  GrowthSpec gs{cmax + 1.0, deg + 1.0};
  return {[=](double y) { return c0 + y * (c1 + y * (c2 + y * c3)); },
          [=](double y) { return c1 + y * (2.0 * c2 + y * 3.0 * c3); },
          gs,
          "poly3:" + fmt(c0) + "," + fmt(c1) + "," + fmt(c2) + "," + fmt(c3)};
}

ScalarFunc scalar_arctan(double lambda, double kappa) {
  // Bounded, so r = 1 in the growth certificate.
  GrowthSpec gs{std::abs(lambda) * 1.5707963267948966 + 1e-9, 1.0};
  return {[=](double y) { return lambda * std::atan(kappa * y); },
          [=](double y) { return lambda * kappa / (1.0 + kappa * kappa * y * y); },
          gs,
          "arctan:" + fmt(lambda) + "," + fmt(kappa)};
}

ScalarFunc scalar_affine_plus_arctan(double c0, double lambda, double kappa) {
  GrowthSpec gs{std::abs(c0) + std::abs(lambda) * 1.5707963267948966 + 1e-9, 1.0};
  return {[=](double y) { return c0 + lambda * std::atan(kappa * y); },
          [=](double y) { return lambda * kappa / (1.0 + kappa * kappa * y * y); },
          gs,
          "offset_arctan:" + fmt(c0) + "," + fmt(lambda) + "," + fmt(kappa)};
}

RunningCost running_zero() {
  return {[](Vec2, double) { return 0.0; }, [](Vec2, double) { return 0.0; }, "zero"};
}

RunningCost running_tracking(double w, double yd) {
  return {[=](Vec2, double y) { return w * (y - yd) * (y - yd); },
          [=](Vec2, double y) { return 2.0 * w * (y - yd); },
          "track:" + fmt(w) + "," + fmt(yd)};
}

RunningCost running_tracking_profile(double w, std::function<double(Vec2)> yd) {
  return {[=](Vec2 x, double y) { const double d = y - yd(x); return w * d * d; },
          [=](Vec2 x, double y) { return 2.0 * w * (y - yd(x)); },
          "track_profile"};
}

ControlCost control_linear(double slope) {
  ControlCost g;
  g.value = [=](Vec2, double u) { return slope * u; };
  g.deriv_u = [=](Vec2, double) { return slope; };
  g.form = ControlCost::Form::Linear;
  g.lin_slope = slope;
  g.repr = "linear:" + fmt(slope);
  return g;
}

ControlCost control_quadratic(double a, double b) {
  ControlCost g;
  g.value = [=](Vec2, double u) { return a * u * u + b * u; };
  g.deriv_u = [=](Vec2, double u) { return 2.0 * a * u + b; };
  g.form = ControlCost::Form::Quadratic;
  g.quad_a = a;
  g.quad_b = b;
  g.repr = "quadratic:" + fmt(a) + "," + fmt(b);
  return g;
}

ControlCost control_tracking_profile(double w, std::function<double(Vec2)> ur) {
  ControlCost g;
  g.value = [=](Vec2 x, double u) { const double d = u - ur(x); return w * d * d; };
  g.deriv_u = [=](Vec2 x, double u) { return 2.0 * w * (u - ur(x)); };
  g.form = ControlCost::Form::Generic;
  g.repr = "track_profile_u";
  return g;
}

double control_slope(const ControlCost& g, Vec2 x, double u, double a, double b) {
  if (g.deriv_u) return g.deriv_u(x, u);
  const double h = 1e-6 * (b - a);
  double lo = u - h, hi = u + h;
  if (lo < a) { lo = a; hi = std::min(b, a + 2.0 * h); }
  if (hi > b) { hi = b; lo = std::max(a, b - 2.0 * h); }
  if (hi <= lo) return 0.0;
  return (g.value(x, hi) - g.value(x, lo)) / (hi - lo);
}

}  // namespace ploc
