#include "llstar/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace llstar {

Coefficients::Coefficients(Point b, double sigma_in, double sigma_out,
                           double inflow_value, Rect omega_in)
    : b_(std::move(b)), sigma_in_(sigma_in), sigma_out_(sigma_out),
      inflow_value_(inflow_value), omega_in_(omega_in) {
  if (!(sigma_in >= 0.0) || !(sigma_out >= 0.0))
    throw InvalidArgument("absorption coefficients must be nonnegative");
  if (!std::isfinite(b_.x()) || !std::isfinite(b_.y()) || b_.norm() == 0.0)
    throw InvalidArgument("flow field must be finite and nonzero");
}

Coefficients Coefficients::from_angle(double alpha, double sigma_in,
                                      double sigma_out, double inflow_value) {
  return {Point(std::cos(alpha), std::sin(alpha)), sigma_in, sigma_out,
          inflow_value};
}

Coefficients Coefficients::model(double sigma_in, double sigma_out) {
  return from_angle(model_angle, sigma_in, sigma_out, 1.0);
}

Coefficients Coefficients::with_source(ScalarField source) const {
  Coefficients copy = *this;
  copy.source_ = std::move(source);
  return copy;
}

Coefficients Coefficients::with_inflow(ScalarField inflow) const {
  Coefficients copy = *this;
  copy.inflow_ = std::move(inflow);
  return copy;
}

double sigma_at(const Coefficients &coeffs, const Point &point) {
  return coeffs.omega_in().contains_strictly(point) ? coeffs.sigma_in()
                                                    : coeffs.sigma_out();
}

double apply_operator(OperatorSide side, const Coefficients &coeffs,
                      double value, const Point &gradient, const Point &point) {
  const double advection = coeffs.b().dot(gradient);
  const double reaction = sigma_at(coeffs, point) * value;
  return side == OperatorSide::Primal ? advection + reaction
                                      : -advection + reaction;
}

namespace {

// Parameter interval {s : lo <= x - s b <= hi} along one axis.
void clip_axis(double x, double b, double lo, double hi, double &smin,
               double &smax) {
  if (b == 0.0) {
    if (x < lo || x > hi) {
      smin = std::numeric_limits<double>::infinity();
      smax = -smin;
    }
    return;
  }
  double s0 = (x - hi) / b;
  double s1 = (x - lo) / b;
  if (s0 > s1)
    std::swap(s0, s1);
  smin = std::max(smin, s0);
  smax = std::min(smax, s1);
}

} // namespace

CharacteristicPath trace_characteristic(const Coefficients &coeffs,
                                        const Point &point) {
  const Point &b = coeffs.b();

  double exit = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    if (b[k] > 0.0)
      exit = std::min(exit, point[k] / b[k]);
    else if (b[k] < 0.0)
      exit = std::min(exit, (1.0 - point[k]) / -b[k]);
  }
  exit = std::max(exit, 0.0);

  const Rect &r = coeffs.omega_in();
  double smin = 0.0, smax = exit;
  clip_axis(point.x(), b.x(), r.x0, r.x1, smin, smax);
  clip_axis(point.y(), b.y(), r.y0, r.y1, smin, smax);

  CharacteristicPath path;
  path.length_in = std::max(0.0, smax - smin);
  path.length_out = std::max(0.0, exit - path.length_in);
  path.inflow_point = point - exit * b;
  return path;
}

double exact_solution(const Coefficients &coeffs, const Point &point) {
  if (coeffs.has_source() || !coeffs.has_constant_inflow())
    throw InvalidArgument(
        "exact_solution requires r == 0 and a constant inflow datum");
  const CharacteristicPath path = trace_characteristic(coeffs, point);
  return coeffs.inflow_value() * std::exp(-coeffs.sigma_out() * path.length_out -
                                          coeffs.sigma_in() * path.length_in);
}

} // namespace llstar
