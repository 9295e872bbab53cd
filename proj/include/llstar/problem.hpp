#pragma once

#include "llstar/types.hpp"

#include <functional>
#include <numbers>

namespace llstar {

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.25, y0 = 0.25, x1 = 0.75, y1 = 0.75;

  bool contains_strictly(const Point &p) const {
    return p.x() > x0 && p.x() < x1 && p.y() > y0 && p.y() < y1;
  }
};

using ScalarField = std::function<double(const Point &)>;

/// Coefficients of the advection-reaction problem
///
///     b . grad(psi) + sigma psi = r   in (0,1)^2,
///                           psi = g   on the inflow boundary,
///
/// with constant flow b and sigma piecewise constant on an inner rectangle
/// (sigma_in) and its complement (sigma_out).
class Coefficients {
public:
  /// Constant flow field b, source r == 0 and constant inflow datum.
  Coefficients(Point b, double sigma_in, double sigma_out,
               double inflow_value = 1.0, Rect omega_in = {});

  /// Flow b = (cos alpha, sin alpha).
  static Coefficients from_angle(double alpha, double sigma_in,
                                 double sigma_out, double inflow_value = 1.0);

  /// The standard experiment: alpha = 3 pi / 16, g = 1, r = 0.
  static Coefficients model(double sigma_in, double sigma_out = 1e-4);

  static constexpr double model_angle = 3.0 * std::numbers::pi / 16.0;

  /// Copy with a nonconstant source term r.
  Coefficients with_source(ScalarField source) const;
  /// Copy with a nonconstant inflow datum g.
  Coefficients with_inflow(ScalarField inflow) const;

  const Point &b() const { return b_; }
  double sigma_in() const { return sigma_in_; }
  double sigma_out() const { return sigma_out_; }
  const Rect &omega_in() const { return omega_in_; }

  bool has_source() const { return static_cast<bool>(source_); }
  bool has_constant_inflow() const { return !inflow_; }
  double source(const Point &p) const { return source_ ? source_(p) : 0.0; }
  double inflow(const Point &p) const {
    return inflow_ ? inflow_(p) : inflow_value_;
  }
  double inflow_value() const { return inflow_value_; }

private:
  Point b_;
  double sigma_in_;
  double sigma_out_;
  double inflow_value_;
  Rect omega_in_;
  ScalarField source_;
  ScalarField inflow_;
};

enum class OperatorSide { Primal, Adjoint };

/// sigma at a point; points on the inner rectangle's boundary get sigma_out.
double sigma_at(const Coefficients &coeffs, const Point &point);

/// Primal: b.grad + sigma value.  Adjoint: -b.grad + sigma value.
double apply_operator(OperatorSide side, const Coefficients &coeffs,
                      double value, const Point &gradient, const Point &point);

/// Lengths of the backward characteristic from `point` to the domain
/// boundary, split by subregion.
struct CharacteristicPath {
  double length_in = 0.0;
  double length_out = 0.0;
  Point inflow_point;
};

CharacteristicPath trace_characteristic(const Coefficients &coeffs,
                                        const Point &point);

/// Exact solution g exp(-int sigma ds) along the backward characteristic.
/// Only valid for r == 0 and constant g; throws InvalidArgument otherwise.
double exact_solution(const Coefficients &coeffs, const Point &point);

} // namespace llstar
