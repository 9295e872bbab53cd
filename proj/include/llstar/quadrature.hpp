#pragma once

#include <array>
#include <vector>

namespace llstar {

/// Rule on the reference triangle (0,0), (1,0), (0,1).  Points are
/// barycentric triples (l0, l1, l2) with (x, y) = (l1, l2); weights sum
/// to the reference area 1/2.
struct QuadratureRule {
  int degree = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

inline constexpr int max_quadrature_degree = 12;

/// Gauss rule exact for total degree <= `degree` (1 <= degree <= 12),
/// built as a collapsed product of Gauss-Legendre and Gauss-Jacobi(1,0)
/// rules.  All weights are positive; degree 1 is the centroid rule.
const QuadratureRule &quadrature_rule(int degree);

/// Same construction without the degree cap; used for error integrals.
QuadratureRule triangle_rule_unbounded(int degree);

/// Gauss-Legendre rule on [0, 1] with `n` points (weights sum to 1).
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};
LineRule gauss_legendre(int n);

} // namespace llstar
