#include "llstar/quadrature.hpp"
#include "llstar/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace llstar {

namespace {

// Gauss-Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1, 1]:
// Golub-Welsch for the initial nodes, then Newton on the orthonormal
// recurrence and Christoffel weights for full double accuracy.
void gauss_jacobi(int n, double alpha, double beta, std::vector<double> &nodes,
                  std::vector<double> &weights) {
  const double ab = alpha + beta;
  auto diag = [&](int k) {
    if (k == 0)
      return (beta - alpha) / (ab + 2.0);
    return (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0));
  };
  auto offdiag = [&](int k) { // k >= 1
    const double s = 2.0 * k + ab;
    return std::sqrt(4.0 * k * (k + alpha) * (k + beta) * (k + ab) /
                     (s * s * (s + 1.0) * (s - 1.0)));
  };
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) *
                     std::tgamma(beta + 1.0) / std::tgamma(ab + 2.0);

  Eigen::VectorXd d(n), e(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k)
    d[k] = diag(k);
  for (int k = 1; k < n; ++k)
    e[k - 1] = offdiag(k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);

  // q_0..q_n at x; returns q_n, its derivative, and sum_{k<n} q_k^2.
  auto evaluate = [&](double x, double &dq, double &sumsq) {
    double q_prev = 0.0, q = 1.0 / std::sqrt(mu0);
    double dq_prev = 0.0, dqk = 0.0;
    sumsq = q * q;
    for (int k = 0; k < n; ++k) {
      const double bk = k > 0 ? offdiag(k) : 0.0;
      const double bnext = offdiag(k + 1);
      const double q_next = ((x - diag(k)) * q - bk * q_prev) / bnext;
      const double dq_next = (q + (x - diag(k)) * dqk - bk * dq_prev) / bnext;
      q_prev = q;
      q = q_next;
      dq_prev = dqk;
      dqk = dq_next;
      if (k + 1 < n)
        sumsq += q * q;
    }
    dq = dqk;
    return q;
  };

  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = eig.eigenvalues()[i];
    double dq = 0.0, sumsq = 0.0;
    for (int it = 0; it < 4; ++it) {
      const double q = evaluate(x, dq, sumsq);
      x -= q / dq;
    }
    evaluate(x, dq, sumsq);
    nodes[i] = x;
    weights[i] = 1.0 / sumsq;
  }
}

QuadratureRule collapsed_rule(int degree) {
  const int n = (degree + 2) / 2;
  std::vector<double> xi, wxi, eta, weta;
  gauss_jacobi(n, 0.0, 0.0, xi, wxi);
  gauss_jacobi(n, 1.0, 0.0, eta, weta);

  QuadratureRule rule;
  rule.degree = degree;
  for (int j = 0; j < n; ++j) {
    const double y = 0.5 * (1.0 + eta[j]);
    const double wy = 0.25 * weta[j];
    for (int i = 0; i < n; ++i) {
      const double s = 0.5 * (1.0 + xi[i]);
      const double x = s * (1.0 - y);
      rule.points.push_back({1.0 - x - y, x, y});
      rule.weights.push_back(0.5 * wxi[i] * wy);
    }
  }
  return rule;
}

} // namespace

const QuadratureRule &quadrature_rule(int degree) {
  static const std::vector<QuadratureRule> rules = [] {
    std::vector<QuadratureRule> all;
    for (int d = 0; d <= max_quadrature_degree; ++d)
      all.push_back(collapsed_rule(std::max(d, 1)));
    return all;
  }();
  if (degree < 1 || degree > max_quadrature_degree)
    throw InvalidArgument("quadrature degree must lie in [1, " +
                          std::to_string(max_quadrature_degree) + "]");
  return rules[degree];
}

QuadratureRule triangle_rule_unbounded(int degree) {
  if (degree < 1)
    throw InvalidArgument("quadrature degree must be positive");
  return collapsed_rule(degree);
}

LineRule gauss_legendre(int n) {
  if (n < 1)
    throw InvalidArgument("line rule needs at least one point");
  LineRule rule;
  gauss_jacobi(n, 0.0, 0.0, rule.points, rule.weights);
  for (int i = 0; i < n; ++i) {
    rule.points[i] = 0.5 * (1.0 + rule.points[i]);
    rule.weights[i] *= 0.5;
  }
  return rule;
}

} // namespace llstar
