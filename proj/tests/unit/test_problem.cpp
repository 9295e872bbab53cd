#include "llstar/problem.hpp"

#include <doctest.h>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace llstar;

namespace {

// Distance from x back to the boundary along -b, by bisection on the
// inside test (independent of the closed-form clipping).
double backtrack_length(const Point &x, const Point &b) {
  auto inside = [](const Point &p) {
    return p.x() >= 0.0 && p.x() <= 1.0 && p.y() >= 0.0 && p.y() <= 1.0;
  };
  double lo = 0.0, hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (inside(x - mid * b) ? lo : hi) = mid;
  }
  return lo;
}

// psi at x from integrating d psi / ds = -sigma psi along the characteristic
// starting at the inflow point, with an adaptive Dormand-Prince stepper.
double ode_solution(const Coefficients &c, const Point &x) {
  namespace ode = boost::numeric::odeint;
  const double len = backtrack_length(x, c.b());
  const Point start = x - len * c.b();
  // Break the path where it crosses a line carrying a sigma jump, so each
  // adaptive integration sees a smooth right-hand side.
  std::vector<double> breaks{0.0, len};
  const Rect &r = c.omega_in();
  for (int k = 0; k < 2; ++k)
    for (double line : k == 0 ? std::array{r.x0, r.x1} : std::array{r.y0, r.y1})
      if (c.b()[k] != 0.0) {
        const double s = (line - start[k]) / c.b()[k];
        if (s > 0.0 && s < len)
          breaks.push_back(s);
      }
  std::sort(breaks.begin(), breaks.end());
  std::array<double, 1> psi{c.inflow_value()};
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    if (b - a <= 0.0)
      continue;
    // sigma is constant on the open piece; sample it at the midpoint.
    const double sigma = sigma_at(c, start + 0.5 * (a + b) * c.b());
    auto rhs = [sigma](const std::array<double, 1> &y, std::array<double, 1> &dy, double) {
      dy[0] = -sigma * y[0];
    };
    auto stepper = ode::make_controlled(1e-15, 1e-15,
                                        ode::runge_kutta_dopri5<std::array<double, 1>>());
    ode::integrate_adaptive(stepper, rhs, psi, a, b, std::min(1e-4, b - a));
  }
  return psi[0];
}

} // namespace

TEST_CASE("sigma_at picks the subregion value") {
  const auto c = Coefficients::model(1e4);
  CHECK(sigma_at(c, Point(0.5, 0.5)) == 1e4);
  CHECK(sigma_at(c, Point(0.1, 0.1)) == 1e-4);
  CHECK(sigma_at(c, Point(0.25, 0.5)) == 1e-4); // interface
  const Coefficients flat(Point(1, 0), 3.0, 3.0);
  for (const Point p : {Point(0.5, 0.5), Point(0.9, 0.05), Point(0, 0)})
    CHECK(sigma_at(flat, p) == 3.0);
}

TEST_CASE("coefficients validate their inputs") {
  CHECK_THROWS_AS(Coefficients(Point(1, 0), -1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(Coefficients(Point(0, 0), 1.0, 1.0), InvalidArgument);
  const auto c = Coefficients::from_angle(0.3, 1.0, 2.0);
  CHECK(c.b().norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("apply_operator primal and adjoint") {
  const Coefficients s(Point(1, 0), 2.5, 2.5);
  CHECK(apply_operator(OperatorSide::Primal, s, 4.0, Point(0, 0), Point(0.3, 0.3)) ==
        doctest::Approx(10.0));
  const Coefficients zero(Point(1, 0), 0.0, 0.0);
  // w(x, y) = x: value x, gradient (1, 0).
  CHECK(apply_operator(OperatorSide::Primal, zero, 0.3, Point(1, 0), Point(0.3, 0.2)) == 1.0);
  CHECK(apply_operator(OperatorSide::Adjoint, zero, 0.3, Point(1, 0), Point(0.3, 0.2)) == -1.0);
  const auto m = Coefficients::model(1e4);
  CHECK(apply_operator(OperatorSide::Primal, m, 2.0, Point(0, 0), Point(0.5, 0.5)) == 2e4);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const Point p(0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng)), g(u(rng), u(rng));
    const double v = u(rng);
    const double primal = apply_operator(OperatorSide::Primal, m, v, g, p);
    const double adjoint = apply_operator(OperatorSide::Adjoint, m, v, g, p);
    CHECK(adjoint == doctest::Approx(primal - 2.0 * m.b().dot(g)).epsilon(1e-14));
  }
}

TEST_CASE("exact solution: trivial cases") {
  const auto c = Coefficients::model(1e4);
  for (double t : {0.0, 0.1, 0.5, 0.99}) {
    CHECK(exact_solution(c, Point(0.0, t)) == 1.0);
    CHECK(exact_solution(c, Point(t, 0.0)) == 1.0);
  }
  const auto none = Coefficients::model(0.0, 0.0);
  CHECK(exact_solution(none, Point(0.9, 0.9)) == 1.0);
  CHECK(exact_solution(none, Point(0.4, 0.6)) == 1.0);
}

TEST_CASE("exact solution matches an ODE integration along the characteristic") {
  const auto c = Coefficients::model(10.0);
  const Point x(0.9, 0.9);
  CHECK(std::abs(exact_solution(c, x) - ode_solution(c, x)) <= 1e-12);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    const Point p(u(rng), u(rng));
    CHECK(std::abs(exact_solution(c, p) - ode_solution(c, p)) <= 1e-10);
  }
}

TEST_CASE("exact solution along outer-region rays decays with sigma_out") {
  const auto c = Coefficients::model(1e4, 0.3);
  // Rays below the inner square's shadow stay in the outer region.
  const Point x(0.9, 0.1);
  for (double t : {0.05, 0.1, 0.15}) {
    const Point y = x - t * c.b();
    CHECK(exact_solution(c, x) / exact_solution(c, y) ==
          doctest::Approx(std::exp(-0.3 * t)).epsilon(1e-13));
  }
}

TEST_CASE("exact solution lies in (0, g]") {
  const auto c = Coefficients::model(10.0);
  const Coefficients g2(Point(std::cos(0.6), std::sin(0.6)), 10.0, 0.5, 2.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const Point p(u(rng), u(rng));
    const double v1 = exact_solution(c, p), v2 = exact_solution(g2, p);
    CHECK(v1 > 0.0);
    CHECK(v1 <= 1.0);
    CHECK(v2 > 0.0);
    CHECK(v2 <= 2.0);
  }
}

TEST_CASE("exact solution rejects nonconstant data") {
  const auto c = Coefficients::model(10.0);
  CHECK_THROWS_AS(exact_solution(c.with_source([](const Point &) { return 1.0; }),
                                 Point(0.5, 0.5)),
                  InvalidArgument);
  CHECK_THROWS_AS(exact_solution(c.with_inflow([](const Point &p) { return p.x(); }),
                                 Point(0.5, 0.5)),
                  InvalidArgument);
}

TEST_CASE("characteristic lengths add up to the backtrack distance") {
  const auto c = Coefficients::model(10.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    const Point p(u(rng), u(rng));
    const auto path = trace_characteristic(c, p);
    CHECK(path.length_in + path.length_out ==
          doctest::Approx(backtrack_length(p, c.b())).epsilon(1e-12));
    CHECK(path.length_in >= 0.0);
  }
}
