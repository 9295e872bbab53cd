// Acceptance suite: one PASS/FAIL line per criterion.  Pass criterion
// numbers as arguments to run a subset.

#include "llstar/analysis.hpp"
#include "llstar/assembly.hpp"
#include "llstar/methods.hpp"
#include "llstar/quadrature.hpp"
#include "llstar/study.hpp"

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace llstar;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

MeshPtr square(int n) {
  MeshOptions o;
  o.n = n;
  return generate_square_mesh(o, Coefficients::model(1.0).b());
}

DiscreteProblem problem(const MeshPtr &mesh, double sigma_in, int ku, int kz, int zref = 0) {
  ProblemSetup s;
  s.coeffs = Coefficients::model(sigma_in);
  s.u_mesh = mesh;
  s.order_u = ku;
  s.order_z = kz;
  s.z_refinements = zref;
  return build_problem(s);
}

SolverOptions tight() {
  SolverOptions o;
  o.tol = 1e-13;
  o.maxit_cg = 20000;
  o.maxit_gmres = 20000;
  return o;
}

double rel(const Vector &a, const Vector &b) { return (a - b).norm() / b.norm(); }

int numeric_rank(const DenseMatrix &a) {
  Eigen::JacobiSVD<DenseMatrix> svd(a);
  const auto &s = svd.singularValues();
  return s.size() ? static_cast<int>((s.array() > 1e-10 * s[0]).count()) : 0;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1. Dense factorizations against the Krylov solvers.
void criterion_oracle(Outcome &out) {
  const auto p = problem(square(4), 1e4, 1, 2);
  const int nz = p.z_space->dim(), nu = p.u_space->dim();
  const DenseMatrix h(p.H), l(p.L), m(p.M);
  const DenseMatrix a = l.transpose() * h.llt().solve(l);
  const Vector f = l.transpose() * h.llt().solve(p.rhs);
  const double omega = 1.0;

  DenseMatrix block(nz + nu, nz + nu);
  block << h, l, l.transpose(), DenseMatrix::Zero(nu, nu);
  Vector rhs = Vector::Zero(nz + nu);
  rhs.head(nz) = p.rhs;
  const Vector block_sol = block.fullPivLu().solve(rhs);
  const Vector u_inv = a.ldlt().solve(f);
  const Vector u_ts = m.llt().solve(f);
  const Vector u_ss = ((omega + 1) * m - a).llt().solve(omega * f);

  auto opts = tight();
  opts.omega = omega;
  const auto gm = llstar_inverse_algebraic(p.h_solver, p.H, p.L, p.M, p.rhs, opts);
  opts.inverse_solver = InverseSolver::SchurCG;
  const auto sc = llstar_inverse_algebraic(p.h_solver, p.H, p.L, p.M, p.rhs, opts);
  const auto ts = two_stage_algebraic(*p.h_solver, p.L, p.M, p.rhs, opts);
  const auto ss = single_stage_algebraic(p.h_solver, p.H, p.L, p.M, p.rhs, opts);

  const double d[] = {rel(gm.u, block_sol.tail(nu)), rel(gm.z, block_sol.head(nz)),
                      rel(sc.u, u_inv), rel(gm.u, u_inv),
                      rel(ts.u, u_ts), rel(ss.u, u_ss)};
  double worst = 0.0;
  for (double x : d)
    worst = std::max(worst, x);
  out.detail << "max relative discrepancy " << fmt(worst);
  out.require(worst <= 1e-8, "discrepancy <= 1e-8");
}

// 2. Properties of A.
void criterion_properties(Outcome &out) {
  const auto p = problem(square(4), 1e4, 1, 2);
  const DenseMatrix l(p.L), h(p.H);
  DenseMatrix a = l.transpose() * h.llt().solve(l);
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff();
  a = (0.5 * (a + a.transpose())).eval();
  const double min_eig = Eigen::SelfAdjointEigenSolver<DenseMatrix>(a).eigenvalues()[0];
  const int rl = numeric_rank(l), ra = numeric_rank(a);

  const auto wide = problem(square(4), 1e4, 2, 1);
  const DenseMatrix lw(wide.L), hw(wide.H);
  const DenseMatrix aw = dense_schur(wide.L, wide.H);
  const int rlw = numeric_rank(lw), raw = numeric_rank(aw);
  const double lam_w = dense_generalized_eig(aw, DenseMatrix(wide.M))[0];

  out.detail << "asym " << fmt(asym) << ", min eig " << fmt(min_eig) << ", rank L/A "
             << rl << "/" << ra << " (dimU>dimZ: " << rlw << "/" << raw
             << ", lambda_min " << fmt(lam_w) << ")";
  out.require(asym <= 1e-12, "A symmetric");
  out.require(min_eig >= -1e-10, "min eigenvalue >= -1e-10");
  out.require(rl == ra && rlw == raw, "rank(L) == rank(A)");
  out.require(wide.u_space->dim() > wide.z_space->dim(), "dim U > dim Z case");
  out.require(lam_w <= 1e-10, "lambda_min <= 1e-10 when dim U > dim Z");
}

// 3. c_I^2 v^T M v <= v^T A v <= v^T M v.
void criterion_sandwich(Outcome &out) {
  double worst = -INFINITY;
  for (int n : {4, 8}) {
    const auto p = problem(square(n), 1e4, 1, 2);
    worst = std::max(worst, spectral_sandwich_check(p.L, p.H, p.M, 100, 7 + n));
  }
  out.detail << "worst violation " << fmt(worst);
  out.require(worst <= 1e-10, "violation <= 1e-10");
}

// 4. sup ||v - Pi v|| / ||v|| over U against sqrt(1 - lambda_min).
//
// The sup over U is computed from the functions: every basis function's
// defect (I - Pi) phi_j is evaluated at quadrature points of the Z mesh, the
// Gram matrices of defects and of basis functions are formed by quadrature,
// and the sup is the root of their largest generalized eigenvalue.  The
// 500 random probes go through the same quadrature and may not exceed it.
void criterion_supinf(Outcome &out) {
  const auto p = problem(square(4), 1e4, 1, 2);
  const int nu = p.u_space->dim();
  const auto rep = infsup_diagnostic(p.L, p.H, p.M, 500, 11);

  const auto &zmesh = p.z_space->mesh_ptr();
  const auto &rule = quadrature_rule(default_quadrature_degree(1, 2));
  const int npts = zmesh->num_triangles() * static_cast<int>(rule.size());
  DenseMatrix phi(npts, nu), defect(npts, nu);
  for (int j = 0; j < nu; ++j) {
    const Vector e = Vector::Unit(nu, j);
    const MeshFunction v = as_mesh_function(FEFunction(p.u_space, e)).on_refinement(zmesh);
    const MeshFunction pv = adjoint_image(p.z_space, p.coeffs, p.h_solver->solve(p.L * e));
    int row = 0;
    for (int t = 0; t < zmesh->num_triangles(); ++t)
      for (std::size_t q = 0; q < rule.size(); ++q, ++row) {
        const double w = std::sqrt(rule.weights[q] * 2 * zmesh->signed_area(t));
        phi(row, j) = w * v.value(t, rule.points[q]);
        defect(row, j) = w * (v.value(t, rule.points[q]) - pv.value(t, rule.points[q]));
      }
  }
  const DenseMatrix gram_defect = defect.transpose() * defect;
  const DenseMatrix gram_phi = phi.transpose() * phi;
  const double sup_space = std::sqrt(dense_generalized_eig(gram_defect, gram_phi).maxCoeff());

  double sup_probes = 0.0;
  auto ratio = [&](const Vector &v) {
    return std::sqrt(v.dot(gram_defect * v) / v.dot(gram_phi * v));
  };
  for (int j = 0; j < nu; ++j)
    sup_probes = std::max(sup_probes, ratio(Vector::Unit(nu, j)));
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  for (int k = 0; k < 500; ++k) {
    Vector v(nu);
    for (auto &x : v)
      x = g(rng);
    sup_probes = std::max(sup_probes, ratio(v));
  }
  const double gap = std::abs(sup_space - rep.supinf);
  out.detail << "sup over U " << fmt(sup_space) << ", sqrt(1-lambda_min) " << fmt(rep.supinf)
             << ", |diff| " << fmt(gap) << "; basis+random probes reach " << fmt(sup_probes)
             << " (matrix route " << fmt(rep.probe_sup) << ")";
  out.require(gap <= 1e-8, "sup equals sqrt(1 - lambda_min) within 1e-8");
  out.require(sup_probes <= sup_space + 1e-8, "probes bounded by the sup");
  out.require(rep.probe_sup <= rep.supinf + 1e-8, "matrix-route probes bounded");
}

// 5. Fixed U, Z refined 0..3 times.
struct LimitSeries {
  std::vector<std::array<double, 3>> dist; ///< two-stage, single-stage, inverse
  std::vector<double> c_i;
};

LimitSeries limit_series(double sigma_in) {
  const auto mesh = square(4);
  const auto coeffs = Coefficients::model(sigma_in);
  const auto u_space = build_space(mesh, 1, TraceConstraint::None);
  const FEFunction proj =
      l2_projection(u_space, [&](const Point &x) { return exact_solution(coeffs, x); }, coeffs);
  const SparseMatrix mass = assemble_mass(*u_space);
  auto dist = [&](const FEFunction &u) {
    const Vector d = u.coefficients() - proj.coefficients();
    return std::sqrt(d.dot(mass * d));
  };
  const MethodKind kinds[] = {MethodKind::TwoStage, MethodKind::SingleStage,
                              MethodKind::LLStarInverse};
  LimitSeries s;
  for (int r = 0; r <= 3; ++r) {
    const auto p = problem(mesh, sigma_in, 1, 2, r);
    std::array<double, 3> row{};
    for (int k = 0; k < 3; ++k)
      row[k] = dist(*solve(p, kinds[k], tight()).u);
    s.dist.push_back(row);
    s.c_i.push_back(infsup_diagnostic(p.L, p.H, p.M, 0).c_i);
  }
  return s;
}

void describe(std::ostream &os, const LimitSeries &s) {
  os << "||u - u_proj|| ts/ss/inv:";
  for (const auto &row : s.dist)
    os << " (" << fmt(row[0]) << "," << fmt(row[1]) << "," << fmt(row[2]) << ")";
  os << "; c_I:";
  for (double c : s.c_i)
    os << ' ' << fmt(c);
}

// Asserted at sigma_in = 10, where four Z levels reach the asymptotic
// regime.  The sigma_in = 1e4 series is reported only: its layers have
// width 1e-4, far below the finest Z mesh, and c_I barely moves.
void criterion_limit(Outcome &out) {
  const auto s = limit_series(10.0);
  bool mono = true, ci_mono = true;
  for (int r = 1; r <= 3; ++r) {
    for (int k = 0; k < 3; ++k)
      mono = mono && s.dist[r][k] <= s.dist[r - 1][k];
    ci_mono = ci_mono && s.c_i[r] >= s.c_i[r - 1];
  }
  out.detail << "sigma_in=10 ";
  describe(out.detail, s);
  out.detail << " | sigma_in=1e4 (reported) ";
  describe(out.detail, limit_series(1e4));
  out.require(mono, "distances nonincreasing");
  out.require(ci_mono, "c_I nondecreasing");
}

StudyConfig convergence_config(double sigma_in) {
  StudyConfig c;
  c.study = StudyKind::Convergence;
  c.sigma_in = sigma_in;
  c.order_u = 1;
  c.order_z = 2;
  c.levels = parse_levels("8,16,32,64,128");
  return c;
}

// errors[method][level]
std::vector<std::vector<double>> error_table(const std::vector<ConvergenceRecord> &rec,
                                             const StudyConfig &c, Outcome &out,
                                             std::vector<double> &hs) {
  const std::size_t nm = c.methods.size();
  std::vector<std::vector<double>> e(nm);
  hs.clear();
  for (std::size_t li = 0; li < c.levels.size(); ++li) {
    hs.push_back(rec[li * nm].h);
    for (std::size_t mi = 0; mi < nm; ++mi) {
      const auto &r = rec[li * nm + mi];
      out.require(r.status == "ok", to_string(r.method) + " solved at level " +
                                        std::to_string(li));
      e[mi].push_back(r.error);
    }
  }
  for (std::size_t mi = 0; mi < nm; ++mi) {
    out.detail << ' ' << to_string(c.methods[mi]) << ':';
    for (double x : e[mi])
      out.detail << ' ' << fmt(x);
  }
  return e;
}

constexpr std::size_t kLL = 0, kTS = 1, kSS = 2, kINV = 3;

// 6. sigma_in = 1e4.
void criterion_fig2a(Outcome &out) {
  const auto c = convergence_config(1e4);
  std::vector<double> hs;
  const auto e = error_table(run_convergence(c), c, out, hs);
  const std::size_t n = hs.size();
  const double eoc = std::log(e[kINV][n - 3] / e[kINV][n - 1]) / std::log(hs[n - 3] / hs[n - 1]);
  out.detail << "; inverse EOC(last 3) " << fmt(eoc);
  out.require(std::abs(eoc - 0.5) <= 0.15, "EOC 0.5 +- 0.15");
  for (std::size_t li = 2; li < n; ++li)
    for (std::size_t m : {kLL, kTS, kSS})
      out.require(e[kINV][li] <= e[m][li], "inverse error smallest at level " + std::to_string(li));
}

// 7. sigma_in = 10.
void criterion_fig2b(Outcome &out) {
  const auto c = convergence_config(10.0);
  std::vector<double> hs;
  const auto e = error_table(run_convergence(c), c, out, hs);
  const std::size_t n = hs.size();
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t li = 2; li < n; ++li)
      out.require(e[m][li] < e[m][li - 1],
                  to_string(c.methods[m]) + " decreases at level " + std::to_string(li));
  for (std::size_t m : {kLL, kTS, kSS})
    out.require(e[kINV][n - 1] < e[m][n - 1], "inverse strictly smallest at the final level");
  const double lo = std::min({e[kLL][n - 1], e[kTS][n - 1], e[kSS][n - 1]});
  const double hi = std::max({e[kLL][n - 1], e[kTS][n - 1], e[kSS][n - 1]});
  out.detail << "; final spread " << fmt(hi / lo - 1);
  out.require(hi <= 1.25 * lo, "LL*, two-stage, single-stage within 25%");
}

StudyConfig solver_config(double sigma_in) {
  StudyConfig c;
  c.study = StudyKind::SolverIterations;
  c.sigma_in = sigma_in;
  c.order_u = 1;
  c.order_z = 1;
  c.z_refined = true;
  // dim U = (n + 1)^2: about 3k, 12k and 50k.
  c.levels = parse_levels("56,112,224");
  return c;
}

std::map<double, std::vector<SolverRecord>> &solver_runs() {
  static std::map<double, std::vector<SolverRecord>> runs;
  return runs;
}

const std::vector<SolverRecord> &solver_study(double sigma_in) {
  auto &runs = solver_runs();
  if (!runs.contains(sigma_in))
    runs[sigma_in] = run_solver_study(solver_config(sigma_in));
  return runs[sigma_in];
}

// 8. Single-stage preconditioned CG iteration counts.
void criterion_table2(Outcome &out) {
  for (double sigma : {1e4, 10.0}) {
    const auto &rec = solver_study(sigma);
    out.detail << " sigma_in=" << fmt(sigma) << ':';
    for (std::size_t i = 0; i < rec.size(); ++i) {
      const auto &r = rec[i];
      out.detail << " " << r.dim_u << "->" << r.iters_ss;
      out.require(r.converged_ss, "single-stage converged");
      out.require(r.iters_ss >= 20 && r.iters_ss <= 45, "iterations in [20, 45]");
      if (i > 0)
        out.require(r.iters_ss - rec[i - 1].iters_ss <= 5, "growth <= 5 per level");
    }
  }
}

// 9. (LL*)^{-1} GMRES(30) iteration counts.
void criterion_table1(Outcome &out) {
  const std::map<double, std::array<double, 3>> reference{{1e4, {73, 105, 147}},
                                                          {10.0, {51, 67, 84}}};
  for (const auto &[sigma, ref] : reference) {
    const auto &rec = solver_study(sigma);
    out.detail << " sigma_in=" << fmt(sigma) << ':';
    for (std::size_t i = 0; i < rec.size(); ++i) {
      const auto &r = rec[i];
      out.detail << " " << r.dim_u << "->" << r.iters_inv << " (ref " << ref[i] << ")";
      out.require(r.converged_inv, "GMRES converged");
      out.require(std::abs(r.iters_inv - ref[i]) <= 0.4 * ref[i], "within 40% of reference");
      if (i > 0)
        out.require(r.iters_inv > rec[i - 1].iters_inv, "strictly increasing");
    }
  }
}

// Distance to the boundary along -b, by bisection.
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

// 10. Exact solution against characteristic ODE integration.
void criterion_exact(Outcome &out) {
  const auto c = Coefficients::model(10.0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Point p(u(rng), u(rng));
    worst = std::max(worst, std::abs(exact_solution(c, p) - ode_solution(c, p)));
  }
  bool boundary_exact = true;
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    boundary_exact = boundary_exact && exact_solution(c, Point(0.0, t)) == 1.0 &&
                     exact_solution(c, Point(t, 0.0)) == 1.0;
  }
  out.detail << "max |segment - ODE| " << fmt(worst);
  out.require(worst <= 1e-10, "agreement 1e-10");
  out.require(boundary_exact, "inflow points return g exactly");
}

// 11. g == 0 with a polynomial source: weak and strong data coincide.
void criterion_bc(Outcome &out) {
  auto setup = [](BoundaryTreatment bc) {
    ProblemSetup s;
    s.coeffs = Coefficients(Coefficients::model(1.0).b(), 1e4, 1e-4, 0.0)
                   .with_source([](const Point &p) {
                     return 1 + p.x() - 2 * p.y() + 3 * p.x() * p.y() - p.y() * p.y();
                   });
    s.u_mesh = square(8);
    s.bc = bc;
    return build_problem(s);
  };
  const auto weak = setup(BoundaryTreatment::Weak);
  const auto strong = setup(BoundaryTreatment::Strong);
  const double drhs = (weak.rhs - strong.rhs).cwiseAbs().maxCoeff();
  double dsol = 0.0;
  for (auto k : {MethodKind::TwoStage, MethodKind::SingleStage, MethodKind::LLStarInverse}) {
    const auto a = solve(weak, k, tight()), b = solve(strong, k, tight());
    dsol = std::max(dsol, (a.u->coefficients() - b.u->coefficients()).cwiseAbs().maxCoeff());
  }
  const auto a = solve(weak, MethodKind::LLStar), b = solve(strong, MethodKind::LLStar);
  dsol = std::max(dsol, (*a.z - *b.z).cwiseAbs().maxCoeff());
  out.detail << "rhs diff " << fmt(drhs) << ", solution diff " << fmt(dsol);
  out.require(drhs <= 1e-13, "rhs identical to 1e-13");
  out.require(dsol <= 1e-10, "solutions identical to 1e-10");
}

struct Criterion {
  int id;
  const char *name;
  double budget; ///< seconds
  std::function<void(Outcome &)> run;
};

} // namespace

int main(int argc, char **argv) {
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", 5, criterion_oracle},
      {2, "Schur complement properties", 10, criterion_properties},
      {3, "spectral sandwich", 30, criterion_sandwich},
      {4, "sup-inf identity", 10, criterion_supinf},
      {5, "projection limit", 120, criterion_limit},
      {6, "convergence, sigma_in = 1e4", 900, criterion_fig2a},
      {7, "convergence, sigma_in = 10", 900, criterion_fig2b},
      {8, "single-stage CG iterations", 1200, criterion_table2},
      {9, "(LL*)^-1 GMRES iterations", 1800, criterion_table1},
      {10, "exact solution oracle", 5, criterion_exact},
      {11, "weak/strong boundary consistency", 60, criterion_bc},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i)
    selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const auto &c : criteria) {
    if (!selected.empty() && !selected.contains(c.id))
      continue;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception &e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // The shared solver study is charged to criterion 8, which runs first.
    out.require(secs <= c.budget, "runtime within " + fmt(c.budget) + " s");
    failures += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << ", " << fmt(secs) << " s): " << out.detail.str() << std::endl;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " failed"
                         : std::string("acceptance: all passed"))
            << std::endl;
  return failures ? 1 : 0;
}
