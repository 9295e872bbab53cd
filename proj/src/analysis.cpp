#include "llstar/analysis.hpp"
#include "llstar/assembly.hpp"
#include "llstar/methods.hpp"
#include "llstar/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace llstar {

namespace {

using Bary = std::array<double, 3>;
using SubTriangle = std::array<Bary, 3>;

double cross(const Point &u, const Point &v) { return u.x() * v.y() - u.y() * v.x(); }

Point ray_exit(const Point &start, const Point &b) {
  double t = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    if (b[k] > 0.0)
      t = std::min(t, (1.0 - start[k]) / b[k]);
    else if (b[k] < 0.0)
      t = std::min(t, start[k] / -b[k]);
  }
  return start + t * b;
}

// Sub-triangles (in barycentric coordinates of the parent) after `depth`
// rounds of midpoint refinement.
std::vector<SubTriangle> subdivide(int depth) {
  std::vector<SubTriangle> tris{{Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 1}}};
  auto mid = [](const Bary &p, const Bary &q) {
    return Bary{0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])};
  };
  for (int d = 0; d < depth; ++d) {
    std::vector<SubTriangle> next;
    next.reserve(4 * tris.size());
    for (const auto &[a, b, c] : tris) {
      const Bary ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      next.push_back({a, ab, ca});
      next.push_back({ab, b, bc});
      next.push_back({ca, bc, c});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  return tris;
}

Bary compose(const SubTriangle &s, const Bary &q) {
  Bary out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out[j] += q[i] * s[i][j];
  return out;
}

// Visits every quadrature point of the mesh as (triangle, bary, physical
// point, weight), subdividing elements cut by a layer line.
template <class Visit>
void for_each_quadrature_point(const Mesh &mesh, const Coefficients &coeffs,
                               int degree, const ErrorOptions &opts, Visit &&visit) {
  const QuadratureRule rule = triangle_rule_unbounded(degree);
  const auto lines = layer_lines(coeffs);
  const std::vector<SubTriangle> whole = subdivide(0);
  const std::vector<SubTriangle> fine = subdivide(opts.layer_subdivision);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    bool cut = false;
    for (const auto &s : lines)
      cut = cut || segment_meets_triangle(mesh, t, s);
    if (opts.exclude_layer_distance > 0.0) {
      bool near = cut;
      for (const auto &s : lines)
        for (int i = 0; i < 3 && !near; ++i)
          near = distance_to_segment(mesh.vertex(t, i), s) <= opts.exclude_layer_distance;
      if (near)
        continue;
    }
    const auto &subs = cut ? fine : whole;
    const double area = mesh.signed_area(t);
    const double scale = 2.0 * area / static_cast<double>(subs.size());
    for (const auto &sub : subs)
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Bary bary = compose(sub, rule.points[q]);
        const Point x = bary[0] * mesh.vertex(t, 0) + bary[1] * mesh.vertex(t, 1) +
                        bary[2] * mesh.vertex(t, 2);
        visit(t, bary, x, rule.weights[q] * scale);
      }
  }
}

} // namespace

std::vector<Segment> layer_lines(const Coefficients &coeffs) {
  const Rect &r = coeffs.omega_in();
  const Point &b = coeffs.b();
  const std::array<Point, 4> corners{Point(r.x0, r.y0), Point(r.x1, r.y0),
                                     Point(r.x1, r.y1), Point(r.x0, r.y1)};
  const Point center(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1));

  // Tangent corners have extreme offset across the flow; ties (axis-aligned
  // flow) go to the downstream corner.
  auto pick = [&](double sign) {
    int best = 0;
    for (int i = 1; i < 4; ++i) {
      const double di = sign * cross(b, corners[i] - center);
      const double db = sign * cross(b, corners[best] - center);
      if (di > db + 1e-14 ||
          (std::abs(di - db) <= 1e-14 && b.dot(corners[i]) > b.dot(corners[best])))
        best = i;
    }
    return corners[best];
  };
  std::vector<Segment> lines;
  for (double sign : {1.0, -1.0}) {
    const Point c = pick(sign);
    lines.push_back({c, ray_exit(c, b)});
  }
  const std::array<std::pair<Segment, Point>, 4> faces{{
      {{corners[0], corners[1]}, Point(0, -1)},
      {{corners[1], corners[2]}, Point(1, 0)},
      {{corners[2], corners[3]}, Point(0, 1)},
      {{corners[3], corners[0]}, Point(-1, 0)},
  }};
  for (const auto &[seg, normal] : faces)
    if (b.dot(normal) < 0.0)
      lines.push_back(seg);
  return lines;
}

double distance_to_segment(const Point &p, const Segment &s) {
  const Point d = s.b - s.a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - s.a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (p - (s.a + t * d)).norm();
}

bool segment_meets_triangle(const Mesh &mesh, int t, const Segment &s) {
  const double tol = 1e-12;
  for (const Point &p : {s.a, s.b}) {
    const auto bary = mesh.barycentric(t, p);
    if (bary[0] >= -tol && bary[1] >= -tol && bary[2] >= -tol)
      return true;
  }
  const Point d = s.b - s.a;
  for (int e = 0; e < 3; ++e) {
    const Point p = mesh.vertex(t, e), q = mesh.vertex(t, (e + 1) % 3);
    const Point f = q - p;
    const double denom = cross(d, f);
    const double scale = d.norm() * f.norm();
    if (std::abs(denom) <= tol * scale) {
      // Parallel: meets only when collinear and overlapping.
      if (std::abs(cross(d, p - s.a)) > tol * d.norm())
        continue;
      if (distance_to_segment(p, s) <= tol || distance_to_segment(q, s) <= tol)
        return true;
      continue;
    }
    const double u = cross(p - s.a, f) / denom;
    const double v = cross(p - s.a, d) / denom;
    if (u >= -tol && u <= 1.0 + tol && v >= -tol && v <= 1.0 + tol)
      return true;
  }
  return false;
}

double l2_distance(const MeshFunction &u, const std::function<double(const Point &)> &ref,
                   const Coefficients &coeffs, const ErrorOptions &opts) {
  if (opts.quad_degree < 1)
    throw InvalidArgument("l2_distance needs an explicit quadrature degree");
  double sum = 0.0;
  for_each_quadrature_point(u.mesh(), coeffs, opts.quad_degree, opts,
                            [&](int t, const Bary &bary, const Point &x, double w) {
                              const double e = u.value(t, bary) - ref(x);
                              sum += w * e * e;
                            });
  return std::sqrt(sum);
}

double l2_error(const MeshFunction &u, const Coefficients &coeffs, int order,
                ErrorOptions opts) {
  if (opts.quad_degree < 1)
    opts.quad_degree = 2 * order + 4;
  return l2_distance(u, [&](const Point &x) { return exact_solution(coeffs, x); },
                     coeffs, opts);
}

std::vector<double> compute_eoc(const std::vector<double> &errors,
                                const std::vector<double> &hs) {
  if (errors.size() != hs.size() || errors.size() < 2)
    throw InvalidArgument("EOC needs matching error and h lists of length >= 2");
  for (std::size_t i = 0; i < hs.size(); ++i)
    if (!(hs[i] > 0.0) || !(errors[i] >= 0.0))
      throw InvalidArgument("EOC needs positive h and nonnegative errors");
  std::vector<double> rates;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] == 0.0) {
      rates.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    if (errors[i - 1] == 0.0)
      throw InvalidArgument("EOC undefined after an exact level");
    rates.push_back(std::log(errors[i - 1] / errors[i]) / std::log(hs[i - 1] / hs[i]));
  }
  return rates;
}

FEFunction l2_projection(const SpacePtr &space,
                         const std::function<double(const Point &)> &f,
                         const Coefficients &coeffs, const ErrorOptions &opts) {
  if (space->constraint() != TraceConstraint::None)
    throw InvalidArgument("L2 projection target must be unconstrained");
  const int degree = opts.quad_degree > 0 ? opts.quad_degree : 2 * space->order() + 4;
  const int npe = space->nodes_per_element();
  Vector rhs = Vector::Zero(space->dim());
  std::vector<double> vals(npe);
  for_each_quadrature_point(space->mesh(), coeffs, degree, opts,
                            [&](int t, const Bary &bary, const Point &x, double w) {
                              space->reference().evaluate(bary, vals, {});
                              const double fw = w * f(x);
                              const auto nodes = space->element_nodes(t);
                              for (int n = 0; n < npe; ++n)
                                rhs[space->dof_of_node(nodes[n])] += fw * vals[n];
                            });
  const auto mass = make_cholesky_solver(assemble_mass(*space));
  return {space, mass->solve(rhs)};
}

DenseMatrix dense_schur(const SparseMatrix &l, const SparseMatrix &h) {
  const auto solver = make_cholesky_solver(h);
  const DenseMatrix ld = DenseMatrix(l);
  DenseMatrix x(ld.rows(), ld.cols());
  for (int j = 0; j < ld.cols(); ++j)
    x.col(j) = solver->solve(Vector(ld.col(j)));
  DenseMatrix a = ld.transpose() * x;
  return 0.5 * (a + a.transpose());
}

InfSupReport infsup_diagnostic(const SparseMatrix &l, const SparseMatrix &h,
                               const SparseMatrix &m, int random_probes,
                               std::uint64_t seed) {
  const int nu = static_cast<int>(l.cols()), nz = static_cast<int>(l.rows());
  // Only A and M are dense; the Z side is handled by the sparse factor.
  if (nu > max_dense_dimension)
    throw InvalidArgument("inf-sup diagnostic limited to dense-feasible sizes");
  const auto solver = make_cholesky_solver(h);
  const DenseMatrix ld = DenseMatrix(l);
  DenseMatrix x(nz, nu);
  for (int j = 0; j < nu; ++j)
    x.col(j) = solver->solve(Vector(ld.col(j)));
  DenseMatrix a = ld.transpose() * x;
  a = (0.5 * (a + a.transpose())).eval();
  const DenseMatrix md = DenseMatrix(m);

  InfSupReport rep;
  rep.dim_u = nu;
  rep.dim_z = nz;
  DenseMatrix vectors;
  const Vector ev = dense_generalized_eig(a, md, vectors);
  rep.lambda_min = ev[0];
  rep.c_i = std::sqrt(std::max(rep.lambda_min, 0.0));
  rep.supinf = std::sqrt(std::max(1.0 - rep.lambda_min, 0.0));
  rep.v_min = vectors.col(0);

  auto ratio = [&](const Vector &v, const Vector &z) {
    const double vmv = v.dot(md * v);
    const double d2 = vmv - 2.0 * (ld * v).dot(z) + z.dot(h * z);
    return std::sqrt(std::max(d2, 0.0) / vmv);
  };
  double sup = 0.0;
  for (int j = 0; j < nu; ++j)
    sup = std::max(sup, ratio(Vector::Unit(nu, j), x.col(j)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int p = 0; p < random_probes; ++p) {
    Vector v(nu);
    for (auto &c : v)
      c = normal(rng);
    sup = std::max(sup, ratio(v, x * v));
  }
  rep.probe_sup = sup;
  return rep;
}

double spectral_sandwich_check(const DenseMatrix &a, const DenseMatrix &m, double c_i,
                               int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    Vector v(a.rows());
    for (auto &c : v)
      c = normal(rng);
    v /= std::sqrt(v.dot(m * v));
    const double vav = v.dot(a * v);
    worst = std::max({worst, c_i * c_i - vav, vav - 1.0});
  }
  return worst;
}

double spectral_sandwich_check(const SparseMatrix &l, const SparseMatrix &h,
                               const SparseMatrix &m, int trials, std::uint64_t seed) {
  const auto rep = infsup_diagnostic(l, h, m, 0);
  return spectral_sandwich_check(dense_schur(l, h), DenseMatrix(m), rep.c_i, trials, seed);
}

ProjectionDefect projection_defect(const SpacePtr &u_space, const SpacePtr &z_space,
                                   const Coefficients &coeffs, const InnerSolver &h,
                                   const SparseMatrix &l, const Vector &v) {
  const Vector z = h.solve(l * v);
  const MeshPtr &zm = z_space->mesh_ptr();
  const MeshFunction vf = as_mesh_function(FEFunction(u_space, v)).on_refinement(zm);
  const MeshFunction pf = adjoint_image(z_space, coeffs, z);
  const auto &rule = quadrature_rule(
      default_quadrature_degree(u_space->order(), z_space->order()));
  ProjectionDefect out;
  for (int t = 0; t < zm->num_triangles(); ++t) {
    const double scale = 2.0 * zm->signed_area(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double a = vf.value(t, rule.points[q]);
      const double b = pf.value(t, rule.points[q]);
      const double w = rule.weights[q] * scale;
      out.defect += w * (a - b) * (a - b);
      out.norm_v += w * a * a;
      out.norm_projection += w * b * b;
    }
  }
  out.defect = std::sqrt(out.defect);
  out.norm_v = std::sqrt(out.norm_v);
  out.norm_projection = std::sqrt(out.norm_projection);
  return out;
}

} // namespace llstar
