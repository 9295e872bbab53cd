#include "llstar/assembly.hpp"
#include "llstar/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

namespace llstar {

namespace {

using Bary = std::array<double, 3>;
using Triplets = std::vector<Eigen::Triplet<double, int>>;

// Reference basis values and barycentric derivatives at every point of a
// rule, laid out [point][node].
struct TabulatedBasis {
  int nodes = 0;
  std::vector<double> values;
  std::vector<Bary> dbary;

  TabulatedBasis(const ReferenceElement &ref, const QuadratureRule &rule)
      : nodes(ref.num_nodes()), values(rule.size() * nodes),
        dbary(rule.size() * nodes) {
    for (std::size_t q = 0; q < rule.size(); ++q)
      ref.evaluate(rule.points[q], std::span(values).subspan(q * nodes, nodes),
                   std::span(dbary).subspan(q * nodes, nodes));
  }
};

Point physical_gradient(const Bary &d, const ElementGeometry &geo) {
  return d[0] * geo.grad_bary[0] + d[1] * geo.grad_bary[1] + d[2] * geo.grad_bary[2];
}

// Values of L* psi_i at every quadrature point of triangle t, [point][node].
void adjoint_values(const FunctionSpace &z, const Coefficients &coeffs,
                    const TabulatedBasis &tab, const ElementGeometry &geo,
                    int t, std::vector<double> &out) {
  const double sigma = element_sigma(z.mesh(), coeffs, t);
  out.resize(tab.values.size());
  for (std::size_t i = 0; i < tab.values.size(); ++i)
    out[i] = -coeffs.b().dot(physical_gradient(tab.dbary[i], geo)) +
             sigma * tab.values[i];
}

// Element-local dof indices (-1 for constrained nodes).
void local_dofs(const FunctionSpace &s, int t, std::vector<int> &out) {
  const auto nodes = s.element_nodes(t);
  out.resize(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n)
    out[n] = s.dof_of_node(nodes[n]);
}

SparseMatrix from_triplets(int rows, int cols, const Triplets &trip) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

int resolve_degree(int requested, int fallback) {
  return requested > 0 ? requested : fallback;
}

} // namespace

int default_quadrature_degree(int order_u, int order_z) {
  return 2 * std::max(order_u, order_z) + 2;
}

SparseMatrix assemble_L(const FunctionSpace &u_space, const FunctionSpace &z_space,
                        const Coefficients &coeffs, int quad_degree) {
  const Mesh &fine = z_space.mesh();
  const Mesh &coarse = u_space.mesh();
  if (!fine.descends_from(coarse))
    throw InvalidArgument("Z mesh must be the U mesh or a uniform refinement of it");
  const bool same_mesh = &fine == &coarse;

  const auto &rule = quadrature_rule(resolve_degree(
      quad_degree, default_quadrature_degree(u_space.order(), z_space.order())));
  const TabulatedBasis ztab(z_space.reference(), rule);
  const TabulatedBasis utab(u_space.reference(), rule);
  const int nz = ztab.nodes, nu = utab.nodes;
  const std::size_t nq = rule.size();

  Triplets trip;
  trip.reserve(static_cast<std::size_t>(fine.num_triangles()) * nz * nu);
  std::vector<double> lstar, uvals(nq * nu), local(nz * nu);
  std::vector<int> zd, ud;
  for (int t = 0; t < fine.num_triangles(); ++t) {
    const auto geo = element_geometry(fine, t);
    adjoint_values(z_space, coeffs, ztab, geo, t, lstar);
    const int tc = same_mesh ? t : fine.ancestor_triangle(t, coarse);
    if (same_mesh) {
      std::copy(utab.values.begin(), utab.values.end(), uvals.begin());
    } else {
      for (std::size_t q = 0; q < nq; ++q)
        u_space.reference().evaluate(
            coarse.barycentric(tc, geo.map(rule.points[q])),
            std::span(uvals).subspan(q * nu, nu), {});
    }
    std::fill(local.begin(), local.end(), 0.0);
    for (std::size_t q = 0; q < nq; ++q) {
      const double w = rule.weights[q] * 2.0 * geo.area;
      for (int i = 0; i < nz; ++i) {
        const double li = w * lstar[q * nz + i];
        for (int j = 0; j < nu; ++j)
          local[i * nu + j] += li * uvals[q * nu + j];
      }
    }
    local_dofs(z_space, t, zd);
    local_dofs(u_space, tc, ud);
    for (int i = 0; i < nz; ++i) {
      if (zd[i] < 0)
        continue;
      for (int j = 0; j < nu; ++j)
        if (ud[j] >= 0)
          trip.emplace_back(zd[i], ud[j], local[i * nu + j]);
    }
  }
  return from_triplets(z_space.dim(), u_space.dim(), trip);
}

SparseMatrix assemble_H(const FunctionSpace &z_space, const Coefficients &coeffs,
                        int quad_degree) {
  const Mesh &mesh = z_space.mesh();
  const auto &rule = quadrature_rule(resolve_degree(
      quad_degree, default_quadrature_degree(z_space.order(), z_space.order())));
  const TabulatedBasis tab(z_space.reference(), rule);
  const int nz = tab.nodes;

  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * nz * nz);
  std::vector<double> lstar, local(nz * nz);
  std::vector<int> zd;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto geo = element_geometry(mesh, t);
    adjoint_values(z_space, coeffs, tab, geo, t, lstar);
    std::fill(local.begin(), local.end(), 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geo.area;
      for (int i = 0; i < nz; ++i) {
        const double li = w * lstar[q * nz + i];
        for (int j = 0; j < nz; ++j)
          local[i * nz + j] += li * lstar[q * nz + j];
      }
    }
    // Exact symmetry of the element matrix.
    for (int i = 0; i < nz; ++i)
      for (int j = 0; j < i; ++j)
        local[j * nz + i] = local[i * nz + j];
    local_dofs(z_space, t, zd);
    for (int i = 0; i < nz; ++i) {
      if (zd[i] < 0)
        continue;
      for (int j = 0; j < nz; ++j)
        if (zd[j] >= 0)
          trip.emplace_back(zd[i], zd[j], local[i * nz + j]);
    }
  }
  return from_triplets(z_space.dim(), z_space.dim(), trip);
}

SparseMatrix assemble_mass(const FunctionSpace &space, int quad_degree) {
  const Mesh &mesh = space.mesh();
  const auto &rule = quadrature_rule(resolve_degree(
      quad_degree, default_quadrature_degree(space.order(), space.order())));
  const TabulatedBasis tab(space.reference(), rule);
  const int n = tab.nodes;

  // Reference element mass matrix; physical one is 2|T| times it.
  std::vector<double> ref(n * n, 0.0);
  for (std::size_t q = 0; q < rule.size(); ++q)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j)
        ref[i * n + j] += rule.weights[q] * tab.values[q * n + i] * tab.values[q * n + j];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      ref[j * n + i] = ref[i * n + j];

  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * n * n);
  std::vector<int> d;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double scale = 2.0 * mesh.signed_area(t);
    local_dofs(space, t, d);
    for (int i = 0; i < n; ++i) {
      if (d[i] < 0)
        continue;
      for (int j = 0; j < n; ++j)
        if (d[j] >= 0)
          trip.emplace_back(d[i], d[j], scale * ref[i * n + j]);
    }
  }
  return from_triplets(space.dim(), space.dim(), trip);
}

Vector assemble_rhs_strong(const FunctionSpace &z_space,
                           const std::function<double(const Point &)> &f,
                           int quad_degree) {
  const Mesh &mesh = z_space.mesh();
  const auto &rule = quadrature_rule(resolve_degree(
      quad_degree, default_quadrature_degree(z_space.order(), z_space.order())));
  const TabulatedBasis tab(z_space.reference(), rule);
  const int n = tab.nodes;

  Vector r = Vector::Zero(z_space.dim());
  std::vector<int> d;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto geo = element_geometry(mesh, t);
    local_dofs(z_space, t, d);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double fw = f(geo.map(rule.points[q])) * rule.weights[q] * 2.0 * geo.area;
      for (int i = 0; i < n; ++i)
        if (d[i] >= 0)
          r[d[i]] += fw * tab.values[q * n + i];
    }
  }
  return r;
}

Vector assemble_rhs_weak(const FunctionSpace &z_space, const Coefficients &coeffs,
                         int quad_degree) {
  const Mesh &mesh = z_space.mesh();
  Vector r = coeffs.has_source()
                 ? assemble_rhs_strong(
                       z_space, [&](const Point &p) { return coeffs.source(p); },
                       quad_degree)
                 : Vector::Zero(z_space.dim());

  // Locate the triangle and local vertex slots of every inflow edge.
  std::unordered_map<std::uint64_t, int> inflow_edges;
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
           static_cast<std::uint32_t>(std::max(a, b));
  };
  for (const auto &e : mesh.boundary_edges())
    if (e.label == BoundaryLabel::Inflow)
      inflow_edges.emplace(key(e.vertices[0], e.vertices[1]), 0);
  if (inflow_edges.empty())
    return r;

  // Exact for g psi with g constant; one extra order for smooth g.
  const LineRule line = gauss_legendre(z_space.order() / 2 + 2);
  const int n = z_space.nodes_per_element();
  std::vector<double> vals(n);
  std::vector<int> d;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto &tri = mesh.triangles()[t];
    for (int e = 0; e < 3; ++e) {
      const int ia = e, ib = (e + 1) % 3, ic = (e + 2) % 3;
      if (!inflow_edges.contains(key(tri[ia], tri[ib])))
        continue;
      const Point a = mesh.vertex(t, ia), b = mesh.vertex(t, ib),
                  c = mesh.vertex(t, ic);
      const Point tangent = b - a;
      const double len = tangent.norm();
      Point normal(tangent.y(), -tangent.x());
      normal /= len;
      if (normal.dot(c - a) > 0.0)
        normal = -normal;
      const double bn = coeffs.b().dot(normal);
      local_dofs(z_space, t, d);
      for (std::size_t q = 0; q < line.points.size(); ++q) {
        const double s = line.points[q];
        Bary bary{};
        bary[ia] = 1.0 - s;
        bary[ib] = s;
        z_space.reference().evaluate(bary, vals, {});
        const Point x = (1.0 - s) * a + s * b;
        const double weight = -bn * coeffs.inflow(x) * line.weights[q] * len;
        for (int i = 0; i < n; ++i)
          if (d[i] >= 0)
            r[d[i]] += weight * vals[i];
      }
    }
  }
  return r;
}

FEFunction inflow_lifting(const SpacePtr &space, const Coefficients &coeffs) {
  if (space->constraint() != TraceConstraint::None)
    throw InvalidArgument("lifting space must be unconstrained");
  const auto inflow = build_space(space->mesh_ptr(), space->order(),
                                  TraceConstraint::Inflow, CornerPolicy::Closure);
  Vector c = Vector::Zero(space->dim());
  // Both spaces share node numbering; constrained nodes of `inflow` are the
  // inflow boundary nodes.
  for (int node = 0; node < space->num_nodes(); ++node)
    if (inflow->is_constrained(node))
      c[space->dof_of_node(node)] = coeffs.inflow(space->node_coord(node));
  return {space, std::move(c)};
}

Vector assemble_rhs_lifted(const FunctionSpace &z_space, const FEFunction &lifting,
                           const Coefficients &coeffs, int quad_degree) {
  const Mesh &fine = z_space.mesh();
  const FunctionSpace &g_space = lifting.space();
  const Mesh &coarse = g_space.mesh();
  if (!fine.descends_from(coarse))
    throw InvalidArgument("lifting mesh must be an ancestor of the Z mesh");
  const auto &rule = quadrature_rule(resolve_degree(
      quad_degree, default_quadrature_degree(g_space.order(), z_space.order())));
  const TabulatedBasis tab(z_space.reference(), rule);
  const int n = tab.nodes;

  Vector r = Vector::Zero(z_space.dim());
  std::vector<int> d;
  for (int t = 0; t < fine.num_triangles(); ++t) {
    const auto geo = element_geometry(fine, t);
    const int tc = fine.ancestor_triangle(t, coarse);
    const double sigma = element_sigma(fine, coeffs, t);
    local_dofs(z_space, t, d);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = geo.map(rule.points[q]);
      Point grad;
      const double g = lifting.value_and_gradient(tc, coarse.barycentric(tc, x), grad);
      const double residual = coeffs.source(x) - (coeffs.b().dot(grad) + sigma * g);
      const double fw = residual * rule.weights[q] * 2.0 * geo.area;
      for (int i = 0; i < n; ++i)
        if (d[i] >= 0)
          r[d[i]] += fw * tab.values[q * n + i];
    }
  }
  return r;
}

double symmetry_defect(const SparseMatrix &a) {
  if (a.rows() != a.cols())
    throw InvalidArgument("symmetry check needs a square matrix");
  const SparseMatrix at = a.transpose();
  const double scale = a.coeffs().size() ? a.coeffs().cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0)
    return 0.0;
  const SparseMatrix diff = a - at;
  const double defect = diff.coeffs().size() ? diff.coeffs().cwiseAbs().maxCoeff() : 0.0;
  return defect / scale;
}

void write_coordinate(std::ostream &out, const SparseMatrix &a) {
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  out.precision(17);
  for (int r = 0; r < a.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(a, r); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

} // namespace llstar
