#include "llstar/space.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>

namespace llstar {

ReferenceElement::ReferenceElement(int order) : order_(order) {
  if (order < 1 || order > 5)
    throw InvalidArgument("Lagrange order must lie in [1, 5], got " +
                          std::to_string(order));
  const int k = order;
  nodes_ = {{k, 0, 0}, {0, k, 0}, {0, 0, k}};
  for (int a0 = k; a0 >= 0; --a0)
    for (int a1 = k - a0; a1 >= 0; --a1) {
      const std::array<int, 3> idx{a0, a1, k - a0 - a1};
      if (std::ranges::count(idx, k) == 0)
        nodes_.push_back(idx);
    }
}

std::array<double, 3> ReferenceElement::node_bary(int i) const {
  const auto &a = nodes_[i];
  return {static_cast<double>(a[0]) / order_, static_cast<double>(a[1]) / order_,
          static_cast<double>(a[2]) / order_};
}

void ReferenceElement::evaluate(const std::array<double, 3> &bary,
                                std::span<double> values,
                                std::span<std::array<double, 3>> dbary) const {
  const int k = order_;
  // l[i][a] = ell_a(lambda_i), dl[i][a] its derivative.
  double l[3][6], dl[3][6];
  for (int i = 0; i < 3; ++i) {
    const double t = k * bary[i];
    l[i][0] = 1.0;
    dl[i][0] = 0.0;
    for (int a = 1; a <= k; ++a) {
      const double f = (t - (a - 1)) / a;
      dl[i][a] = dl[i][a - 1] * f + l[i][a - 1] * (static_cast<double>(k) / a);
      l[i][a] = l[i][a - 1] * f;
    }
  }
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    const auto &a = nodes_[n];
    const double v0 = l[0][a[0]], v1 = l[1][a[1]], v2 = l[2][a[2]];
    values[n] = v0 * v1 * v2;
    if (!dbary.empty())
      dbary[n] = {dl[0][a[0]] * v1 * v2, v0 * dl[1][a[1]] * v2,
                  v0 * v1 * dl[2][a[2]]};
  }
}

ElementGeometry element_geometry(const Mesh &mesh, int t) {
  ElementGeometry g;
  for (int i = 0; i < 3; ++i)
    g.vertices[i] = mesh.vertex(t, i);
  const double area = mesh.signed_area(t);
  g.area = area;
  const double inv = 1.0 / (2.0 * area);
  for (int i = 0; i < 3; ++i) {
    const Point &pj = g.vertices[(i + 1) % 3];
    const Point &pk = g.vertices[(i + 2) % 3];
    g.grad_bary[i] = Point(pj.y() - pk.y(), pk.x() - pj.x()) * inv;
  }
  return g;
}

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

} // namespace

FunctionSpace::FunctionSpace(MeshPtr mesh, int order, TraceConstraint constraint,
                             CornerPolicy corners)
    : mesh_(std::move(mesh)), reference_(order), constraint_(constraint) {
  const Mesh &m = *mesh_;
  const int k = order;
  const int nv = m.num_vertices();
  const int nt = m.num_triangles();

  // Edge numbering; every edge must be shared by at most two triangles and
  // the edges with one neighbour must be exactly the boundary edges.
  std::unordered_map<std::uint64_t, int> edge_id;
  std::vector<std::array<int, 2>> edges;
  std::vector<int> edge_count;
  edge_id.reserve(static_cast<std::size_t>(3 * nt));
  for (const auto &tri : m.triangles())
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e], b = tri[(e + 1) % 3];
      auto [it, inserted] =
          edge_id.try_emplace(edge_key(a, b), static_cast<int>(edges.size()));
      if (inserted) {
        edges.push_back({std::min(a, b), std::max(a, b)});
        edge_count.push_back(0);
      }
      if (++edge_count[it->second] > 2)
        throw InvalidArgument("non-conforming mesh: edge shared by three triangles");
    }
  std::size_t single = std::ranges::count(edge_count, 1);
  if (single != m.boundary_edges().size())
    throw InvalidArgument("non-conforming mesh: hanging edges do not match the boundary");
  for (const auto &be : m.boundary_edges()) {
    auto it = edge_id.find(edge_key(be.vertices[0], be.vertices[1]));
    if (it == edge_id.end() || edge_count[it->second] != 1)
      throw InvalidArgument("non-conforming mesh: boundary edge is not a hull edge");
  }

  const int ne = static_cast<int>(edges.size());
  const int per_edge = k - 1;
  const int per_cell = (k - 1) * (k - 2) / 2;
  const int total = nv + ne * per_edge + nt * per_cell;

  node_coords_.resize(total);
  for (int v = 0; v < nv; ++v)
    node_coords_[v] = m.vertices()[v];
  for (int e = 0; e < ne; ++e) {
    const Point &pa = m.vertices()[edges[e][0]];
    const Point &pb = m.vertices()[edges[e][1]];
    for (int p = 1; p < k; ++p)
      node_coords_[nv + e * per_edge + p - 1] =
          (static_cast<double>(k - p) * pa + static_cast<double>(p) * pb) / k;
  }

  const int npe = reference_.num_nodes();
  element_nodes_.resize(static_cast<std::size_t>(nt) * npe);
  for (int t = 0; t < nt; ++t) {
    const auto &tri = m.triangles()[t];
    int interior = 0;
    for (int n = 0; n < npe; ++n) {
      const auto &a = reference_.multi_indices()[n];
      int node = -1;
      const int zeros = static_cast<int>(std::ranges::count(a, 0));
      if (zeros == 2) {
        node = tri[std::ranges::find(a, k) - a.begin()];
      } else if (zeros == 1) {
        const int z = static_cast<int>(std::ranges::find(a, 0) - a.begin());
        const int i = (z + 1) % 3, j = (z + 2) % 3;
        const int vi = tri[i], vj = tri[j];
        const int e = edge_id.at(edge_key(vi, vj));
        // Position counted from the lower-numbered vertex.
        const int p = vi < vj ? a[j] : a[i];
        node = nv + e * per_edge + p - 1;
      } else {
        node = nv + ne * per_edge + t * per_cell + interior++;
        const auto bary = reference_.node_bary(n);
        node_coords_[node] = bary[0] * m.vertex(t, 0) + bary[1] * m.vertex(t, 1) +
                             bary[2] * m.vertex(t, 2);
      }
      element_nodes_[static_cast<std::size_t>(t) * npe + n] = node;
    }
  }

  std::vector<char> constrained(total, 0);
  if (constraint != TraceConstraint::None) {
    const BoundaryLabel target = constraint == TraceConstraint::Outflow
                                     ? BoundaryLabel::Outflow
                                     : BoundaryLabel::Inflow;
    std::vector<char> touches_target(nv, 0), touches_other(nv, 0);
    for (const auto &be : m.boundary_edges()) {
      auto &flag = be.label == target ? touches_target : touches_other;
      flag[be.vertices[0]] = flag[be.vertices[1]] = 1;
      if (be.label == target) {
        const int e = edge_id.at(edge_key(be.vertices[0], be.vertices[1]));
        for (int p = 0; p < per_edge; ++p)
          constrained[nv + e * per_edge + p] = 1;
      }
    }
    for (int v = 0; v < nv; ++v)
      if (touches_target[v] &&
          (corners == CornerPolicy::Closure || !touches_other[v]))
        constrained[v] = 1;
  }

  node_dof_.assign(total, -1);
  for (int n = 0; n < total; ++n)
    if (!constrained[n]) {
      node_dof_[n] = static_cast<int>(dof_nodes_.size());
      dof_nodes_.push_back(n);
    }
}

std::span<const int> FunctionSpace::element_nodes(int t) const {
  const std::size_t npe = reference_.num_nodes();
  return {element_nodes_.data() + t * npe, npe};
}

std::vector<int> FunctionSpace::constrained_nodes() const {
  std::vector<int> out;
  for (int n = 0; n < num_nodes(); ++n)
    if (node_dof_[n] < 0)
      out.push_back(n);
  return out;
}

SpacePtr build_space(MeshPtr mesh, int order, TraceConstraint constraint,
                     CornerPolicy corners) {
  return std::make_shared<const FunctionSpace>(std::move(mesh), order, constraint,
                                               corners);
}

BasisValues eval_basis(const FunctionSpace &space, int triangle,
                       const std::array<double, 3> &bary) {
  const int npe = space.nodes_per_element();
  BasisValues out;
  out.values.resize(npe);
  out.gradients.resize(npe);
  std::vector<std::array<double, 3>> dbary(npe);
  space.reference().evaluate(bary, out.values, dbary);
  const auto geo = element_geometry(space.mesh(), triangle);
  for (int n = 0; n < npe; ++n)
    out.gradients[n] = dbary[n][0] * geo.grad_bary[0] +
                       dbary[n][1] * geo.grad_bary[1] +
                       dbary[n][2] * geo.grad_bary[2];
  return out;
}

double element_sigma(const Mesh &mesh, const Coefficients &coeffs, int t) {
  return mesh.regions()[t] == Region::In ? coeffs.sigma_in() : coeffs.sigma_out();
}

std::vector<double> apply_adjoint_to_basis(const FunctionSpace &space,
                                           const Coefficients &coeffs,
                                           int triangle,
                                           const std::array<double, 3> &bary) {
  const auto basis = eval_basis(space, triangle, bary);
  const double sigma = element_sigma(space.mesh(), coeffs, triangle);
  std::vector<double> out(basis.values.size());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = -coeffs.b().dot(basis.gradients[n]) + sigma * basis.values[n];
  return out;
}

FEFunction::FEFunction(SpacePtr space, Vector coefficients)
    : space_(std::move(space)), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != space_->dim())
    throw InvalidArgument("coefficient vector length differs from space dimension");
}

double FEFunction::value(int triangle, const std::array<double, 3> &bary) const {
  const int npe = space_->nodes_per_element();
  double vals[21];
  space_->reference().evaluate(bary, std::span<double>(vals, npe), {});
  const auto nodes = space_->element_nodes(triangle);
  double sum = 0.0;
  for (int n = 0; n < npe; ++n) {
    const int dof = space_->dof_of_node(nodes[n]);
    if (dof >= 0)
      sum += coefficients_[dof] * vals[n];
  }
  return sum;
}

double FEFunction::value_and_gradient(int triangle,
                                      const std::array<double, 3> &bary,
                                      Point &gradient) const {
  const auto basis = eval_basis(*space_, triangle, bary);
  const auto nodes = space_->element_nodes(triangle);
  double sum = 0.0;
  gradient.setZero();
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const int dof = space_->dof_of_node(nodes[n]);
    if (dof >= 0) {
      sum += coefficients_[dof] * basis.values[n];
      gradient += coefficients_[dof] * basis.gradients[n];
    }
  }
  return sum;
}

double FEFunction::operator()(const Point &p) const {
  const auto loc = locate(space_->mesh(), p);
  return value(loc.triangle, loc.bary);
}

FEFunction interpolate(const SpacePtr &space,
                       const std::function<double(const Point &)> &f) {
  Vector c(space->dim());
  for (int d = 0; d < space->dim(); ++d)
    c[d] = f(space->dof_coord(d));
  return {space, std::move(c)};
}

double MeshFunction::operator()(const Point &p) const {
  const auto loc = locate(*mesh_, p);
  return eval_(loc.triangle, loc.bary);
}

MeshFunction MeshFunction::on_refinement(MeshPtr fine) const {
  if (fine.get() == mesh_.get())
    return *this;
  if (!fine->descends_from(*mesh_))
    throw InvalidArgument("target mesh is not a refinement of the function's mesh");
  const Mesh *fp = fine.get();
  return {std::move(fine), [self = *this, fp](int t, const std::array<double, 3> &bary) {
            const int tc = fp->ancestor_triangle(t, self.mesh());
            Point x = Point::Zero();
            for (int i = 0; i < 3; ++i)
              x += bary[i] * fp->vertex(t, i);
            return self.value(tc, self.mesh().barycentric(tc, x));
          }};
}

MeshFunction as_mesh_function(const FEFunction &f) {
  return {f.space().mesh_ptr(),
          [f](int t, const std::array<double, 3> &bary) { return f.value(t, bary); }};
}

MeshFunction pointwise_function(MeshPtr mesh, std::function<double(const Point &)> f) {
  const Mesh *m = mesh.get();
  return {std::move(mesh), [m, f = std::move(f)](int t, const std::array<double, 3> &bary) {
            Point x = Point::Zero();
            for (int i = 0; i < 3; ++i)
              x += bary[i] * m->vertex(t, i);
            return f(x);
          }};
}

} // namespace llstar
