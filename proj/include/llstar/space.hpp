#pragma once

#include "llstar/mesh.hpp"
#include "llstar/problem.hpp"
#include "llstar/types.hpp"

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace llstar {

/// Which boundary trace the space constrains to zero.  Outflow gives
/// Z-spaces inside the adjoint domain; Inflow gives U-spaces inside the
/// primal domain.
enum class TraceConstraint { None, Outflow, Inflow };

/// Treatment of nodes where the constrained boundary meets the rest of
/// the boundary (e.g. the corners shared by inflow and outflow edges).
enum class CornerPolicy {
  Closure, ///< constrain the closure of the boundary portion
  Open,    ///< leave shared endpoints free
};

/// Equispaced Lagrange element of order k on the reference triangle.
class ReferenceElement {
public:
  explicit ReferenceElement(int order);

  int order() const { return order_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  /// Barycentric multi-indices (a0, a1, a2), a0 + a1 + a2 = k.
  const std::vector<std::array<int, 3>> &multi_indices() const { return nodes_; }
  std::array<double, 3> node_bary(int i) const;

  /// Basis values and derivatives with respect to each barycentric
  /// coordinate (treated as independent variables).
  void evaluate(const std::array<double, 3> &bary, std::span<double> values,
                std::span<std::array<double, 3>> dbary) const;

private:
  int order_;
  std::vector<std::array<int, 3>> nodes_;
};

/// Affine map data for one triangle.
struct ElementGeometry {
  double area;
  std::array<Point, 3> grad_bary;
  std::array<Point, 3> vertices;

  Point map(const std::array<double, 3> &bary) const {
    return bary[0] * vertices[0] + bary[1] * vertices[1] + bary[2] * vertices[2];
  }
};

ElementGeometry element_geometry(const Mesh &mesh, int t);

/// Continuous Lagrange space of order 1..5.  Nodes are numbered
/// topologically (vertices, then edges, then cell interiors); dofs are the
/// unconstrained nodes in node order.
class FunctionSpace {
public:
  FunctionSpace(MeshPtr mesh, int order, TraceConstraint constraint,
                CornerPolicy corners = CornerPolicy::Closure);

  const Mesh &mesh() const { return *mesh_; }
  const MeshPtr &mesh_ptr() const { return mesh_; }
  int order() const { return reference_.order(); }
  const ReferenceElement &reference() const { return reference_; }
  TraceConstraint constraint() const { return constraint_; }

  int num_nodes() const { return static_cast<int>(node_coords_.size()); }
  int nodes_per_element() const { return reference_.num_nodes(); }
  /// Number of unconstrained dofs.
  int dim() const { return static_cast<int>(dof_nodes_.size()); }

  /// Global node indices of triangle t, in reference-element order.
  std::span<const int> element_nodes(int t) const;
  /// Dof index of a node, or -1 when constrained.
  int dof_of_node(int node) const { return node_dof_[node]; }
  int node_of_dof(int dof) const { return dof_nodes_[dof]; }
  const Point &node_coord(int node) const { return node_coords_[node]; }
  Point dof_coord(int dof) const { return node_coords_[dof_nodes_[dof]]; }
  bool is_constrained(int node) const { return node_dof_[node] < 0; }
  std::vector<int> constrained_nodes() const;

private:
  MeshPtr mesh_;
  ReferenceElement reference_;
  TraceConstraint constraint_;
  std::vector<Point> node_coords_;
  std::vector<int> element_nodes_;
  std::vector<int> node_dof_;
  std::vector<int> dof_nodes_;
};

using SpacePtr = std::shared_ptr<const FunctionSpace>;

SpacePtr build_space(MeshPtr mesh, int order, TraceConstraint constraint,
                     CornerPolicy corners = CornerPolicy::Closure);

/// Basis data of one element at one point: per local node value and
/// physical gradient.
struct BasisValues {
  std::vector<double> values;
  std::vector<Point> gradients;
};

BasisValues eval_basis(const FunctionSpace &space, int triangle,
                       const std::array<double, 3> &bary);

/// (L* psi_i)(x) = -b.grad psi_i + sigma psi_i for each local node of the
/// element.  sigma is taken from the element's region tag.
std::vector<double> apply_adjoint_to_basis(const FunctionSpace &space,
                                           const Coefficients &coeffs,
                                           int triangle,
                                           const std::array<double, 3> &bary);

/// sigma on triangle t from its region tag.
double element_sigma(const Mesh &mesh, const Coefficients &coeffs, int t);

/// Finite element function; constrained nodes are implicitly zero.
class FEFunction {
public:
  FEFunction(SpacePtr space, Vector coefficients);

  const FunctionSpace &space() const { return *space_; }
  const SpacePtr &space_ptr() const { return space_; }
  const Vector &coefficients() const { return coefficients_; }

  /// Value on triangle t of the space's own mesh.
  double value(int triangle, const std::array<double, 3> &bary) const;
  /// Value and physical gradient on triangle t.
  double value_and_gradient(int triangle, const std::array<double, 3> &bary,
                            Point &gradient) const;
  /// Value at an arbitrary point (locates the containing triangle).
  double operator()(const Point &p) const;

private:
  SpacePtr space_;
  Vector coefficients_;
};

/// Nodal interpolant; constrained nodes are left at zero.
FEFunction interpolate(const SpacePtr &space,
                       const std::function<double(const Point &)> &f);

/// Function given element by element on a mesh (possibly discontinuous
/// across elements), evaluated from (triangle, barycentric) pairs.
class MeshFunction {
public:
  using Eval = std::function<double(int, const std::array<double, 3> &)>;

  MeshFunction(MeshPtr mesh, Eval eval) : mesh_(std::move(mesh)), eval_(std::move(eval)) {}

  const Mesh &mesh() const { return *mesh_; }
  const MeshPtr &mesh_ptr() const { return mesh_; }
  double value(int triangle, const std::array<double, 3> &bary) const {
    return eval_(triangle, bary);
  }
  double operator()(const Point &p) const;

  /// The same function seen from a mesh obtained by refining this one.
  MeshFunction on_refinement(MeshPtr fine) const;

private:
  MeshPtr mesh_;
  Eval eval_;
};

MeshFunction as_mesh_function(const FEFunction &f);
MeshFunction pointwise_function(MeshPtr mesh,
                                std::function<double(const Point &)> f);

} // namespace llstar
