#pragma once

#include "llstar/problem.hpp"
#include "llstar/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

namespace llstar {

enum class Region : std::uint8_t { In = 0, Out = 1 };

/// Boundary edge classification by the sign of b.n.  Tangential edges
/// (b.n == 0) only occur for axis-aligned flows.
enum class BoundaryLabel : std::uint8_t { Inflow = 0, Outflow = 1, Tangential = 2 };

struct BoundaryEdge {
  std::array<int, 2> vertices;
  BoundaryLabel label;
};

/// Conforming triangulation of the unit square.  Triangles are stored
/// counterclockwise; a refined mesh keeps a handle to its parent together
/// with the child -> parent triangle map.
class Mesh {
public:
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<BoundaryEdge> boundary_edges, std::vector<Region> regions);

  const std::vector<Point> &vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>> &triangles() const { return triangles_; }
  const std::vector<BoundaryEdge> &boundary_edges() const { return boundary_edges_; }
  const std::vector<Region> &regions() const { return regions_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }

  /// Maximum edge length.
  double h() const { return h_; }
  double min_edge() const { return min_edge_; }

  double signed_area(int t) const;
  Point centroid(int t) const;
  Point vertex(int t, int local) const { return vertices_[triangles_[t][local]]; }

  /// Barycentric coordinates of `p` with respect to triangle t.
  std::array<double, 3> barycentric(int t, const Point &p) const;

  const std::shared_ptr<const Mesh> &parent_mesh() const { return parent_mesh_; }
  const std::vector<int> &parent_map() const { return parent_; }

  /// Index of the triangle of `ancestor` containing triangle t of this mesh.
  /// `ancestor` must be this mesh or reachable through parent_mesh().
  int ancestor_triangle(int t, const Mesh &ancestor) const;
  bool descends_from(const Mesh &ancestor) const;

private:
  friend std::shared_ptr<const Mesh> uniform_refine(const std::shared_ptr<const Mesh> &);

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<Region> regions_;
  double h_ = 0.0;
  double min_edge_ = 0.0;
  std::shared_ptr<const Mesh> parent_mesh_;
  std::vector<int> parent_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

struct MeshOptions {
  int n = 8;                               ///< subdivisions per side, divisible by 4
  double jitter = 0.2;                     ///< in [0, 0.3), fraction of 1/n
  std::uint64_t seed = 20170101;
  Rect omega_in = {};
};

/// Jittered structured triangulation resolving the inner rectangle, with
/// boundary labels derived from the flow direction b.
MeshPtr generate_square_mesh(const MeshOptions &options, const Point &b);

/// Splits every triangle into four via edge midpoints.
MeshPtr uniform_refine(const MeshPtr &mesh);

/// Applies `levels` uniform refinements.
MeshPtr refine(const MeshPtr &mesh, int levels);

struct Location {
  int triangle;
  std::array<double, 3> bary;
};

/// Containing triangle (lowest index on ties).  Throws for points outside.
Location locate(const Mesh &mesh, const Point &point);

/// Text format: "nv nt nb", nv lines "x y", nt lines "v0 v1 v2 tag",
/// nb lines "v0 v1 label", with enum values written as integers.
void write_mesh(std::ostream &out, const Mesh &mesh);
MeshPtr read_mesh(std::istream &in);

} // namespace llstar
