#include "llstar/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>

namespace llstar {

namespace {

void edge_extrema(const std::vector<Point> &vertices,
                  const std::vector<std::array<int, 3>> &triangles,
                  double &hmax, double &hmin) {
  hmax = 0.0;
  hmin = std::numeric_limits<double>::infinity();
  for (const auto &tri : triangles) {
    for (int e = 0; e < 3; ++e) {
      const double len = (vertices[tri[(e + 1) % 3]] - vertices[tri[e]]).norm();
      hmax = std::max(hmax, len);
      hmin = std::min(hmin, len);
    }
  }
}

BoundaryLabel label_for(const Point &b, const Point &normal) {
  const double bn = b.dot(normal);
  if (bn < 0.0)
    return BoundaryLabel::Inflow;
  if (bn > 0.0)
    return BoundaryLabel::Outflow;
  return BoundaryLabel::Tangential;
}

bool on_interface(const Point &p, const Rect &r) {
  const double tol = 1e-14;
  const bool on_x = std::abs(p.x() - r.x0) < tol || std::abs(p.x() - r.x1) < tol;
  const bool on_y = std::abs(p.y() - r.y0) < tol || std::abs(p.y() - r.y1) < tol;
  const bool in_x = p.x() > r.x0 - tol && p.x() < r.x1 + tol;
  const bool in_y = p.y() > r.y0 - tol && p.y() < r.y1 + tol;
  return (on_x && in_y) || (on_y && in_x);
}

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
double unit_draw(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<Point> grid_vertices(const MeshOptions &opt, double jitter) {
  const int n = opt.n;
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  std::mt19937_64 rng(opt.seed);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      Point p(static_cast<double>(i) / n, static_cast<double>(j) / n);
      // Draw for every vertex so the pattern does not depend on which
      // vertices are frozen.
      const double angle = 2.0 * std::numbers::pi * unit_draw(rng);
      const bool interior = i > 0 && i < n && j > 0 && j < n;
      if (interior && !on_interface(p, opt.omega_in))
        p += (jitter / n) * Point(std::cos(angle), std::sin(angle));
      vertices.push_back(p);
    }
  }
  return vertices;
}

} // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<BoundaryEdge> boundary_edges, std::vector<Region> regions)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)),
      boundary_edges_(std::move(boundary_edges)), regions_(std::move(regions)) {
  if (regions_.size() != triangles_.size())
    throw InvalidArgument("one region tag per triangle required");
  for (const auto &tri : triangles_)
    for (int v : tri)
      if (v < 0 || v >= num_vertices())
        throw InvalidArgument("triangle references a missing vertex");
  edge_extrema(vertices_, triangles_, h_, min_edge_);
}

double Mesh::signed_area(int t) const {
  const Point a = vertex(t, 0), b = vertex(t, 1), c = vertex(t, 2);
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

Point Mesh::centroid(int t) const {
  return (vertex(t, 0) + vertex(t, 1) + vertex(t, 2)) / 3.0;
}

std::array<double, 3> Mesh::barycentric(int t, const Point &p) const {
  const Point a = vertex(t, 0), b = vertex(t, 1), c = vertex(t, 2);
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const Point d = p - a;
  const double l1 = (d.x() * (c.y() - a.y()) - (c.x() - a.x()) * d.y()) / det;
  const double l2 = ((b.x() - a.x()) * d.y() - d.x() * (b.y() - a.y())) / det;
  return {1.0 - l1 - l2, l1, l2};
}

int Mesh::ancestor_triangle(int t, const Mesh &ancestor) const {
  const Mesh *cur = this;
  while (cur != &ancestor) {
    if (!cur->parent_mesh_)
      throw InvalidArgument("mesh does not descend from the requested ancestor");
    t = cur->parent_[t];
    cur = cur->parent_mesh_.get();
  }
  return t;
}

bool Mesh::descends_from(const Mesh &ancestor) const {
  for (const Mesh *cur = this; cur; cur = cur->parent_mesh_.get())
    if (cur == &ancestor)
      return true;
  return false;
}

MeshPtr generate_square_mesh(const MeshOptions &opt, const Point &b) {
  const int n = opt.n;
  if (n < 4 || n % 4 != 0)
    throw InvalidArgument("subdivision count must be a positive multiple of 4");
  if (!(opt.jitter >= 0.0) || opt.jitter >= 0.3)
    throw InvalidArgument("jitter must lie in [0, 0.3)");

  auto id = [n](int i, int j) { return j * (n + 1) + i; };

  std::vector<std::array<int, 3>> triangles;
  std::vector<Region> regions;
  triangles.reserve(static_cast<std::size_t>(2 * n * n));
  regions.reserve(triangles.capacity());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1),
                v11 = id(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        triangles.push_back({v00, v10, v11});
        triangles.push_back({v00, v11, v01});
      } else {
        triangles.push_back({v00, v10, v01});
        triangles.push_back({v10, v11, v01});
      }
      const Point center((i + 0.5) / n, (j + 0.5) / n);
      const Region r = opt.omega_in.contains_strictly(center) ? Region::In : Region::Out;
      regions.push_back(r);
      regions.push_back(r);
    }
  }

  std::vector<BoundaryEdge> boundary;
  boundary.reserve(static_cast<std::size_t>(4 * n));
  for (int i = 0; i < n; ++i)
    boundary.push_back({{id(i, 0), id(i + 1, 0)}, label_for(b, Point(0, -1))});
  for (int j = 0; j < n; ++j)
    boundary.push_back({{id(n, j), id(n, j + 1)}, label_for(b, Point(1, 0))});
  for (int i = n; i > 0; --i)
    boundary.push_back({{id(i, n), id(i - 1, n)}, label_for(b, Point(0, 1))});
  for (int j = n; j > 0; --j)
    boundary.push_back({{id(0, j), id(0, j - 1)}, label_for(b, Point(-1, 0))});

  double jitter = opt.jitter;
  for (int attempt = 0; attempt < 2; ++attempt, jitter *= 0.5) {
    auto mesh = std::make_shared<Mesh>(grid_vertices(opt, jitter), triangles,
                                       boundary, regions);
    bool valid = true;
    for (int t = 0; t < mesh->num_triangles() && valid; ++t)
      valid = mesh->signed_area(t) > 0.0;
    if (valid)
      return mesh;
  }
  throw InvalidArgument("jitter produced inverted triangles");
}

MeshPtr uniform_refine(const MeshPtr &coarse) {
  std::vector<Point> vertices = coarse->vertices();
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto [it, inserted] = midpoint.try_emplace({key.first, key.second},
                                               static_cast<int>(vertices.size()));
    if (inserted)
      vertices.push_back(0.5 * (vertices[a] + vertices[b]));
    return it->second;
  };

  std::vector<std::array<int, 3>> triangles;
  std::vector<Region> regions;
  std::vector<int> parent;
  triangles.reserve(4 * coarse->triangles().size());
  for (int t = 0; t < coarse->num_triangles(); ++t) {
    const auto [a, b, c] = coarse->triangles()[t];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    for (const auto &child : {std::array{a, ab, ca}, std::array{ab, b, bc},
                              std::array{ca, bc, c}, std::array{ab, bc, ca}}) {
      triangles.push_back(child);
      regions.push_back(coarse->regions()[t]);
      parent.push_back(t);
    }
  }

  std::vector<BoundaryEdge> boundary;
  for (const auto &e : coarse->boundary_edges()) {
    const int m = mid(e.vertices[0], e.vertices[1]);
    boundary.push_back({{e.vertices[0], m}, e.label});
    boundary.push_back({{m, e.vertices[1]}, e.label});
  }

  auto fine = std::make_shared<Mesh>(std::move(vertices), std::move(triangles),
                                     std::move(boundary), std::move(regions));
  fine->parent_mesh_ = coarse;
  fine->parent_ = std::move(parent);
  return fine;
}

MeshPtr refine(const MeshPtr &mesh, int levels) {
  MeshPtr out = mesh;
  for (int l = 0; l < levels; ++l)
    out = uniform_refine(out);
  return out;
}

Location locate(const Mesh &mesh, const Point &point) {
  const double tol = 1e-12;
  if (point.x() < -tol || point.x() > 1 + tol || point.y() < -tol || point.y() > 1 + tol)
    throw InvalidArgument("point lies outside the unit square");
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto bary = mesh.barycentric(t, point);
    if (bary[0] >= -tol && bary[1] >= -tol && bary[2] >= -tol)
      return {t, bary};
  }
  throw InvalidArgument("point not covered by the mesh");
}

void write_mesh(std::ostream &out, const Mesh &mesh) {
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' '
      << mesh.boundary_edges().size() << '\n';
  out.precision(17);
  for (const auto &v : mesh.vertices())
    out << v.x() << ' ' << v.y() << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto &tri = mesh.triangles()[t];
    out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' '
        << static_cast<int>(mesh.regions()[t]) << '\n';
  }
  for (const auto &e : mesh.boundary_edges())
    out << e.vertices[0] << ' ' << e.vertices[1] << ' '
        << static_cast<int>(e.label) << '\n';
}

MeshPtr read_mesh(std::istream &in) {
  std::size_t nv = 0, nt = 0, nb = 0;
  if (!(in >> nv >> nt >> nb))
    throw InvalidArgument("mesh header must read \"nv nt nb\"");
  std::vector<Point> vertices(nv);
  for (auto &v : vertices)
    if (!(in >> v.x() >> v.y()))
      throw InvalidArgument("truncated vertex block");
  std::vector<std::array<int, 3>> triangles(nt);
  std::vector<Region> regions(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    int tag = 0;
    if (!(in >> triangles[t][0] >> triangles[t][1] >> triangles[t][2] >> tag) ||
        tag < 0 || tag > 1)
      throw InvalidArgument("malformed triangle line");
    regions[t] = static_cast<Region>(tag);
  }
  std::vector<BoundaryEdge> boundary(nb);
  for (auto &e : boundary) {
    int label = 0;
    if (!(in >> e.vertices[0] >> e.vertices[1] >> label) || label < 0 || label > 2)
      throw InvalidArgument("malformed boundary edge line");
    e.label = static_cast<BoundaryLabel>(label);
  }
  return std::make_shared<Mesh>(std::move(vertices), std::move(triangles),
                                std::move(boundary), std::move(regions));
}

} // namespace llstar
