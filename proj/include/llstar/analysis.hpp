#pragma once

#include "llstar/linalg.hpp"
#include "llstar/problem.hpp"
#include "llstar/space.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace llstar {

/// Segments along which the exact solution has layers: the two shadow
/// lines leaving the inner rectangle's upstream corners along b, and the
/// two faces through which characteristics enter the rectangle.
struct Segment {
  Point a, b;
};
std::vector<Segment> layer_lines(const Coefficients &coeffs);

double distance_to_segment(const Point &p, const Segment &s);

/// True when the segment meets the closed triangle t.
bool segment_meets_triangle(const Mesh &mesh, int t, const Segment &s);

struct ErrorOptions {
  int quad_degree = 0;     ///< 0: 2 k + 4 from the caller's order hint
  int layer_subdivision = 2; ///< midpoint refinements of layer elements
  /// When positive, only elements farther than this from every layer line
  /// contribute.
  double exclude_layer_distance = 0.0;
};

/// ||u - u_ref||_{L2} integrated over u's mesh.
double l2_distance(const MeshFunction &u, const std::function<double(const Point &)> &ref,
                   const Coefficients &coeffs, const ErrorOptions &opts);

/// ||u - psi||_{L2} with psi from exact_solution; quadrature degree
/// defaults to 2 order + 4.
double l2_error(const MeshFunction &u, const Coefficients &coeffs, int order,
                ErrorOptions opts = {});

/// rate_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i), i >= 1.  A zero error
/// yields +infinity.
std::vector<double> compute_eoc(const std::vector<double> &errors,
                                const std::vector<double> &hs);

/// L2 projection onto `space` (must be unconstrained) of a pointwise
/// function, with elevated quadrature and layer subdivision.
FEFunction l2_projection(const SpacePtr &space,
                         const std::function<double(const Point &)> &f,
                         const Coefficients &coeffs, const ErrorOptions &opts = {});

/// A = L^T H^{-1} L formed densely.
DenseMatrix dense_schur(const SparseMatrix &l, const SparseMatrix &h);

struct InfSupReport {
  double lambda_min = 0.0;
  double c_i = 0.0;
  double supinf = 0.0;
  int dim_u = 0, dim_z = 0;
  /// Generalized eigenvector for lambda_min, M-normalized.
  Vector v_min;
  /// max ||v - Pi v|| / ||v|| over the probes, each evaluated as
  /// ||v||^2 - 2 v^T L^T z + z^T H z with H z = L v.
  double probe_sup = 0.0;
};

/// Largest dim U for which the dense eigenproblem is attempted.
inline constexpr int max_dense_dimension = 4000;

/// Smallest eigenvalue of A v = lambda M v and the derived constants.
/// Probes are the unit vectors plus `random_probes` Gaussian vectors.
InfSupReport infsup_diagnostic(const SparseMatrix &l, const SparseMatrix &h,
                               const SparseMatrix &m, int random_probes = 500,
                               std::uint64_t seed = 1);

/// Worst signed violation of c_I^2 v^T M v <= v^T A v <= v^T M v over
/// `trials` random vectors scaled to v^T M v = 1.
double spectral_sandwich_check(const SparseMatrix &l, const SparseMatrix &h,
                               const SparseMatrix &m, int trials,
                               std::uint64_t seed = 2);

/// Same with the dense A, M and c_I supplied.
double spectral_sandwich_check(const DenseMatrix &a, const DenseMatrix &m,
                               double c_i, int trials, std::uint64_t seed = 2);

/// ||v_h - L* z_h|| and ||v_h|| by quadrature over the Z mesh, where z_h
/// solves H z = L v.  This is the projection defect of v computed from the
/// functions rather than the matrices.
struct ProjectionDefect {
  double defect = 0.0;
  double norm_v = 0.0;
  double norm_projection = 0.0;
};
ProjectionDefect projection_defect(const SpacePtr &u_space, const SpacePtr &z_space,
                                   const Coefficients &coeffs, const InnerSolver &h,
                                   const SparseMatrix &l, const Vector &v);

} // namespace llstar
