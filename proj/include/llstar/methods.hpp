#pragma once

#include "llstar/linalg.hpp"
#include "llstar/mesh.hpp"
#include "llstar/problem.hpp"
#include "llstar/space.hpp"

#include <optional>
#include <string>

namespace llstar {

enum class MethodKind { LLStar, TwoStage, SingleStage, LLStarInverse };

std::string to_string(MethodKind kind);
MethodKind parse_method(const std::string &name);

enum class BoundaryTreatment { Weak, Strong };

/// Solver path for the (LL*)^{-1} method.
enum class InverseSolver { BlockGMRES, SchurCG };

struct SolverOptions {
  double tol = 1e-6;
  int restart = 30;
  int maxit_gmres = 2000;
  int maxit_cg = 500;
  double omega = 1.0;
  InverseSolver inverse_solver = InverseSolver::BlockGMRES;
  double mass_tol = 1e-12; ///< mass solve of the two-stage method
};

struct ProblemSetup {
  Coefficients coeffs = Coefficients::model(1e4);
  MeshPtr u_mesh;
  int z_refinements = 0; ///< Z mesh = U mesh refined this many times
  int order_u = 1;
  int order_z = 2;
  BoundaryTreatment bc = BoundaryTreatment::Weak;
  CornerPolicy corners = CornerPolicy::Closure;
  bool use_cg_inner = false; ///< CG instead of Cholesky for H
};

/// Spaces, matrices and right-hand side of one configuration.  U is
/// unconstrained; with strong boundary treatment the inflow datum enters
/// through a lifting and is added back to every U-valued solution.
struct DiscreteProblem {
  Coefficients coeffs;
  SpacePtr u_space;
  SpacePtr z_space;
  SparseMatrix L, H, M;
  Vector rhs;
  InnerSolverPtr h_solver;
  std::optional<FEFunction> lifting;
};

DiscreteProblem build_problem(const ProblemSetup &setup);

/// Algebraic result.  u is empty for LL*; z holds the Z-side block (z_star
/// for the two-stage method).
struct AlgebraicSolution {
  Vector u;
  Vector z;
  SolveReport report;
};

AlgebraicSolution llstar_algebraic(const InnerSolver &h, const Vector &rhs);
AlgebraicSolution two_stage_algebraic(const InnerSolver &h, const SparseMatrix &l,
                                      const SparseMatrix &m, const Vector &rhs,
                                      const SolverOptions &opts = {});
AlgebraicSolution single_stage_algebraic(InnerSolverPtr h, const SparseMatrix &hmat,
                                         const SparseMatrix &l, const SparseMatrix &m,
                                         const Vector &rhs,
                                         const SolverOptions &opts = {});
/// Throws InvalidArgument when dim U > dim Z (A is then singular).
AlgebraicSolution llstar_inverse_algebraic(InnerSolverPtr h, const SparseMatrix &hmat,
                                           const SparseMatrix &l, const SparseMatrix &m,
                                           const Vector &rhs,
                                           const SolverOptions &opts = {});

struct MethodSolution {
  MethodKind kind;
  double omega = 0.0;
  std::optional<FEFunction> u; ///< absent for LL*
  std::optional<Vector> z;     ///< absent for the two-stage method
  /// The approximation of psi used for error measurement, on the Z mesh:
  /// L* z for LL*, u otherwise.
  MeshFunction approximation;
  SolveReport report;
};

MethodSolution solve(const DiscreteProblem &problem, MethodKind kind,
                     const SolverOptions &opts = {});

/// x -> sum_i z_i (L* psi_i)(x) on the Z mesh.
MeshFunction adjoint_image(const SpacePtr &z_space, const Coefficients &coeffs,
                           const Vector &z);

} // namespace llstar
