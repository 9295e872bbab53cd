#pragma once

#include "llstar/types.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace llstar {

/// Matrix-free linear map R^cols -> R^rows.
class LinearOperator {
public:
  using Apply = std::function<void(const Vector &, Vector &)>;

  LinearOperator() = default;
  LinearOperator(int rows, int cols, Apply apply)
      : rows_(rows), cols_(cols), apply_(std::move(apply)) {}

  static LinearOperator identity(int n);
  static LinearOperator scaled_identity(int n, double alpha);
  /// Holds a copy of `a`.
  static LinearOperator from_matrix(SparseMatrix a);
  static LinearOperator from_dense(DenseMatrix a);
  static LinearOperator diagonal(Vector d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  void apply(const Vector &x, Vector &y) const;
  Vector operator()(const Vector &x) const;

private:
  int rows_ = 0, cols_ = 0;
  Apply apply_;
};

/// Dense representation obtained by applying `op` to unit vectors.
DenseMatrix to_dense(const LinearOperator &op);

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
  double elapsed = 0.0; ///< seconds
};

struct SolveResult {
  Vector x;
  SolveReport report;
};

/// Raised by CG when the operator shows p^T A p <= 0.
class IndefiniteOperator : public Error {
public:
  using Error::Error;
};

/// Preconditioned CG from a zero initial guess.  Convergence is measured
/// on the preconditioned residual norm sqrt(r^T P r), relative to its
/// initial value.
SolveResult cg(const LinearOperator &a, const Vector &rhs,
               const LinearOperator &precond, double tol, int maxit = 500);

/// Right-preconditioned restarted GMRES(restart) from a zero initial
/// guess.  `iterations` counts inner (Arnoldi) steps over all cycles; the
/// residual is the true residual, relative to ||rhs||.
SolveResult gmres(const LinearOperator &a, const Vector &rhs,
                  const LinearOperator &precond, int restart, double tol,
                  int maxit = 2000);

/// Solver for an SPD matrix (H or a preconditioner B).
class InnerSolver {
public:
  virtual ~InnerSolver() = default;
  virtual int size() const = 0;
  virtual void solve(const Vector &rhs, Vector &x) const = 0;
  Vector solve(const Vector &rhs) const {
    Vector x;
    solve(rhs, x);
    return x;
  }
  LinearOperator as_operator() const;
};

using InnerSolverPtr = std::shared_ptr<const InnerSolver>;

/// Sparse Cholesky with fill-reducing ordering; factorized once.
/// Throws NotPositiveDefinite on a non-positive pivot.
InnerSolverPtr make_cholesky_solver(const SparseMatrix &h);

/// Jacobi-preconditioned CG to a relative residual of `tol`; for runs where
/// the factor does not fit in memory.
InnerSolverPtr make_cg_solver(const SparseMatrix &h, double tol = 1e-12,
                              int maxit = 20000);

class NotPositiveDefinite : public Error {
public:
  using Error::Error;
};

/// Solves H x = rhs with a one-off factorization.
Vector inner_solve_H(const SparseMatrix &h, const Vector &rhs);

/// v -> L^T B^{-1} L v.
LinearOperator schur_operator(const SparseMatrix &l, InnerSolverPtr inner);
Vector schur_A_apply(const SparseMatrix &l, const InnerSolver &inner, const Vector &v);

/// [H L; L^T 0] acting on (z, u).
LinearOperator block_operator_inv(const SparseMatrix &h, const SparseMatrix &l);

/// [(omega+1) H, -L; -L^T, M] acting on (z, u).
LinearOperator block_operator_ss(const SparseMatrix &h, const SparseMatrix &l,
                                 const SparseMatrix &m, double omega);

/// Inverse of the block factorization
///   [I 0; L^T B^{-1} I] [B 0; 0 Z] [I B^{-1} L; 0 I]
/// given the actions of B^{-1} and Z^{-1}.
LinearOperator block_precond_inv(InnerSolverPtr b, const SparseMatrix &l,
                                 LinearOperator z_inverse);

/// Inverse of
///   [I 0; -L^T B_w^{-1} I] [B_w 0; 0 Z] [I -B_w^{-1} L; 0 I],  B_w = (omega+1) B,
/// given the actions of B^{-1} and Z^{-1}.  SPD when B and Z are.
LinearOperator block_precond_ss(InnerSolverPtr b, const SparseMatrix &l,
                                LinearOperator z_inverse, double omega);

/// Eigenvalues of A v = lambda M v in ascending order.  Throws
/// NotPositiveDefinite when M is not SPD.
Vector dense_generalized_eig(const DenseMatrix &a, const DenseMatrix &m);

/// Same, also returning M-orthonormal eigenvectors as columns.
Vector dense_generalized_eig(const DenseMatrix &a, const DenseMatrix &m,
                             DenseMatrix &vectors);

} // namespace llstar
