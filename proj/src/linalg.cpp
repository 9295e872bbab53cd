#include "llstar/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>

namespace llstar {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void check_square(const LinearOperator &op, const Vector &rhs, const char *what) {
  if (op.rows() != op.cols() || op.rows() != rhs.size())
    throw InvalidArgument(std::string(what) + ": operator and right-hand side sizes differ");
}

} // namespace

LinearOperator LinearOperator::identity(int n) {
  return {n, n, [](const Vector &x, Vector &y) { y = x; }};
}

LinearOperator LinearOperator::scaled_identity(int n, double alpha) {
  return {n, n, [alpha](const Vector &x, Vector &y) { y = alpha * x; }};
}

LinearOperator LinearOperator::from_matrix(SparseMatrix a) {
  auto m = std::make_shared<const SparseMatrix>(std::move(a));
  return {static_cast<int>(m->rows()), static_cast<int>(m->cols()),
          [m](const Vector &x, Vector &y) { y.noalias() = *m * x; }};
}

LinearOperator LinearOperator::from_dense(DenseMatrix a) {
  auto m = std::make_shared<const DenseMatrix>(std::move(a));
  return {static_cast<int>(m->rows()), static_cast<int>(m->cols()),
          [m](const Vector &x, Vector &y) { y.noalias() = *m * x; }};
}

LinearOperator LinearOperator::diagonal(Vector d) {
  const int n = static_cast<int>(d.size());
  return {n, n, [d = std::move(d)](const Vector &x, Vector &y) {
            y = d.cwiseProduct(x);
          }};
}

void LinearOperator::apply(const Vector &x, Vector &y) const {
  if (x.size() != cols_)
    throw InvalidArgument("operator applied to a vector of the wrong length");
  apply_(x, y);
}

Vector LinearOperator::operator()(const Vector &x) const {
  Vector y;
  apply(x, y);
  return y;
}

DenseMatrix to_dense(const LinearOperator &op) {
  DenseMatrix out(op.rows(), op.cols());
  Vector e = Vector::Zero(op.cols()), y;
  for (int j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    op.apply(e, y);
    out.col(j) = y;
    e[j] = 0.0;
  }
  return out;
}

SolveResult cg(const LinearOperator &a, const Vector &rhs,
               const LinearOperator &precond, double tol, int maxit) {
  check_square(a, rhs, "cg");
  const auto start = std::chrono::steady_clock::now();
  SolveResult out;
  auto &rep = out.report;
  const int n = static_cast<int>(rhs.size());
  out.x = Vector::Zero(n);
  Vector r = rhs, z, p, ap;
  precond.apply(r, z);
  double rz = r.dot(z);
  // Residual in the preconditioner norm, sqrt(r^T P r); invariant under
  // rescaling of individual blocks, unlike ||P r||_2.
  const double res0 = std::sqrt(std::max(rz, 0.0));
  rep.residual_history.push_back(res0);
  if (res0 == 0.0) {
    rep.converged = true;
    rep.elapsed = seconds_since(start);
    return out;
  }
  p = z;
  for (int k = 1; k <= maxit; ++k) {
    a.apply(p, ap);
    const double pap = p.dot(ap);
    if (!(pap > 0.0))
      throw IndefiniteOperator("cg: p^T A p = " + std::to_string(pap) +
                               " at iteration " + std::to_string(k));
    const double alpha = rz / pap;
    out.x += alpha * p;
    r -= alpha * ap;
    precond.apply(r, z);
    const double rz_new = r.dot(z);
    const double res = std::sqrt(std::max(rz_new, 0.0));
    rep.residual_history.push_back(res);
    rep.iterations = k;
    if (res <= tol * res0) {
      rep.converged = true;
      break;
    }
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  rep.elapsed = seconds_since(start);
  return out;
}

SolveResult gmres(const LinearOperator &a, const Vector &rhs,
                  const LinearOperator &precond, int restart, double tol,
                  int maxit) {
  check_square(a, rhs, "gmres");
  if (restart < 1)
    throw InvalidArgument("gmres: restart must be positive");
  const auto start = std::chrono::steady_clock::now();
  SolveResult out;
  auto &rep = out.report;
  const int n = static_cast<int>(rhs.size());
  out.x = Vector::Zero(n);
  const double bnorm = rhs.norm();
  rep.residual_history.push_back(bnorm);
  if (bnorm == 0.0) {
    rep.converged = true;
    rep.elapsed = seconds_since(start);
    return out;
  }
  const double target = tol * bnorm;

  DenseMatrix v(n, restart + 1);
  DenseMatrix hess = DenseMatrix::Zero(restart + 1, restart);
  Vector cs(restart), sn(restart), g(restart + 1);
  Vector r, w, pw;
  while (true) {
    a.apply(out.x, r);
    r = rhs - r;
    const double beta = r.norm();
    if (beta <= target) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= maxit)
      break;
    v.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    hess.setZero();
    int cols = 0;
    bool breakdown = false;
    for (int j = 0; j < restart && rep.iterations < maxit; ++j) {
      precond.apply(v.col(j), pw);
      a.apply(pw, w);
      for (int i = 0; i <= j; ++i) {
        hess(i, j) = w.dot(v.col(i));
        w -= hess(i, j) * v.col(i);
      }
      const double hnext = w.norm();
      hess(j + 1, j) = hnext;
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * hess(i, j) + sn[i] * hess(i + 1, j);
        hess(i + 1, j) = -sn[i] * hess(i, j) + cs[i] * hess(i + 1, j);
        hess(i, j) = t;
      }
      const double denom = std::hypot(hess(j, j), hess(j + 1, j));
      cs[j] = denom == 0.0 ? 1.0 : hess(j, j) / denom;
      sn[j] = denom == 0.0 ? 0.0 : hess(j + 1, j) / denom;
      hess(j, j) = denom;
      hess(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++rep.iterations;
      cols = j + 1;
      rep.residual_history.push_back(std::abs(g[j + 1]));
      if (hnext <= 1e-14 * denom) {
        breakdown = true;
        break;
      }
      if (std::abs(g[j + 1]) <= target)
        break;
      v.col(j + 1) = w / hnext;
    }
    // Skip trailing columns with a zero pivot (only possible on breakdown).
    while (cols > 0 && hess(cols - 1, cols - 1) == 0.0)
      --cols;
    if (cols > 0) {
      const Vector y = hess.topLeftCorner(cols, cols)
                           .triangularView<Eigen::Upper>()
                           .solve(g.head(cols));
      precond.apply(v.leftCols(cols) * y, pw);
      out.x += pw;
    }
    if (breakdown || cols == 0) {
      a.apply(out.x, r);
      rep.converged = (rhs - r).norm() <= target;
      break;
    }
  }
  rep.elapsed = seconds_since(start);
  return out;
}

LinearOperator InnerSolver::as_operator() const {
  const int n = size();
  return {n, n, [this](const Vector &x, Vector &y) { solve(x, y); }};
}

namespace {

class CholeskySolver final : public InnerSolver {
public:
  explicit CholeskySolver(const SparseMatrix &h) : n_(static_cast<int>(h.rows())) {
    if (h.rows() != h.cols())
      throw InvalidArgument("Cholesky solver needs a square matrix");
    const Eigen::SparseMatrix<double> colmajor = h;
    llt_.compute(colmajor);
    if (llt_.info() != Eigen::Success)
      throw NotPositiveDefinite(
          "sparse Cholesky met a non-positive pivot (matrix is not SPD)");
  }
  int size() const override { return n_; }
  void solve(const Vector &rhs, Vector &x) const override { x = llt_.solve(rhs); }

private:
  int n_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                       Eigen::AMDOrdering<int>>
      llt_;
};

class CGInnerSolver final : public InnerSolver {
public:
  CGInnerSolver(const SparseMatrix &h, double tol, int maxit)
      : op_(LinearOperator::from_matrix(h)), tol_(tol), maxit_(maxit) {
    Vector d = h.diagonal();
    if ((d.array() <= 0.0).any())
      throw NotPositiveDefinite("non-positive diagonal entry");
    jacobi_ = LinearOperator::diagonal(d.cwiseInverse());
  }
  int size() const override { return op_.rows(); }
  void solve(const Vector &rhs, Vector &x) const override {
    auto res = cg(op_, rhs, jacobi_, tol_, maxit_);
    if (!res.report.converged)
      throw Error("inner CG did not reach its tolerance");
    x = std::move(res.x);
  }

private:
  LinearOperator op_, jacobi_;
  double tol_;
  int maxit_;
};

} // namespace

InnerSolverPtr make_cholesky_solver(const SparseMatrix &h) {
  return std::make_shared<const CholeskySolver>(h);
}

InnerSolverPtr make_cg_solver(const SparseMatrix &h, double tol, int maxit) {
  return std::make_shared<const CGInnerSolver>(h, tol, maxit);
}

Vector inner_solve_H(const SparseMatrix &h, const Vector &rhs) {
  return make_cholesky_solver(h)->solve(rhs);
}

LinearOperator schur_operator(const SparseMatrix &l, InnerSolverPtr inner) {
  auto lp = std::make_shared<const SparseMatrix>(l);
  const int n = static_cast<int>(l.cols());
  return {n, n, [lp, inner](const Vector &v, Vector &y) {
            y.noalias() = lp->transpose() * inner->solve(*lp * v);
          }};
}

Vector schur_A_apply(const SparseMatrix &l, const InnerSolver &inner, const Vector &v) {
  return l.transpose() * inner.solve(l * v);
}

LinearOperator block_operator_inv(const SparseMatrix &h, const SparseMatrix &l) {
  auto hp = std::make_shared<const SparseMatrix>(h);
  auto lp = std::make_shared<const SparseMatrix>(l);
  const int m = static_cast<int>(l.rows()), n = static_cast<int>(l.cols());
  return {m + n, m + n, [hp, lp, m, n](const Vector &x, Vector &y) {
            y.resize(m + n);
            y.head(m).noalias() = *hp * x.head(m) + *lp * x.tail(n);
            y.tail(n).noalias() = lp->transpose() * x.head(m);
          }};
}

LinearOperator block_operator_ss(const SparseMatrix &h, const SparseMatrix &l,
                                 const SparseMatrix &mass, double omega) {
  auto hp = std::make_shared<const SparseMatrix>(h);
  auto lp = std::make_shared<const SparseMatrix>(l);
  auto mp = std::make_shared<const SparseMatrix>(mass);
  const int m = static_cast<int>(l.rows()), n = static_cast<int>(l.cols());
  const double s = omega + 1.0;
  return {m + n, m + n, [hp, lp, mp, m, n, s](const Vector &x, Vector &y) {
            y.resize(m + n);
            y.head(m).noalias() = s * (*hp * x.head(m)) - *lp * x.tail(n);
            y.tail(n).noalias() = *mp * x.tail(n) - lp->transpose() * x.head(m);
          }};
}

LinearOperator block_precond_inv(InnerSolverPtr b, const SparseMatrix &l,
                                 LinearOperator z_inverse) {
  auto lp = std::make_shared<const SparseMatrix>(l);
  const int m = static_cast<int>(l.rows()), n = static_cast<int>(l.cols());
  if (b->size() != m || z_inverse.rows() != n || z_inverse.cols() != n)
    throw InvalidArgument("block_precond_inv: block sizes do not match L");
  return {m + n, m + n, [b, lp, z = std::move(z_inverse), m, n](const Vector &r, Vector &x) {
            const Vector t = b->solve(r.head(m));
            const Vector yu = z(r.tail(n) - lp->transpose() * t);
            x.resize(m + n);
            x.head(m) = t - b->solve(*lp * yu);
            x.tail(n) = yu;
          }};
}

LinearOperator block_precond_ss(InnerSolverPtr b, const SparseMatrix &l,
                                LinearOperator z_inverse, double omega) {
  if (!(omega > 0.0))
    throw InvalidArgument("omega must be positive");
  auto lp = std::make_shared<const SparseMatrix>(l);
  const int m = static_cast<int>(l.rows()), n = static_cast<int>(l.cols());
  if (b->size() != m || z_inverse.rows() != n || z_inverse.cols() != n)
    throw InvalidArgument("block_precond_ss: block sizes do not match L");
  const double inv_s = 1.0 / (omega + 1.0);
  return {m + n, m + n,
          [b, lp, z = std::move(z_inverse), m, n, inv_s](const Vector &r, Vector &x) {
            const Vector t = inv_s * b->solve(r.head(m));
            const Vector yu = z(r.tail(n) + lp->transpose() * t);
            x.resize(m + n);
            x.head(m) = t + inv_s * b->solve(*lp * yu);
            x.tail(n) = yu;
          }};
}

namespace {

Vector generalized_eig(const DenseMatrix &a, const DenseMatrix &m,
                       DenseMatrix *vectors) {
  if (a.rows() != a.cols() || m.rows() != m.cols() || a.rows() != m.rows())
    throw InvalidArgument("generalized eigenproblem needs square matrices of equal size");
  Eigen::LLT<DenseMatrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("right-hand matrix of the eigenproblem is not SPD");
  // Reduce to the standard problem C y = lambda y, C = L^{-1} A L^{-T}.
  DenseMatrix c = llt.matrixL().solve(a);
  c = llt.matrixL().solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(
      c, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw Error("symmetric eigensolver failed");
  if (vectors)
    *vectors = llt.matrixU().solve(eig.eigenvectors());
  return eig.eigenvalues();
}

} // namespace

Vector dense_generalized_eig(const DenseMatrix &a, const DenseMatrix &m,
                             DenseMatrix &vectors) {
  return generalized_eig(a, m, &vectors);
}

Vector dense_generalized_eig(const DenseMatrix &a, const DenseMatrix &m) {
  return generalized_eig(a, m, nullptr);
}

} // namespace llstar
