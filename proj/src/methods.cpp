#include "llstar/methods.hpp"
#include "llstar/assembly.hpp"

#include <chrono>

namespace llstar {

std::string to_string(MethodKind kind) {
  switch (kind) {
  case MethodKind::LLStar:
    return "llstar";
  case MethodKind::TwoStage:
    return "two_stage";
  case MethodKind::SingleStage:
    return "single_stage";
  case MethodKind::LLStarInverse:
    return "llstar_inverse";
  }
  return "unknown";
}

MethodKind parse_method(const std::string &name) {
  for (auto k : {MethodKind::LLStar, MethodKind::TwoStage, MethodKind::SingleStage,
                 MethodKind::LLStarInverse})
    if (to_string(k) == name)
      return k;
  throw InvalidArgument("unknown method '" + name +
                        "' (expected llstar, two_stage, single_stage, llstar_inverse)");
}

DiscreteProblem build_problem(const ProblemSetup &setup) {
  if (!setup.u_mesh)
    throw InvalidArgument("problem setup has no mesh");
  const MeshPtr z_mesh = refine(setup.u_mesh, setup.z_refinements);
  DiscreteProblem p{setup.coeffs,
                    build_space(setup.u_mesh, setup.order_u, TraceConstraint::None),
                    build_space(z_mesh, setup.order_z, TraceConstraint::Outflow,
                                setup.corners),
                    {}, {}, {}, {}, {}, std::nullopt};
  p.L = assemble_L(*p.u_space, *p.z_space, p.coeffs);
  p.H = assemble_H(*p.z_space, p.coeffs);
  p.M = assemble_mass(*p.u_space);
  if (setup.bc == BoundaryTreatment::Weak) {
    p.rhs = assemble_rhs_weak(*p.z_space, p.coeffs);
  } else {
    p.lifting = inflow_lifting(p.u_space, p.coeffs);
    p.rhs = assemble_rhs_lifted(*p.z_space, *p.lifting, p.coeffs);
  }
  p.h_solver = setup.use_cg_inner ? make_cg_solver(p.H) : make_cholesky_solver(p.H);
  return p;
}

AlgebraicSolution llstar_algebraic(const InnerSolver &h, const Vector &rhs) {
  const auto start = std::chrono::steady_clock::now();
  AlgebraicSolution out;
  out.z = h.solve(rhs);
  out.report.converged = true;
  out.report.residual_history.push_back(rhs.norm());
  out.report.elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

AlgebraicSolution two_stage_algebraic(const InnerSolver &h, const SparseMatrix &l,
                                      const SparseMatrix &m, const Vector &rhs,
                                      const SolverOptions &opts) {
  AlgebraicSolution out;
  out.z = h.solve(rhs);
  const Vector f = l.transpose() * out.z;
  const Vector diag = m.diagonal();
  auto res = cg(LinearOperator::from_matrix(m), f,
                LinearOperator::diagonal(diag.cwiseInverse()), opts.mass_tol,
                std::max(opts.maxit_cg, static_cast<int>(m.rows())));
  out.u = std::move(res.x);
  out.report = std::move(res.report);
  return out;
}

AlgebraicSolution single_stage_algebraic(InnerSolverPtr h, const SparseMatrix &hmat,
                                         const SparseMatrix &l, const SparseMatrix &m,
                                         const Vector &rhs, const SolverOptions &opts) {
  const int nz = static_cast<int>(l.rows()), nu = static_cast<int>(l.cols());
  Vector b = Vector::Zero(nz + nu);
  b.head(nz) = opts.omega * rhs;
  const auto op = block_operator_ss(hmat, l, m, opts.omega);
  const auto pc = block_precond_ss(std::move(h), l, LinearOperator::identity(nu), opts.omega);
  auto res = cg(op, b, pc, opts.tol, opts.maxit_cg);
  AlgebraicSolution out;
  out.z = res.x.head(nz);
  out.u = res.x.tail(nu);
  out.report = std::move(res.report);
  return out;
}

AlgebraicSolution llstar_inverse_algebraic(InnerSolverPtr h, const SparseMatrix &hmat,
                                           const SparseMatrix &l, const SparseMatrix &m,
                                           const Vector &rhs, const SolverOptions &opts) {
  const int nz = static_cast<int>(l.rows()), nu = static_cast<int>(l.cols());
  if (nu > nz)
    throw InvalidArgument("(LL*)^-1 needs dim U <= dim Z; got dim U = " +
                          std::to_string(nu) + ", dim Z = " + std::to_string(nz));
  AlgebraicSolution out;
  if (opts.inverse_solver == InverseSolver::BlockGMRES) {
    Vector b = Vector::Zero(nz + nu);
    b.head(nz) = rhs;
    const auto op = block_operator_inv(hmat, l);
    const auto pc = block_precond_inv(h, l, LinearOperator::scaled_identity(nu, -1.0));
    auto res = gmres(op, b, pc, opts.restart, opts.tol, opts.maxit_gmres);
    out.z = res.x.head(nz);
    out.u = res.x.tail(nu);
    out.report = std::move(res.report);
  } else {
    const Vector f = l.transpose() * h->solve(rhs);
    const auto mass = make_cholesky_solver(m);
    auto res = cg(schur_operator(l, h), f, mass->as_operator(), opts.tol, opts.maxit_cg);
    out.u = std::move(res.x);
    out.z = h->solve(rhs - l * out.u);
    out.report = std::move(res.report);
  }
  return out;
}

MeshFunction adjoint_image(const SpacePtr &z_space, const Coefficients &coeffs,
                           const Vector &z) {
  return {z_space->mesh_ptr(),
          [z_space, coeffs, z](int t, const std::array<double, 3> &bary) {
            const auto values = apply_adjoint_to_basis(*z_space, coeffs, t, bary);
            const auto nodes = z_space->element_nodes(t);
            double sum = 0.0;
            for (std::size_t n = 0; n < nodes.size(); ++n) {
              const int dof = z_space->dof_of_node(nodes[n]);
              if (dof >= 0)
                sum += z[dof] * values[n];
            }
            return sum;
          }};
}

namespace {

// U-valued solution with the lifting added back.
FEFunction u_function(const DiscreteProblem &p, Vector u) {
  if (p.lifting)
    u += p.lifting->coefficients();
  return {p.u_space, std::move(u)};
}

} // namespace

MethodSolution solve(const DiscreteProblem &p, MethodKind kind, const SolverOptions &opts) {
  AlgebraicSolution alg;
  switch (kind) {
  case MethodKind::LLStar:
    alg = llstar_algebraic(*p.h_solver, p.rhs);
    break;
  case MethodKind::TwoStage:
    alg = two_stage_algebraic(*p.h_solver, p.L, p.M, p.rhs, opts);
    break;
  case MethodKind::SingleStage:
    alg = single_stage_algebraic(p.h_solver, p.H, p.L, p.M, p.rhs, opts);
    break;
  case MethodKind::LLStarInverse:
    alg = llstar_inverse_algebraic(p.h_solver, p.H, p.L, p.M, p.rhs, opts);
    break;
  }

  const MeshPtr &z_mesh = p.z_space->mesh_ptr();
  if (kind == MethodKind::LLStar) {
    MeshFunction approx = adjoint_image(p.z_space, p.coeffs, alg.z);
    if (p.lifting) {
      const MeshFunction g = as_mesh_function(*p.lifting).on_refinement(z_mesh);
      approx = MeshFunction(z_mesh, [approx, g](int t, const std::array<double, 3> &b) {
        return approx.value(t, b) + g.value(t, b);
      });
    }
    return {kind, 0.0, std::nullopt, std::move(alg.z), std::move(approx),
            std::move(alg.report)};
  }
  FEFunction u = u_function(p, std::move(alg.u));
  MeshFunction approx = as_mesh_function(u).on_refinement(z_mesh);
  std::optional<Vector> z;
  if (kind != MethodKind::TwoStage)
    z = std::move(alg.z);
  return {kind, kind == MethodKind::SingleStage ? opts.omega : 0.0, std::move(u),
          std::move(z), std::move(approx), std::move(alg.report)};
}

} // namespace llstar
