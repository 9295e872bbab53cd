#pragma once

#include "llstar/problem.hpp"
#include "llstar/space.hpp"
#include "llstar/types.hpp"

#include <functional>
#include <iosfwd>

namespace llstar {

/// Default element quadrature degree for a (U, Z) pair.
int default_quadrature_degree(int order_u, int order_z);

/// L_ij = <phi_j, L* psi_i>, rows indexed by Z dofs, columns by U dofs.
/// The Z mesh must equal the U mesh or be obtained from it by uniform
/// refinement; integration runs over the Z mesh.
SparseMatrix assemble_L(const FunctionSpace &u_space, const FunctionSpace &z_space,
                        const Coefficients &coeffs, int quad_degree = 0);

/// H_ij = <L* psi_j, L* psi_i>.
SparseMatrix assemble_H(const FunctionSpace &z_space, const Coefficients &coeffs,
                        int quad_degree = 0);

/// M_ij = <phi_j, phi_i>.
SparseMatrix assemble_mass(const FunctionSpace &space, int quad_degree = 0);

/// r_i = <f, psi_i>.
Vector assemble_rhs_strong(const FunctionSpace &z_space,
                           const std::function<double(const Point &)> &f,
                           int quad_degree = 0);

/// r_i = <r, psi_i> - int_{inflow} (b.n) g psi_i ds.
Vector assemble_rhs_weak(const FunctionSpace &z_space, const Coefficients &coeffs,
                         int quad_degree = 0);

/// Interpolant of g at the inflow boundary nodes of `space` (zero at all
/// other nodes).  `space` must be unconstrained.
FEFunction inflow_lifting(const SpacePtr &space, const Coefficients &coeffs);

/// r_i = <r - L g_h, psi_i> for a lifting g_h on a mesh that z_space's mesh
/// descends from.
Vector assemble_rhs_lifted(const FunctionSpace &z_space, const FEFunction &lifting,
                           const Coefficients &coeffs, int quad_degree = 0);

/// max |A - A^T| / max |A| (0 for the zero matrix).
double symmetry_defect(const SparseMatrix &a);

/// Coordinate text format, one "row col value" line per stored entry,
/// 1-based indices, preceded by a "rows cols nnz" header.
void write_coordinate(std::ostream &out, const SparseMatrix &a);

} // namespace llstar
