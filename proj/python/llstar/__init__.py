"""Least-squares finite element methods for advection-reaction problems."""

from ._core import (
    Coefficients,
    DiscreteProblem,
    Error,
    InvalidArgument,
    Mesh,
    Solution,
    build_problem,
    infsup,
    run_study,
    solve,
    square_mesh,
)

METHODS = ("llstar", "two_stage", "single_stage", "llstar_inverse")

__all__ = [
    "METHODS",
    "Coefficients",
    "DiscreteProblem",
    "Error",
    "InvalidArgument",
    "Mesh",
    "Solution",
    "build_problem",
    "infsup",
    "run_study",
    "solve",
    "square_mesh",
]
