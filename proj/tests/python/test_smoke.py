import math

import numpy as np
import pytest
import scipy.sparse

import llstar


@pytest.fixture(scope="module")
def coeffs():
    return llstar.Coefficients.model(10.0)


@pytest.fixture(scope="module")
def problem(coeffs):
    mesh = llstar.square_mesh(8, coeffs)
    return llstar.build_problem(coeffs, mesh, order_u=1, order_z=2)


def test_model_coefficients(coeffs):
    bx, by = coeffs.b
    assert bx == pytest.approx(math.cos(3 * math.pi / 16))
    assert by == pytest.approx(math.sin(3 * math.pi / 16))
    assert coeffs.sigma_in == 10.0
    assert coeffs.sigma_out == 1e-4


def test_exact_solution_on_inflow_and_in_shadow(coeffs):
    pts = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert np.allclose(coeffs.exact_solution(pts), 1.0)
    # Backward from (0.6, 0.749) the characteristic runs 0.35 in x inside the
    # inner square, then 0.25 in x outside it before leaving through x = 0.
    c = math.cos(3 * math.pi / 16)
    val = coeffs.exact_solution(np.array([[0.6, 0.749]]))[0]
    assert val == pytest.approx(math.exp(-10.0 * 0.35 / c - 1e-4 * 0.25 / c), rel=1e-12)


def test_mesh_arrays(coeffs):
    mesh = llstar.square_mesh(4, coeffs, jitter=0.0)
    assert mesh.vertices.shape == (25, 2)
    assert mesh.triangles.shape == (32, 3)
    assert mesh.refine().num_triangles == 128


def test_matrices_are_consistent(problem):
    L, H, M = problem.L, problem.H, problem.M
    assert scipy.sparse.issparse(L)
    assert L.shape == (problem.dim_z, problem.dim_u)
    assert H.shape == (problem.dim_z, problem.dim_z)
    assert abs(H - H.T).max() < 1e-12
    assert abs(M - M.T).max() < 1e-12
    # P1 mass matrix entries sum to the area of the unit square.
    assert M.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("method", llstar.METHODS)
def test_every_method_solves(problem, coeffs, method):
    sol = llstar.solve(problem, method, tol=1e-10)
    assert sol.converged
    assert sol.method == method
    err = sol.l2_error(coeffs, 1)
    assert 0.0 < err < 0.2
    vals = sol(np.array([[0.1, 0.1], [0.9, 0.9]]))
    assert vals.shape == (2,)


def test_unknown_method_raises(problem):
    with pytest.raises(ValueError):
        llstar.solve(problem, "galerkin")


def test_infsup_constant_in_unit_interval(problem):
    r = llstar.infsup(problem, random_probes=10)
    assert 0.0 < r["c_i"] <= 1.0
    assert r["lambda_min"] == pytest.approx(r["c_i"] ** 2)
    assert r["supinf"] == pytest.approx(math.sqrt(1.0 - r["lambda_min"]), abs=1e-12)
    assert r["probe_sup"] <= r["supinf"] + 1e-8


def test_run_study_from_text():
    records = llstar.run_study(
        "study = convergence\nmethods = llstar, two_stage\nsigma_in = 10\n"
        "levels = 4, 8\norder_u = 1\norder_z = 2\n"
    )
    assert len(records) == 4
    assert {r["method"] for r in records} == {"llstar", "two_stage"}
    assert all(r["status"] == "ok" for r in records)


def test_bad_config_raises():
    with pytest.raises(ValueError):
        llstar.run_study("colour = blue\n")
