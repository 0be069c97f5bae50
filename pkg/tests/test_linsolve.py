import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from invfem.assembly import assemble_system
from invfem.cases import get_case
from invfem.errors import AssemblyError, ConvergenceError, InvalidParameterError
from invfem.linsolve import SolverConfig, diagonal_preconditioner, matvec, solve_cg


@pytest.fixture(scope="module")
def system3(space_cache):
    return assemble_system(space_cache(3), get_case("sphere-uniform"))


def test_identity_one_iteration():
    b = np.array([1.0, -2.0, 3.0])
    x, stats = solve_cg(sp.identity(3, format="csr"), b)
    assert np.allclose(x, b) and stats.iterations == 1


def test_two_by_two_example():
    A = np.array([[4.0, 1.0], [1.0, 3.0]])
    x, _ = solve_cg(A, np.array([1.0, 2.0]), SolverConfig(tol=1e-14))
    assert np.allclose(x, [1 / 11, 7 / 11], atol=1e-12)


def test_diagonal_system():
    x, stats = solve_cg(np.diag([2.0, 4.0]), np.array([1.0, 1.0]))
    assert np.allclose(x, [0.5, 0.25])
    # Jacobi preconditioning makes a diagonal system trivial
    assert stats.iterations == 1


def test_zero_rhs_returns_zero_without_iterating():
    x, stats = solve_cg(np.eye(4), np.zeros(4))
    assert np.all(x == 0.0) and stats.iterations == 0


def test_dense_oracle():
    A = np.array([[4.0, -1.0, 0.5], [-1.0, 3.0, -0.2], [0.5, -0.2, 2.0]])
    b = np.array([1.0, 0.0, -1.0])
    x, _ = solve_cg(A, b, SolverConfig(tol=1e-13))
    assert np.allclose(x, np.linalg.solve(A, b), atol=1e-12)


@given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=2**31 - 1))
def test_random_spd_matches_direct_solve(n, seed):
    r = np.random.default_rng(seed)
    Q = r.normal(size=(n, n))
    A = Q @ Q.T + n * np.eye(n)
    b = r.normal(size=n)
    x, stats = solve_cg(A, b, SolverConfig(tol=1e-12))
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)
    assert stats.residual <= 1e-12


def test_matvec_dimension_mismatch():
    with pytest.raises(ValueError):
        matvec(np.eye(3), np.ones(4))


def test_non_positive_diagonal_is_assembly_defect():
    with pytest.raises(AssemblyError):
        diagonal_preconditioner(np.diag([1.0, 0.0, 2.0]))
    with pytest.raises(AssemblyError):
        solve_cg(np.diag([1.0, -1.0]), np.ones(2))


@pytest.mark.parametrize("kwargs", [{"tol": 0.0}, {"tol": 1.5}, {"max_iter": 0}, {"preconditioner": "ilu"}])
def test_invalid_config(kwargs):
    with pytest.raises(InvalidParameterError):
        SolverConfig(**kwargs)


def test_default_iteration_limit():
    assert SolverConfig().iteration_limit(10000) == 3000


def test_iteration_cap_raises(system3):
    with pytest.raises(ConvergenceError) as info:
        solve_cg(system3.A, system3.b, SolverConfig(max_iter=5))
    assert info.value.iterations == 5


def test_fem_system_residual(system3):
    x, stats = solve_cg(system3.A, system3.b)
    assert np.linalg.norm(system3.b - system3.A @ x) <= 1e-10 * np.linalg.norm(system3.b)
    assert stats.residual <= 1e-10


def test_preconditioner_does_not_hurt(system3):
    _, pre = solve_cg(system3.A, system3.b)
    _, plain = solve_cg(system3.A, system3.b, SolverConfig(preconditioner="none"))
    assert pre.iterations <= plain.iterations


def test_energy_norm_error_monotone(system3):
    A, b = system3.A, system3.b
    x_star, _ = solve_cg(A, b, SolverConfig(tol=1e-13))
    errs = []

    def cb(k, x):
        e = x - x_star
        errs.append(e @ (A @ e))

    solve_cg(A, b, callback=cb)
    errs = np.array(errs)
    assert len(errs) > 10
    # CG minimizes the A-norm error over growing Krylov spaces
    assert np.all(np.diff(errs) <= 1e-14 * errs[0])


def test_unique_solution_from_different_starts(system3, rng):
    A, b = system3.A, system3.b
    x1, _ = solve_cg(A, b, SolverConfig(tol=1e-12))
    x2, _ = solve_cg(A, b, SolverConfig(tol=1e-12), x0=rng.normal(size=len(b)))
    assert np.allclose(x1, x2, atol=1e-8 * np.abs(x1).max())
