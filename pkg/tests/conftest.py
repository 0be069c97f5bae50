import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from invfem.driver import solve_case
from invfem.femspace import build_dof_space
from invfem.geometry import build_big_tetra_decomposition
from invfem.meshing import build_mesh_pair

settings.register_profile("invfem", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("invfem")


@pytest.fixture(scope="session")
def decomp():
    return build_big_tetra_decomposition(4.0)


@pytest.fixture(scope="session")
def pair_cache(decomp):
    cache = {}

    def get(L, mu=0.5):
        key = (L, mu)
        if key not in cache:
            cache[key] = build_mesh_pair(decomp, L, mu)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def space_cache(pair_cache):
    cache = {}

    def get(L, mu=0.5, gamma=1.0):
        key = (L, mu, gamma)
        if key not in cache:
            cache[key] = build_dof_space(pair_cache(L, mu), gamma)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def solved():
    """Memoised ``solve_case`` for small levels shared across test modules."""
    cache = {}

    def get(case, L, mu=0.5, **kw):
        key = (case, L, mu, tuple(sorted(kw.items())))
        if key not in cache:
            cache[key] = solve_case(case, L, mu, **kw)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LOG = []


@pytest.fixture(scope="session")
def criterion_log():
    """Append ``(criterion, label, ok, detail)``; printed in the terminal summary."""
    return ACCEPTANCE_LOG


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for crit, label, ok, detail in sorted(ACCEPTANCE_LOG, key=lambda t: t[0]):
        terminalreporter.write_line(f"criterion {crit:>2} {'PASS' if ok else 'FAIL'}  {label}: {detail}")
