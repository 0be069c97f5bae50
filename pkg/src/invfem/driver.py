"""End-to-end solves and level sweeps."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from invfem.analysis import RunRecord, discrete_energy, energy_error, weighted_l2_error
from invfem.assembly import AssemblyOptions, SparseSystem, assemble_system
from invfem.cases import BenchmarkCase, get_case
from invfem.femspace import DofSpace, FieldPair, build_dof_space
from invfem.geometry import build_big_tetra_decomposition
from invfem.linsolve import SolverConfig, SolveStats, solve_cg
from invfem.meshing import build_mesh_pair

WORKERS_ENV = "INVFEM_WORKERS"


@dataclass(eq=False)
class Solution:
    case: BenchmarkCase
    space: DofSpace
    system: SparseSystem = field(repr=False)
    field: FieldPair = field(repr=False)
    stats: SolveStats
    record: RunRecord


def resolve_case(case, R0: Optional[float] = None) -> BenchmarkCase:
    c = get_case(case) if isinstance(case, str) else case
    if R0 is not None and R0 != c.R0:
        c = replace(c, R0=float(R0))
    return c


def solve_case(
    case,
    level: int,
    mu: float = 0.5,
    gamma: float = 1.0,
    R0: Optional[float] = None,
    options: AssemblyOptions = AssemblyOptions(),
    solver: SolverConfig = SolverConfig(),
    compute_error: bool = True,
) -> Solution:
    """Mesh, assemble, solve and post-process one benchmark at one level."""
    c = resolve_case(case, R0)
    t0 = time.perf_counter()
    d = build_big_tetra_decomposition(c.R0)
    pair = build_mesh_pair(d, level, mu)
    space = build_dof_space(pair, gamma)
    system = assemble_system(space, c, options)
    x, stats = solve_cg(system.A, system.b, solver)
    seconds = time.perf_counter() - t0
    u_h = FieldPair(space, x)
    E_h = discrete_energy(x, system.b)
    e_E = energy_error(E_h, c) if c.energy is not None else float("nan")
    e0 = float("nan")
    if compute_error and c.potential is not None:
        e0 = weighted_l2_error(u_h, c)
    rec = RunRecord(
        case=c.name, L=level, mu=float(mu), gamma=float(gamma), R0=float(c.R0),
        dof=space.n_dofs, h=float(pair.h), e0=e0, energy=E_h, e_energy=e_E,
        cg_iters=stats.iterations, seconds=seconds,
    )
    return Solution(c, space, system, u_h, stats, rec)


def _record_job(args):
    case, level, mu, gamma, R0, options, solver = args
    return solve_case(case, level, mu, gamma, R0, options, solver).record


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def sweep(
    case,
    levels,
    mus=(0.5,),
    gamma: float = 1.0,
    R0: Optional[float] = None,
    options: AssemblyOptions = AssemblyOptions(),
    solver: SolverConfig = SolverConfig(),
    workers: Optional[int] = None,
) -> list:
    """Run every (mu, level) combination; records come back sorted by (mu, L)."""
    jobs = [(case, int(L), float(m), gamma, R0, options, solver) for m in mus for L in levels]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            recs = list(ex.map(_record_job, jobs))
    else:
        recs = [_record_job(j) for j in jobs]
    return sorted(recs, key=lambda r: (r.mu, r.L))


def energy_table(records) -> np.ndarray:
    return np.array([[r.dof, r.h, r.energy, r.e_energy] for r in records])
