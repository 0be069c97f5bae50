"""Jacobi-preconditioned conjugate gradients for the SPD stiffness system."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from invfem.errors import (
    AssemblyError,
    ConvergenceError,
    InvalidParameterError,
    NumericalBreakdownError,
)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: Optional[int] = None  # default 20 sqrt(N) + 1000
    preconditioner: str = "diagonal"  # or "none"

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise InvalidParameterError("tolerance must lie in (0, 1)")
        if self.max_iter is not None and self.max_iter < 1:
            raise InvalidParameterError("max_iter must be >= 1")
        if self.preconditioner not in ("diagonal", "none"):
            raise InvalidParameterError(f"unknown preconditioner {self.preconditioner!r}")

    def iteration_limit(self, n: int) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return int(20 * math.sqrt(n)) + 1000


@dataclass
class SolveStats:
    iterations: int
    residual: float  # ||b - A x|| / ||b||
    history: list = field(default_factory=list, repr=False)


def matvec(A, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} times {x.shape}")
    return A @ x


def diagonal_preconditioner(A) -> np.ndarray:
    diag = A.diagonal() if sp.issparse(A) else np.diag(A)
    if np.any(diag <= 0):
        bad = int(np.flatnonzero(diag <= 0)[0])
        raise AssemblyError(f"non-positive diagonal entry at row {bad}: assembly defect")
    return 1.0 / diag


def solve_cg(A, b, cfg: SolverConfig = SolverConfig(), x0=None, callback=None):
    """Solve ``A x = b``; stops when ``||b - A x|| <= tol ||b||``.

    Returns ``(x, SolveStats)``.  ``callback(k, x)`` is called after each
    iteration.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveStats(0, 0.0)
    pinv = diagonal_preconditioner(A) if cfg.preconditioner == "diagonal" else np.ones(n)
    limit = cfg.iteration_limit(n)
    history = []
    k = 0
    # the recursive residual drifts from the true one near 1e-10; restart on the true residual
    for _ in range(4):
        r = b - matvec(A, x)
        res = np.linalg.norm(r) / bnorm
        history.append(res)
        if res <= cfg.tol:
            break
        x, k = _pcg_sweep(A, x, r, pinv, bnorm, cfg.tol, limit, k, history, callback)
    else:
        res = np.linalg.norm(b - matvec(A, x)) / bnorm
    if res > cfg.tol:
        raise ConvergenceError(
            f"CG stagnated at residual {res:.3e} after {k} iterations", iterations=k, residual=res
        )
    return x, SolveStats(k, float(res), history)


def _pcg_sweep(A, x, r, pinv, bnorm, tol, limit, k, history, callback):
    z = pinv * r
    p = z.copy()
    rz = r @ z
    res = np.linalg.norm(r) / bnorm
    while res > tol:
        if k >= limit:
            raise ConvergenceError(
                f"CG did not converge in {limit} iterations (residual {res:.3e})",
                iterations=k,
                residual=res,
            )
        Ap = matvec(A, p)
        pAp = p @ Ap
        if not np.isfinite(pAp) or pAp <= 0:
            raise NumericalBreakdownError(f"CG breakdown at iteration {k}: p.Ap = {pAp}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = pinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        k += 1
        res = np.linalg.norm(r) / bnorm
        if not np.isfinite(res):
            raise NumericalBreakdownError("non-finite residual in CG")
        history.append(res)
        if callback is not None:
            callback(k, x)
    return x, k
