"""Benchmark magnetizations, their closed-form potentials and a volume-integral oracle.

Three configurations are registered by name:

``sphere-uniform``  ball of radius 0.5, ``M = (0, 0, 1)``
``sphere-vortex``   ball of radius 0.5, ``M = cos(theta) e_phi + sin(theta) e_theta``
``cube-uniform``    unit cube ``[-1/2, 1/2]^3``, ``M = (0, 0, 1)``

The potential solves ``Laplace(u) = div(M chi_Omega)`` with decay at
infinity, i.e. ``int grad u . grad v = int_Omega M . grad v`` for all test
functions ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import roots_legendre

from invfem.errors import (
    DomainError,
    InvalidParameterError,
    ToleranceNotMetError,
    UnsupportedForCaseError,
)


@dataclass(frozen=True)
class Ball:
    radius: float

    @property
    def bounding_radius(self) -> float:
        return self.radius

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * np.pi * self.radius**3

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x**2).sum(-1) < self.radius**2

    def may_intersect_ball(self, center, rad) -> np.ndarray:
        return np.linalg.norm(center, axis=-1) - rad < self.radius

    def boundary_distance(self, x) -> np.ndarray:
        return np.abs(np.linalg.norm(x, axis=-1) - self.radius)


@dataclass(frozen=True)
class Cube:
    side: float

    @property
    def bounding_radius(self) -> float:
        return 0.5 * self.side * np.sqrt(3.0)

    @property
    def volume(self) -> float:
        return self.side**3

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (np.abs(x) < 0.5 * self.side).all(-1)

    def _outside_distance(self, x):
        excess = np.maximum(np.abs(x) - 0.5 * self.side, 0.0)
        return np.linalg.norm(excess, axis=-1)

    def may_intersect_ball(self, center, rad) -> np.ndarray:
        return self._outside_distance(np.asarray(center)) < rad

    def boundary_distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = self.contains(x)
        inner = (0.5 * self.side - np.abs(x)).min(-1)
        return np.where(inside, inner, self._outside_distance(x))


@dataclass(frozen=True)
class BenchmarkCase:
    """Magnetized body with optional closed-form potential and energy.

    ``dipolar`` marks potentials of the form ``f(|x|) cos(theta)``, for which
    ``f(rho) = potential((0, 0, rho))``.
    """

    name: str
    domain: object
    magnetization: Callable
    divergence: Callable
    potential: Optional[Callable]
    energy: Optional[float]
    R0: float
    uniform_M: Optional[np.ndarray] = None
    dipolar: bool = False

    def indicator(self, x) -> np.ndarray:
        return self.domain.contains(x).astype(float)

    def require_potential(self):
        if self.potential is None:
            raise UnsupportedForCaseError(f"no closed-form potential for case {self.name!r}")
        return self.potential

    def require_energy(self) -> float:
        if self.energy is None:
            raise UnsupportedForCaseError(f"no exact energy for case {self.name!r}")
        return self.energy


def _uniform(m0):
    m0 = np.asarray(m0, dtype=float)

    def M(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(m0, x.shape).copy()

    return M


def _zero_divergence(x):
    return np.zeros(np.asarray(x).shape[:-1])


def case_uniform_ball(r0: float = 0.5, R0: float = 4.0) -> BenchmarkCase:
    m0 = np.array([0.0, 0.0, 1.0])

    def u(x):
        x = np.asarray(x, dtype=float)
        rho = np.linalg.norm(x, axis=-1)
        mx = x @ m0
        with np.errstate(divide="ignore", invalid="ignore"):
            out = r0**3 / 3.0 * mx / rho**3
        return np.where(rho < r0, mx / 3.0, out)

    return BenchmarkCase(
        "sphere-uniform",
        Ball(r0),
        _uniform(m0),
        _zero_divergence,
        u,
        2.0 * np.pi / 9.0 * r0**3,
        R0,
        uniform_M=m0,
        dipolar=True,
    )


def vortex_magnetization(x) -> np.ndarray:
    """``cos(theta) e_phi + sin(theta) e_theta``.

    On the polar axis ``phi = 0`` is used, giving ``(0, +-1, 0)``.
    """
    x = np.asarray(x, dtype=float)
    X, Y, Z = x[..., 0], x[..., 1], x[..., 2]
    s = np.hypot(X, Y)
    rho = np.sqrt(s**2 + Z**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ct = np.where(rho > 0, Z / rho, 1.0)
        st = np.where(rho > 0, s / rho, 0.0)
        cp = np.where(s > 0, X / s, 1.0)
        sp = np.where(s > 0, Y / s, 0.0)
    e_phi = np.stack([-sp, cp, np.zeros_like(cp)], axis=-1)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    return ct[..., None] * e_phi + st[..., None] * e_theta


def case_vortex_ball(r0: float = 0.5, R0: float = 6.0) -> BenchmarkCase:
    def u(x):
        x = np.asarray(x, dtype=float)
        z = x[..., 2]
        rho = np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = -2.0 * z / 9.0 + 2.0 * z / 3.0 * np.log(rho / r0)
            outer = -2.0 * r0**3 * z / (9.0 * rho**3)
        inner = np.where(rho > 0, inner, 0.0)
        return np.where(rho <= r0, inner, outer)

    def div(x):
        x = np.asarray(x, dtype=float)
        rho2 = (x**2).sum(-1)
        if np.any(rho2 == 0):
            raise DomainError("div M of the vortex ball is singular at the origin")
        return 2.0 * x[..., 2] / rho2

    return BenchmarkCase(
        "sphere-vortex",
        Ball(r0),
        vortex_magnetization,
        div,
        u,
        16.0 * np.pi / 81.0 * r0**3,
        R0,
        dipolar=True,
    )


def case_uniform_cube(side: float = 1.0, R0: float = 4.0) -> BenchmarkCase:
    return BenchmarkCase(
        "cube-uniform",
        Cube(side),
        _uniform([0.0, 0.0, 1.0]),
        _zero_divergence,
        None,
        1.0 / 6.0,
        R0,
        uniform_M=np.array([0.0, 0.0, 1.0]),
    )


CASES = {
    "sphere-uniform": case_uniform_ball,
    "sphere-vortex": case_vortex_ball,
    "cube-uniform": case_uniform_cube,
}


def get_case(name: str, **kwargs) -> BenchmarkCase:
    try:
        factory = CASES[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown case {name!r}; choose from {', '.join(sorted(CASES))}"
        ) from None
    return factory(**kwargs)


def divergence_of_M(case: BenchmarkCase, x) -> np.ndarray:
    return case.divergence(x)


# --------------------------------------------------------------------------
# volume-integral oracle
#   u(x) = 1/(4 pi) int_Omega (x - y) . M(y) / |x - y|^3 dy


def _kernel_sum(x, y, w, M):
    diff = x - y
    dist3 = np.linalg.norm(diff, axis=-1) ** 3
    return float(np.sum(w * (diff * M(y)).sum(-1) / dist3)) / (4.0 * np.pi)


def _ball_exterior(case, x, n):
    r0 = case.domain.radius
    rho, wr = roots_legendre(n)
    rho = 0.5 * r0 * (rho + 1.0)
    wr = 0.5 * r0 * wr
    ct, wt = roots_legendre(n)
    phi = np.arange(2 * n) * np.pi / n
    wp = np.full(2 * n, np.pi / n)
    R, C, P = np.meshgrid(rho, ct, phi, indexing="ij")
    S = np.sqrt(1.0 - C**2)
    y = np.stack([R * S * np.cos(P), R * S * np.sin(P), R * C], axis=-1).reshape(-1, 3)
    w = (np.einsum("i,j,k->ijk", wr, wt, wp) * R**2).reshape(-1)
    return _kernel_sum(x, y, w, case.magnetization)


def _sphere_directions(n):
    ct, wt = roots_legendre(n)
    phi = np.arange(2 * n) * np.pi / n
    C, P = np.meshgrid(ct, phi, indexing="ij")
    S = np.sqrt(1.0 - C**2)
    sig = np.stack([S * np.cos(P), S * np.sin(P), C], axis=-1).reshape(-1, 3)
    w = np.outer(wt, np.full(2 * n, np.pi / n)).reshape(-1)
    return sig, w


def _ball_interior(case, x, n):
    # spherical coordinates centred at x: the 1/|x-y|^2 singularity cancels
    r0 = case.domain.radius
    sig, ws = _sphere_directions(n)
    xs = sig @ x
    reach = -xs + np.sqrt(xs**2 - x @ x + r0**2)
    t, wt = roots_legendre(n)
    t = 0.5 * (t + 1.0)
    wt = 0.5 * wt
    rho = reach[:, None] * t[None, :]
    y = x + rho[..., None] * sig[:, None, :]
    Mv = case.magnetization(y.reshape(-1, 3)).reshape(y.shape)
    inner = -((Mv * sig[:, None, :]).sum(-1) * wt).sum(-1) * reach
    return float(np.dot(ws, inner)) / (4.0 * np.pi)


def _gauss_box(n, m, half):
    g, w = roots_legendre(n)
    edges = np.linspace(-half, half, m + 1)
    a, b = edges[:-1], edges[1:]
    nodes = (0.5 * (b - a)[:, None] * (g[None, :] + 1.0) + a[:, None]).reshape(-1)
    weights = (0.5 * (b - a)[:, None] * w[None, :]).reshape(-1)
    return nodes, weights


def _cube_exterior(case, x, n):
    half = 0.5 * case.domain.side
    m = max(1, n // 8)
    nodes, w1 = _gauss_box(8, m, half)
    X, Y, Z = np.meshgrid(nodes, nodes, nodes, indexing="ij")
    y = np.stack([X, Y, Z], axis=-1).reshape(-1, 3)
    w = np.einsum("i,j,k->ijk", w1, w1, w1).reshape(-1)
    return _kernel_sum(x, y, w, case.magnetization)


def _cube_interior(case, x, n):
    # six pyramids with apex x, one per face: y = x + t (p - x)
    half = 0.5 * case.domain.side
    g, wg = roots_legendre(n)
    s = half * g
    ws = half * wg
    t = 0.5 * (g + 1.0)
    wt = 0.5 * wg
    A, B = np.meshgrid(s, s, indexing="ij")
    wab = np.outer(ws, ws).reshape(-1)
    total = 0.0
    for axis in range(3):
        others = [k for k in range(3) if k != axis]
        for sign in (-1.0, 1.0):
            p = np.empty((A.size, 3))
            p[:, axis] = sign * half
            p[:, others[0]] = A.reshape(-1)
            p[:, others[1]] = B.reshape(-1)
            dp = p - x
            height = abs(sign * half - x[axis])
            dist = np.linalg.norm(dp, axis=-1)
            y = x + t[None, :, None] * dp[:, None, :]
            Mv = case.magnetization(y.reshape(-1, 3)).reshape(y.shape)
            inner = ((Mv * dp[:, None, :]).sum(-1) * wt).sum(-1)
            total += -np.dot(wab, inner * height / dist**3)
    return total / (4.0 * np.pi)


def green_oracle(
    case: BenchmarkCase,
    x,
    tol: float = 1e-8,
    shell: float = 1e-3,
    n_start: int = 8,
    n_max: int = 64,
) -> float:
    """Potential at ``x`` from the volume-integral representation.

    Gauss rules of increasing order are compared until two successive
    estimates agree to ``tol`` (relative, with an absolute floor set by the
    magnitude bound ``|Omega| / (4 pi dist^2)``).  Points within ``shell``
    of the boundary are rejected.  Interior points use coordinates centred at
    the evaluation point so that the kernel singularity is removed.
    """
    x = np.asarray(x, dtype=float).reshape(3)
    dom = case.domain
    dist = float(dom.boundary_distance(x))
    if dist < shell * dom.bounding_radius:
        raise InvalidParameterError("evaluation point lies in the exclusion shell around the boundary")
    inside = bool(dom.contains(x))
    if isinstance(dom, Ball):
        rule = _ball_interior if inside else _ball_exterior
    elif isinstance(dom, Cube):
        rule = _cube_interior if inside else _cube_exterior
    else:
        raise UnsupportedForCaseError(f"no oracle for domain {dom!r}")
    center_dist = max(np.linalg.norm(x), dist)
    floor = dom.volume / (4.0 * np.pi * center_dist**2)
    n = n_start
    prev = rule(case, x, n)
    while n < n_max:
        n *= 2
        cur = rule(case, x, n)
        if abs(cur - prev) <= tol * max(abs(cur), floor):
            return cur
        prev = cur
    raise ToleranceNotMetError(
        f"green oracle did not reach tol={tol} at x={x}", estimate=prev, error_estimate=abs(cur - prev)
    )


def field_energy(case: BenchmarkCase, inner: float, outer: float, fd_step: float = 1e-6) -> float:
    """``int_{inner < |x| < outer} |grad u|^2`` for a closed-form potential.

    Gradients are central differences of the closed form; the sphere is
    integrated with a Gauss-Legendre x trapezoid product and the radius with
    adaptive quadrature (``outer`` may be ``inf``).
    """
    u = case.require_potential()
    sig, ws = _sphere_directions(24)
    eye = np.eye(3) * fd_step

    def shell(rho):
        x = rho * sig
        g = np.stack([(u(x + e) - u(x - e)) / (2 * fd_step) for e in eye], axis=-1)
        return rho**2 * np.dot(ws, (g**2).sum(-1))

    val, _ = integrate.quad(shell, inner, outer, limit=400, epsabs=0.0, epsrel=1e-11)
    return float(val)
