"""The discrete space W_h: P1 on Omega_0, mapped P1 on the exterior.

A function of the space is described by nodal values ``u`` on the central
mesh and ``u_hat`` on the star mesh.  On the exterior it is evaluated through
the polygonal inversion,

    v(x) = r(x)**(-gamma) * v_hat(phi(x)),   r(x) >= 1,

and ``v_hat`` vanishes at the origin, which is the image of infinity.  The
interface vertices carry a single unknown shared by both meshes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from invfem.errors import GeometryError, InvalidParameterError
from invfem.meshing import MeshPair


@dataclass(frozen=True, eq=False)
class DofSpace:
    pair: MeshPair
    gamma: float
    central_dof: np.ndarray
    star_dof: np.ndarray  # -1 at the origin
    n_dofs: int
    degree: int = 1

    @property
    def decomposition(self):
        return self.pair.decomposition

    @property
    def N(self) -> int:
        return self.n_dofs


def build_dof_space(m: MeshPair, gamma: float = 1.0, degree: int = 1) -> DofSpace:
    """Number the unknowns: central vertices first, then the free star vertices.

    Requires ``gamma > -1/2`` so that the mapped functions have finite
    weighted norm.
    """
    if not gamma > -0.5:
        raise InvalidParameterError(f"gamma must be > -1/2, got {gamma!r}")
    if degree != 1:
        raise InvalidParameterError("only P1 elements (degree=1) are implemented")
    n_c = m.central.n_vertices
    central = np.arange(n_c)
    star = np.full(m.star.n_vertices, -1, dtype=np.int64)
    star[m.interface] = m.interface
    free = np.ones(m.star.n_vertices, dtype=bool)
    free[m.interface] = False
    free[m.origin] = False
    star[free] = n_c + np.arange(free.sum())
    n = n_c + int(free.sum())
    for arr in (central, star):
        arr.setflags(write=False)
    return DofSpace(m, float(gamma), central, star, n, degree)


@dataclass(frozen=True, eq=False)
class FieldPair:
    """Coefficient vector of a function of ``W_h``."""

    space: DofSpace
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.space.n_dofs,):
            raise ValueError(f"expected {self.space.n_dofs} coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def central_values(self) -> np.ndarray:
        return self.coeffs[self.space.central_dof]

    @property
    def star_values(self) -> np.ndarray:
        sd = self.space.star_dof
        return np.where(sd >= 0, self.coeffs[np.maximum(sd, 0)], 0.0)


def zero_field(s: DofSpace) -> FieldPair:
    return FieldPair(s, np.zeros(s.n_dofs))


def basis_function(s: DofSpace, dof: int) -> FieldPair:
    c = np.zeros(s.n_dofs)
    c[dof] = 1.0
    return FieldPair(s, c)


def _p1(mesh, nodal, points):
    elem, bary = mesh.locate(points)
    vals = nodal[mesh.tets[elem]]
    value = (bary * vals).sum(axis=1)
    grad = np.einsum("nk,nkd->nd", vals, mesh.gradients[elem])
    return value, grad


def eval_central(u: FieldPair, x):
    """Value and (element-wise constant) gradient of ``u`` at points of ``Omega_0``."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    d = u.space.decomposition
    if np.any(d.radius(pts) > 1.0 + 1e-10):
        raise GeometryError("eval_central called outside Omega_0")
    return _p1(u.space.pair.central, u.central_values, pts)


def eval_star(u: FieldPair, x_star):
    """Value and gradient of ``u_hat`` on the star mesh."""
    pts = np.atleast_2d(np.asarray(x_star, dtype=float))
    return _p1(u.space.pair.star, u.star_values, pts)


def _far_check(d, pts):
    r = d.radius(pts)
    if np.any(r < 1.0 - 1e-10):
        raise GeometryError("far-field evaluation requires r(x) >= 1")
    return r


def eval_far(u: FieldPair, x) -> np.ndarray:
    """``r(x)**-gamma * u_hat(phi(x))`` at exterior points."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    d = u.space.decomposition
    r = _far_check(d, pts)
    val, _ = eval_star(u, d.inversion(pts))
    return r ** (-u.space.gamma) * val


def eval_far_gradient(u: FieldPair, x) -> np.ndarray:
    """Chain rule: ``-gamma r^(-gamma-1) g u_hat + r^(-gamma) Dphi^T grad u_hat``."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    d = u.space.decomposition
    gam = u.space.gamma
    r = _far_check(d, pts)
    g = d.gradients[d.sector_of(pts)]
    val, grad = eval_star(u, d.inversion(pts))
    jac = d.inversion_jacobian(pts)
    return (
        -gam * (r ** (-gam - 1.0) * val)[:, None] * g
        + (r ** (-gam))[:, None] * np.einsum("nji,nj->ni", jac, grad)
    )


def evaluate(u: FieldPair, x):
    """Value and gradient anywhere in R^3 (central rule for ``r <= 1``)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    r = u.space.decomposition.radius(pts)
    near = r <= 1.0
    value = np.empty(len(pts))
    grad = np.empty((len(pts), 3))
    if near.any():
        value[near], grad[near] = eval_central(u, pts[near])
    if (~near).any():
        value[~near] = eval_far(u, pts[~near])
        grad[~near] = eval_far_gradient(u, pts[~near])
    return value, grad


def interpolate(s: DofSpace, func) -> FieldPair:
    """Nodal interpolant of ``func(points) -> values`` in ``W_h``.

    Star nodes take ``r(x*)**-gamma * func(phi(x*))``; the origin is left at 0.
    """
    pair, d = s.pair, s.decomposition
    coeffs = np.zeros(s.n_dofs)
    coeffs[s.central_dof] = func(pair.central.vertices)
    free = s.star_dof >= s.pair.central.n_vertices
    xs = pair.star.vertices[free]
    rs = d.radius(xs)
    coeffs[s.star_dof[free]] = rs ** (-s.gamma) * func(d.inversion(xs))
    return FieldPair(s, coeffs)
