"""Quadrature rules on tetrahedra in barycentric form."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.special import roots_jacobi

from invfem.errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Barycentric points (``(n, 4)``) and weights summing to one.

    Integrals over an element ``K`` are ``|K| * sum_q w_q f(x_q)``.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)

    def physical_points(self, vertices: np.ndarray) -> np.ndarray:
        """Map to elements given as ``(n_el, 4, 3)``; returns ``(n_el, n_q, 3)``."""
        return np.einsum("qk,ekd->eqd", self.points, vertices)


def _orbit(*coords):
    return np.unique(np.array(list(permutations(coords))), axis=0)


def _symmetric_rule(classes, degree):
    pts, wts = [], []
    for coords, w in classes:
        orb = _orbit(*coords)
        pts.append(orb)
        wts.append(np.full(len(orb), w))
    return QuadratureRule(np.concatenate(pts), np.concatenate(wts), degree)


def _keast_14():
    # fully symmetric 14-point rule exact to degree 5
    a1, w1 = 0.0927352503108912, 0.07349304311636196
    a2, w2 = 0.3108859192633006, 0.11268792571801585
    a3, w3 = 0.0455037041256496, 0.04254602077708147
    b3 = 0.5 - a3
    return _symmetric_rule(
        [
            ((1 - 3 * a1, a1, a1, a1), w1),
            ((1 - 3 * a2, a2, a2, a2), w2),
            ((a3, a3, b3, b3), w3),
        ],
        5,
    )


def conical_product_rule(n: int) -> QuadratureRule:
    """Collapsed Gauss-Jacobi product rule with ``n**3`` points, exact to degree ``2n - 1``."""
    # x = t1, y = t2 (1 - t1), z = t3 (1 - t1)(1 - t2) on the unit simplex
    x1, w1 = roots_jacobi(n, 0, 2)
    x2, w2 = roots_jacobi(n, 0, 1)
    x3, w3 = roots_jacobi(n, 0, 0)
    t1, t2, t3 = (1 - x1) / 2, (1 - x2) / 2, (1 - x3) / 2
    w1, w2, w3 = w1 / 8, w2 / 4, w3 / 2
    T1, T2, T3 = np.meshgrid(t1, t2, t3, indexing="ij")
    W = np.einsum("i,j,k->ijk", w1, w2, w3)
    x = T1
    y = T2 * (1 - T1)
    z = T3 * (1 - T1) * (1 - T2)
    lam = np.stack([1 - x - y - z, x, y, z], axis=-1).reshape(-1, 4)
    w = W.reshape(-1)
    return QuadratureRule(lam, w / w.sum(), 2 * n - 1)


@lru_cache(maxsize=None)
def tet_rule(degree: int) -> QuadratureRule:
    """A positive-weight rule exact for polynomials up to ``degree``."""
    if degree < 0:
        raise InvalidParameterError("quadrature degree must be non-negative")
    if degree <= 1:
        return QuadratureRule(np.full((1, 4), 0.25), np.ones(1), 1)
    if degree == 2:
        a = 0.1381966011250105
        return _symmetric_rule([((1 - 3 * a, a, a, a), 0.25)], 2)
    if degree <= 5:
        return _keast_14()
    return conical_product_rule((degree + 2) // 2)


@lru_cache(maxsize=None)
def triangle_rule(degree: int):
    """Collapsed Gauss-Jacobi rule on a triangle: barycentric points ``(n, 3)``, weights summing to one."""
    n = max(1, (degree + 2) // 2)
    x1, w1 = roots_jacobi(n, 0, 1)
    x2, w2 = roots_jacobi(n, 0, 0)
    t1, t2 = (1 - x1) / 2, (1 - x2) / 2
    T1, T2 = np.meshgrid(t1, t2, indexing="ij")
    W = np.outer(w1, w2).reshape(-1)
    x = T1.reshape(-1)
    y = (T2 * (1 - T1)).reshape(-1)
    lam = np.stack([1 - x - y, x, y], axis=-1)
    return lam, W / W.sum()


@lru_cache(maxsize=None)
def _reference_subtets(depth: int) -> np.ndarray:
    """Barycentric vertices of the red refinement of the reference element."""
    from invfem.meshing import red_refine

    verts = np.eye(4)
    tets = np.array([[0, 1, 2, 3]])
    # refine in an affine image where the barycentric vertices form a regular tetrahedron
    # so the octahedron diagonal choice does not depend on an arbitrary reference shape
    reg = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    v3 = verts @ reg
    for _ in range(depth):
        v3, tets, _ = red_refine(v3, tets)
    bary = np.linalg.solve(
        np.vstack([reg.T, np.ones(4)]), np.vstack([v3.T, np.ones(len(v3))])
    ).T
    return bary[tets]  # (8**depth, 4, 4)


def subdivide_rule(base: QuadratureRule, depth: int) -> QuadratureRule:
    """Composite rule: ``base`` on each of the ``8**depth`` red sub-elements."""
    if depth == 0:
        return base
    sub = _reference_subtets(depth)
    pts = np.einsum("qk,skj->sqj", base.points, sub).reshape(-1, 4)
    w = np.tile(base.weights, len(sub)) / len(sub)
    return QuadratureRule(pts, w, base.degree)


@lru_cache(maxsize=None)
def subdivided_rule(degree: int, depth: int) -> QuadratureRule:
    """``tet_rule(degree)`` applied on ``8**depth`` red sub-elements."""
    return subdivide_rule(tet_rule(degree), depth)


def apply_quadrature_rule(rule: QuadratureRule, element, integrand) -> float:
    """Integrate ``integrand(points (n, 3)) -> (n,)`` over one tetrahedron ``(4, 3)``."""
    p = np.asarray(element, dtype=float)
    vol = abs(np.linalg.det(p[1:] - p[0])) / 6.0
    x = rule.points @ p
    return float(vol * np.dot(rule.weights, integrand(x)))
