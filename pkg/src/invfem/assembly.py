"""Stiffness matrix and load vector of the discrete problem.

The bilinear form is ``a(u, v) = int_{R^3} grad u . grad v`` and the load is
``l(v) = int_Omega M . grad v``.  Central elements use exact P1 integration.
Exterior contributions are integrated on the star mesh after the change of
variables ``x = phi(x*)`` whose volume factor is ``|det Dphi(x*)| = r(x*)^-6``.
With ``x*`` in a star element of sector ``i``, ``r* = g_i . x*`` and the mapped
gradient of the basis function ``lambda_j`` is

    grad v_j(phi(x*)) = r*^(gamma+1) * w_j(x*),
    w_j = -gamma g lambda_j + r* grad lambda_j - 2 g (x* . grad lambda_j),

so the pulled-back integrand is ``r*^(2 gamma - 4) w_i . w_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.io
import scipy.sparse as sp

from invfem.errors import AssemblyError, InvalidConfigurationError
from invfem.femspace import DofSpace
from invfem.meshing import CUT, INSIDE, restrict_to_domain
from invfem.quadrature import QuadratureRule, subdivide_rule, subdivided_rule, tet_rule, triangle_rule

CHUNK = 16384
RATIO_SPLIT = 1.3  # max r_max / r_min per (sub)element before splitting
MAX_SPLIT_DEPTH = 3


@dataclass(frozen=True)
class AssemblyOptions:
    quad_degree: int = 5  # exterior (pulled-back) integrals
    load_degree: int = 2  # elements inside Omega, variable M
    cut_degree: int = 5  # elements cut by the boundary of Omega
    cut_depth: int = 1  # red subdivisions of cut elements


@dataclass(frozen=True, eq=False)
class SparseSystem:
    A: sp.csr_matrix
    b: np.ndarray
    A_central: Optional[sp.csr_matrix] = field(default=None, repr=False)
    A_infinite: Optional[sp.csr_matrix] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.A.shape[0]


def local_p1_stiffness(vertices) -> np.ndarray:
    """Exact P1 stiffness ``|K| grad lambda_i . grad lambda_j`` of one tetrahedron."""
    p = np.asarray(vertices, dtype=float)
    jac = (p[1:] - p[0]).T
    det = np.linalg.det(jac)
    if abs(det) <= 1e-300:
        raise AssemblyError("degenerate element")
    inv = np.linalg.inv(jac)
    g = np.vstack([-inv.sum(axis=0), inv])
    return abs(det) / 6.0 * g @ g.T


def _scatter(dofs, local, n):
    rows = np.repeat(dofs, 4, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, 4)).reshape(-1)
    vals = local.reshape(-1)
    keep = (rows >= 0) & (cols >= 0)
    A = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n))
    return A.tocsr()


def assemble_central_stiffness(s: DofSpace) -> sp.csr_matrix:
    mesh = s.pair.central
    vol = mesh.volumes
    if np.any(vol <= 0):
        raise AssemblyError(f"degenerate central element {int(np.argmin(vol))}")
    g = mesh.gradients
    local = vol[:, None, None] * np.einsum("eid,ejd->eij", g, g)
    return _scatter(s.central_dof[mesh.tets], local, s.n_dofs)


def assemble_infinite_stiffness(s: DofSpace, q: Optional[QuadratureRule] = None) -> sp.csr_matrix:
    q = q or tet_rule(5)
    if q.degree < 4:
        raise InvalidConfigurationError("exterior integrals need a rule of degree >= 4")
    mesh = s.pair.star
    d = s.decomposition
    gam = s.gamma
    vol = mesh.volumes
    if np.any(vol <= 0):
        raise AssemblyError(f"degenerate star element {int(np.argmin(vol))}")
    at_origin = (mesh.tets == s.pair.origin).any(axis=1)
    depth = np.zeros(mesh.n_tets, dtype=int)
    rv = np.einsum("ekd,ed->ek", mesh.vertices[mesh.tets], d.gradients[mesh.region])
    ratio = rv[~at_origin].max(axis=1) / rv[~at_origin].min(axis=1)
    # near the origin r varies strongly across an element; split until it varies by < RATIO_SPLIT
    need = np.log(ratio) / np.log(RATIO_SPLIT)
    depth[~at_origin] = np.clip(np.ceil(np.log2(np.maximum(need, 1.0))), 0, MAX_SPLIT_DEPTH)
    blocks = [_origin_elements(s, np.flatnonzero(at_origin), q.degree)]
    for k in range(MAX_SPLIT_DEPTH + 1):
        elems = np.flatnonzero(~at_origin & (depth == k))
        rule = q if k == 0 else subdivide_rule(q, k)
        step = max(1, CHUNK * 14 // len(rule))
        for start in range(0, len(elems), step):
            e = elems[start:start + step]
            x = rule.physical_points(mesh.vertices[mesh.tets[e]])  # (e, q, 3)
            weight = rule.weights[None, :] * vol[e, None]
            local = _pulled_back_products(x, rule.points, mesh.gradients[e], d.gradients[mesh.region[e]], gam, weight)
            blocks.append(_scatter(s.star_dof[mesh.tets[e]], local, s.n_dofs))
    return sum(blocks[1:], blocks[0])


def _pulled_back_products(x, lam, G, g, gam, weight):
    """``sum_q weight * r^(2 gamma - 4) w_i . w_j`` at points ``x`` (e, q, 3) with barycentrics ``lam``."""
    r = np.einsum("eqd,ed->eq", x, g)
    if np.any(r <= 0):
        raise AssemblyError("quadrature point at the origin")
    lam = np.broadcast_to(lam, x.shape[:2] + (4,))
    xg = np.einsum("eqd,ejd->eqj", x, G)
    # w[e, q, j, :]
    w = (
        (-gam * lam[..., None] - 2.0 * xg[..., None]) * g[:, None, None, :]
        + r[..., None, None] * G[:, None, :, :]
    )
    return np.einsum("eq,eqid,eqjd->eij", weight * r ** (2.0 * gam - 4.0), w, w)


def _origin_elements(s: DofSpace, elems, degree):
    """Star elements with a vertex at the origin.

    There every basis function carrying an unknown is linear and vanishes at
    the origin, so the integrand is homogeneous of degree ``2 gamma - 2`` and
    not smooth at the apex.  Integrating exactly along rays gives
    ``int_K f = 3 |K| / (2 gamma + 1) * mean_F f`` with ``F`` the opposite face,
    where ``f`` is smooth and a triangle rule converges quickly.
    """
    mesh = s.pair.star
    gam = s.gamma
    tets = mesh.tets[elems]
    apex = np.argmax(tets == s.pair.origin, axis=1)
    tri_lam, tri_w = triangle_rule(max(degree, 5) + 4)
    lam = np.zeros((len(elems), len(tri_w), 4))
    others = (apex[:, None] + np.arange(1, 4)[None, :]) % 4
    for k in range(3):
        lam[np.arange(len(elems)), :, others[:, k]] = tri_lam[:, k]
    x = np.einsum("eqk,ekd->eqd", lam, mesh.vertices[tets])
    weight = (3.0 * mesh.volumes[elems] / (2.0 * gam + 1.0))[:, None] * tri_w[None, :]
    local = _pulled_back_products(x, lam, mesh.gradients[elems], s.decomposition.gradients[mesh.region[elems]], gam, weight)
    return _scatter(s.star_dof[tets], local, s.n_dofs)


def element_magnetization_moments(s: DofSpace, case, options: AssemblyOptions = AssemblyOptions()):
    """``m_K = int_{K cap Omega} M`` for every central element (shape (n_tets, 3))."""
    mesh = s.pair.central
    cls = restrict_to_domain(mesh, case.domain, s.decomposition)
    vol = mesh.volumes
    m = np.zeros((mesh.n_tets, 3))
    inside = np.flatnonzero(cls == INSIDE)
    cut = np.flatnonzero(cls == CUT)
    if case.uniform_M is not None:
        m[inside] = vol[inside, None] * case.uniform_M
    else:
        _integrate_into(m, inside, mesh, vol, tet_rule(options.load_degree), case, False)
    rule = subdivided_rule(options.cut_degree, options.cut_depth)
    _integrate_into(m, cut, mesh, vol, rule, case, True)
    return m


def _integrate_into(m, elems, mesh, vol, rule, case, use_indicator):
    chunk = max(1, 2_000_000 // len(rule))
    for start in range(0, len(elems), chunk):
        idx = elems[start:start + chunk]
        x = rule.physical_points(mesh.vertices[mesh.tets[idx]])
        flat = x.reshape(-1, 3)
        M = case.magnetization(flat)
        if use_indicator:
            M = M * case.domain.contains(flat)[:, None]
        M = M.reshape(x.shape)
        m[idx] = vol[idx, None] * np.einsum("q,eqd->ed", rule.weights, M)


def assemble_load(s: DofSpace, case, options: AssemblyOptions = AssemblyOptions()) -> np.ndarray:
    mesh = s.pair.central
    mK = element_magnetization_moments(s, case, options)
    local = np.einsum("ejd,ed->ej", mesh.gradients, mK)
    b = np.zeros(s.n_dofs)
    np.add.at(b, s.central_dof[mesh.tets].reshape(-1), local.reshape(-1))
    return b


def assemble_system(s: DofSpace, case, options: AssemblyOptions = AssemblyOptions()) -> SparseSystem:
    Ac = assemble_central_stiffness(s)
    Ai = assemble_infinite_stiffness(s, tet_rule(options.quad_degree))
    A = (Ac + Ai).tocsr()
    # the exact form is symmetric; remove round-off asymmetry from the scatter
    A = ((A + A.T) * 0.5).tocsr()
    A.sort_indices()
    b = assemble_load(s, case, options)
    return SparseSystem(A, b, Ac, Ai)


def write_matrix_market(path, system: SparseSystem) -> None:
    scipy.io.mmwrite(str(path), system.A, comment="stiffness matrix", field="real", symmetry="general")
