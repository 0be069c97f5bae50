"""Conforming mesh pairs for the central zone and the inverted star zone.

The central mesh is obtained by red refinement of the sector tetrahedra
``S_i = hull(0, face_i)``.  The star mesh re-uses the same connectivity and
moves every vertex radially, ``x -> r(x)**(1/mu - 1) * x``, which concentrates
elements at the origin (the image of infinity) and leaves the interface
``r = 1`` untouched, so both meshes share their boundary triangulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from invfem.errors import (
    GeometryError,
    InvalidConfigurationError,
    InvalidParameterError,
    MeshGenerationError,
    ResourceError,
)
from invfem.geometry import SpaceDecomposition, inradius

MAX_LEVEL = 7
VERTEX_BUDGET = 6_000_000

# local edge numbering shared by refinement and measures
_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])
_FACES = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])


def signed_volumes(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    p = vertices[tets]
    e = p[:, 1:] - p[:, :1]
    return np.linalg.det(e) / 6.0


@dataclass(frozen=True, eq=False)
class TetMesh:
    """Tetrahedral mesh with a sector tag per element.

    ``region[k]`` is the index of the sector tetrahedron containing element
    ``k``.  Elements are positively oriented.
    """

    vertices: np.ndarray
    tets: np.ndarray
    region: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    @cached_property
    def volumes(self) -> np.ndarray:
        return signed_volumes(self.vertices, self.tets)

    @cached_property
    def diameters(self) -> np.ndarray:
        p = self.vertices[self.tets]
        d = p[:, _EDGES[:, 1]] - p[:, _EDGES[:, 0]]
        return np.sqrt((d**2).sum(-1)).max(axis=1)

    @cached_property
    def inscribed_diameters(self) -> np.ndarray:
        """Diameter ``6 |K| / area(dK)`` of the inscribed sphere."""
        p = self.vertices[self.tets]
        area = np.zeros(len(p))
        for f in _FACES:
            a, b, c = p[:, f[0]], p[:, f[1]], p[:, f[2]]
            area += 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        return 6.0 * np.abs(self.volumes) / area

    @cached_property
    def origin_distances(self) -> np.ndarray:
        """``d_K = min_{x in K} |x|`` for every element."""
        p = self.vertices[self.tets]
        lam = barycentric_from_points(p, np.zeros((len(p), 3)))
        inside = lam.min(axis=1) >= -1e-14
        d = np.full(len(p), np.inf)
        for f in _FACES:
            d = np.minimum(d, _origin_triangle_distance(p[:, f[0]], p[:, f[1]], p[:, f[2]]))
        d[inside] = 0.0
        return d

    @cached_property
    def gradients(self) -> np.ndarray:
        """Gradients of the four barycentric coordinates, shape ``(n_tets, 4, 3)``."""
        p = self.vertices[self.tets]
        jac = (p[:, 1:] - p[:, :1]).transpose(0, 2, 1)
        inv = np.linalg.inv(jac)
        g = np.empty((len(p), 4, 3))
        g[:, 1:] = inv
        g[:, 0] = -inv.sum(axis=1)
        return g

    @cached_property
    def boundary_faces(self) -> np.ndarray:
        faces, counts = _face_counts(self.tets)
        return faces[counts == 1]

    @cached_property
    def _centroid_tree(self):
        return cKDTree(self.vertices[self.tets].mean(axis=1))

    def face_counts(self):
        return _face_counts(self.tets)

    def is_conforming(self) -> bool:
        """Every face is shared by at most two elements."""
        _, counts = _face_counts(self.tets)
        return bool(counts.max() <= 2)

    def locate(self, points, tol: float = 1e-10, k: int = 12):
        """Element index and barycentric coordinates of each point.

        Candidates come from the nearest element centroids; points not found
        among them fall back to an exhaustive scan.  Ties on shared faces go
        to the element with the lowest index.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = min(k, self.n_tets)
        _, cand = self._centroid_tree.query(pts, k=k)
        cand = np.sort(cand.reshape(len(pts), k), axis=1)
        p = self.vertices[self.tets[cand]]  # (n, k, 4, 3)
        lam = barycentric_from_points(
            p.reshape(-1, 4, 3), np.repeat(pts, k, axis=0)
        ).reshape(len(pts), k, 4)
        ok = lam.min(axis=2) >= -tol
        found = ok.any(axis=1)
        first = np.argmax(ok, axis=1)
        elem = cand[np.arange(len(pts)), first]
        bary = lam[np.arange(len(pts)), first]
        allp = self.vertices[self.tets]
        for i in np.flatnonzero(~found):
            lam_all = barycentric_from_points(allp, np.broadcast_to(pts[i], (len(allp), 3)))
            hits = np.flatnonzero(lam_all.min(axis=1) >= -tol)
            if len(hits) == 0:
                raise GeometryError(f"point {pts[i]} is not covered by the mesh")
            elem[i] = hits[0]
            bary[i] = lam_all[hits[0]]
        return elem, bary


def barycentric_from_points(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of ``x[n]`` in tetrahedra ``p[n]`` (shape ``(n, 4, 3)``)."""
    jac = (p[:, 1:] - p[:, :1]).transpose(0, 2, 1)
    lam123 = np.linalg.solve(jac, (x - p[:, 0])[..., None])[..., 0]
    return np.concatenate([1.0 - lam123.sum(axis=1, keepdims=True), lam123], axis=1)


def _origin_triangle_distance(a, b, c):
    """Distance from the origin to the triangles ``abc`` (row-wise)."""

    def seg(p0, p1):
        e = p1 - p0
        t = np.clip(-(p0 * e).sum(1) / np.maximum((e * e).sum(1), 1e-300), 0.0, 1.0)
        return np.linalg.norm(p0 + t[:, None] * e, axis=1)

    dist = np.minimum(np.minimum(seg(a, b), seg(b, c)), seg(a, c))
    n = np.cross(b - a, c - a)
    n2 = (n * n).sum(1)
    t = (a * n).sum(1) / n2
    q = t[:, None] * n  # projection of the origin onto the plane
    inside = np.ones(len(a), dtype=bool)
    for p0, p1 in ((a, b), (b, c), (c, a)):
        inside &= (np.cross(p1 - p0, q - p0) * n).sum(1) >= 0
    return np.where(inside, np.abs(t) * np.sqrt(n2), dist)


def _face_counts(tets: np.ndarray):
    faces = np.sort(tets[:, _FACES].reshape(-1, 3), axis=1)
    return np.unique(faces, axis=0, return_counts=True)


def _orient(vertices, tets):
    vol = signed_volumes(vertices, tets)
    flip = vol < 0
    tets[flip] = tets[flip][:, [0, 2, 1, 3]]
    return tets


def red_refine(vertices: np.ndarray, tets: np.ndarray, region: Optional[np.ndarray] = None):
    """One level of red refinement (each element split into eight).

    The interior octahedron is cut along its shortest diagonal; exact ties are
    broken by the smallest vertex index on the diagonal.
    """
    n_v = len(vertices)
    edges = np.sort(tets[:, _EDGES].reshape(-1, 2), axis=1)
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    mids = 0.5 * (vertices[uniq[:, 0]] + vertices[uniq[:, 1]])
    new_vertices = np.concatenate([vertices, mids])
    m = (inv.reshape(-1, 6) + n_v)
    v0, v1, v2, v3 = tets.T
    m01, m02, m03, m12, m13, m23 = m.T

    corners = [
        (v0, m01, m02, m03),
        (m01, v1, m12, m13),
        (m02, m12, v2, m23),
        (m03, m13, m23, v3),
    ]
    diag = np.stack([np.stack([m01, m23], 1), np.stack([m02, m13], 1), np.stack([m03, m12], 1)], 1)
    dlen = np.linalg.norm(new_vertices[diag[:, :, 0]] - new_vertices[diag[:, :, 1]], axis=2)
    shortest = dlen.min(axis=1, keepdims=True)
    tie = dlen <= shortest * (1.0 + 1e-10)
    key = np.where(tie, diag.min(axis=2), np.iinfo(np.int64).max)
    choice = np.argmin(key, axis=1)

    cycles = [
        (m01, m23, (m02, m03, m13, m12)),
        (m02, m13, (m01, m03, m23, m12)),
        (m03, m12, (m01, m02, m23, m13)),
    ]
    inner = np.empty((len(tets), 4, 4), dtype=tets.dtype)
    for c, (a, b, cyc) in enumerate(cycles):
        sel = choice == c
        for k in range(4):
            inner[sel, k] = np.stack(
                [a[sel], b[sel], cyc[k][sel], cyc[(k + 1) % 4][sel]], axis=1
            )
    children = np.concatenate(
        [np.stack(cn, axis=1)[:, None] for cn in corners] + [inner], axis=1
    )  # (n, 8, 4)
    new_tets = _orient(new_vertices, children.reshape(-1, 4).copy())
    new_region = None if region is None else np.repeat(region, 8)
    return new_vertices, new_tets, new_region


def base_mesh(d: SpaceDecomposition) -> TetMesh:
    """Origin plus the real vertices of ``Omega_0``; one element per sector."""
    verts = [np.zeros(3)]
    index = {}
    tets = []
    for s in d.sectors:
        ids = []
        for a in s.vertices:
            key = tuple(np.round(a, 12))
            if key not in index:
                index[key] = len(verts)
                verts.append(np.array(a))
            ids.append(index[key])
        tets.append([0, *ids])
    vertices = np.array(verts)
    tets = _orient(vertices, np.array(tets, dtype=np.int64))
    return TetMesh(vertices, tets, np.arange(d.n_sectors))


def sector_vertex_count(L: int) -> int:
    n = 2**L
    return (n + 1) * (n + 2) * (n + 3) // 6


def refine_uniform(
    d: SpaceDecomposition,
    L: int,
    max_level: int = MAX_LEVEL,
    vertex_budget: int = VERTEX_BUDGET,
) -> TetMesh:
    """Red-refine every sector tetrahedron ``L`` times (``8**L`` elements per sector)."""
    if L < 0 or int(L) != L:
        raise InvalidParameterError(f"level must be a non-negative integer, got {L!r}")
    if L > max_level:
        raise InvalidParameterError(f"level {L} exceeds the configured maximum {max_level}")
    if d.n_sectors * sector_vertex_count(L) > vertex_budget:
        raise ResourceError(f"level {L} would exceed the vertex budget of {vertex_budget}")
    m = base_mesh(d)
    v, t, reg = m.vertices, m.tets, m.region
    for _ in range(int(L)):
        v, t, reg = red_refine(v, t, reg)
    return TetMesh(v, t, reg)


def grade_star(central: TetMesh, mu: float, d: SpaceDecomposition) -> TetMesh:
    """Copy of ``central`` with vertices moved by ``x -> r(x)**(1/mu - 1) x``."""
    if not 0.0 < mu <= 1.0:
        raise InvalidParameterError(f"grading parameter mu must lie in (0, 1], got {mu!r}")
    r = d.radius(central.vertices)
    if np.any(r > 1.0 + 1e-12):
        raise InvalidConfigurationError("central mesh has vertices outside Omega_0")
    r = np.clip(r, 0.0, 1.0)
    scale = np.ones_like(r)
    pos = r > 0
    scale[pos] = r[pos] ** (1.0 / mu - 1.0)
    scale[~pos] = 0.0
    scale[np.abs(r - 1.0) <= 1e-12] = 1.0  # interface vertices stay bitwise fixed
    verts = central.vertices * scale[:, None]
    vol = signed_volumes(verts, central.tets)
    bad = np.flatnonzero(vol <= 0)
    if len(bad):
        raise MeshGenerationError(
            f"grading with mu={mu} inverted {len(bad)} elements (first: {bad[0]})", tet=int(bad[0])
        )
    return TetMesh(verts, central.tets, central.region)


@dataclass(frozen=True, eq=False)
class MeshPair:
    """Central mesh of ``Omega_0`` and graded mesh of ``Omega_star``.

    Both meshes share connectivity and vertex numbering, so the interface
    correspondence is the identity on ``interface`` (the vertex indices with
    ``r = 1``).  ``origin`` is the index of the star vertex at ``0``.
    """

    decomposition: SpaceDecomposition
    central: TetMesh
    star: TetMesh
    interface: np.ndarray
    origin: int
    level: int
    mu: float

    @cached_property
    def h(self) -> float:
        return float(max(self.central.diameters.max(), self.star.diameters.max()))


def build_mesh_pair(d: SpaceDecomposition, L: int, mu: float = 0.5, **kwargs) -> MeshPair:
    central = refine_uniform(d, L, **kwargs)
    star = grade_star(central, mu, d)
    r = d.radius(central.vertices)
    interface = np.flatnonzero(np.abs(r - 1.0) <= 1e-10)
    origin = np.flatnonzero(np.linalg.norm(star.vertices, axis=1) == 0.0)
    if len(origin) != 1:
        raise MeshGenerationError("star mesh must have exactly one vertex at the origin")
    return MeshPair(d, central, star, interface, int(origin[0]), int(L), float(mu))


@dataclass(frozen=True)
class GradingAudit:
    """Measured shape/grading constants of a mesh pair."""

    c0: float  # max h_K / rho_K over both meshes
    c1_star: float  # max over K** of h_K / d_K^(1-mu), divided by h
    c2_star: float  # max over origin elements of h_K / h^(1/mu)
    c3_star: float  # min over K** of d_K / h^(1/mu)
    h: float
    min_volume: float
    conforming: bool

    def as_dict(self):
        return dict(self.__dict__)


def audit_grading(m: MeshPair) -> GradingAudit:
    c, s = m.central, m.star
    c0 = max(
        (c.diameters / c.inscribed_diameters).max(),
        (s.diameters / s.inscribed_diameters).max(),
    )
    h = m.h
    at_origin = (s.tets == m.origin).any(axis=1)
    dK = s.origin_distances[~at_origin]
    hK = s.diameters[~at_origin]
    hmu = h ** (1.0 / m.mu)
    c1 = float((hK / dK ** (1.0 - m.mu)).max() / h) if len(hK) else 0.0
    c2 = float(s.diameters[at_origin].max() / hmu)
    c3 = float(dK.min() / hmu) if len(dK) else np.inf
    conforming = check_conformity(c) and check_conformity(s)
    min_vol = float(min(c.volumes.min(), s.volumes.min()))
    return GradingAudit(float(c0), c1, c2, c3, h, min_vol, conforming)


def check_conformity(mesh: TetMesh, d: Optional[SpaceDecomposition] = None) -> bool:
    """Face-hash test: interior faces appear twice, boundary faces once.

    With a decomposition, boundary faces must in addition lie on the
    interface ``r = 1`` (checked on the central mesh only).
    """
    faces, counts = mesh.face_counts()
    if counts.max() > 2:
        return False
    if d is not None:
        bnd = faces[counts == 1]
        r = d.radius(mesh.vertices[bnd].reshape(-1, 3))
        if np.any(np.abs(r - 1.0) > 1e-10):
            return False
    return True


INSIDE, OUTSIDE, CUT = 1, 0, 2


def restrict_to_domain(mesh: TetMesh, domain, d: Optional[SpaceDecomposition] = None) -> np.ndarray:
    """Classify elements against a convex domain: 1 inside, 0 outside, 2 cut.

    A convex domain contains an element iff it contains its four vertices.  An
    element is declared outside only when its vertices and centroid are all
    outside *and* its bounding ball misses the domain; otherwise it is cut.
    """
    if d is not None and domain.bounding_radius > inradius(d) * (1.0 + 1e-12):
        raise InvalidConfigurationError("domain does not fit inside Omega_0")
    p = mesh.vertices[mesh.tets]
    centroid = p.mean(axis=1)
    vin = domain.contains(p.reshape(-1, 3)).reshape(-1, 4)
    cin = domain.contains(centroid)
    rad = np.linalg.norm(p - centroid[:, None], axis=2).max(axis=1)
    may_meet = domain.may_intersect_ball(centroid, rad)
    cls = np.full(len(p), CUT, dtype=np.int8)
    cls[vin.all(axis=1)] = INSIDE
    cls[~vin.any(axis=1) & ~cin & ~may_meet] = OUTSIDE
    return cls
