"""Two-zone decomposition of R^3, polygonal radius and polygonal inversion.

``Omega_0`` is a convex polyhedron containing the origin whose boundary is a
union of triangles.  Each boundary triangle together with the origin spans a
bounded sector tetrahedron ``S_i``; the cone over the same triangle beyond the
interface is the infinite tetrahedron ``T_i``.  Inside the cone of sector
``i`` the polygonal radius is the linear form ``r_i(x) = g_i . x`` with
``g_i = h_i / |h_i|^2`` (``h_i`` is the altitude vector), and the inversion
``phi(x) = x / r(x)^2`` swaps ``S_i`` and ``T_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from invfem.errors import DomainError, InvalidParameterError


@dataclass(frozen=True)
class Sector:
    """One sector: the cone of a boundary triangle seen from the origin."""

    index: int
    vertices: np.ndarray  # (3, 3), one real vertex per row
    altitude: np.ndarray  # foot of the perpendicular from 0 to the face plane
    gradient: np.ndarray  # altitude / |altitude|^2

    def radius(self, x):
        return np.asarray(x, dtype=float) @ self.gradient

    def cone_coordinates(self, x):
        """Coefficients ``alpha`` with ``x = sum_k alpha_k a_k``."""
        return np.linalg.solve(self.vertices.T, np.asarray(x, dtype=float).T).T


def make_sector(index: int, vertices) -> Sector:
    verts = np.array(vertices, dtype=float).reshape(3, 3)
    vol6 = np.linalg.det(verts)
    if abs(vol6) <= 1e-14 * max(1.0, np.abs(verts).max() ** 3):
        raise InvalidParameterError("sector vertices are coplanar with the origin")
    if vol6 < 0:
        verts = verts[[0, 2, 1]]
    # r_i(a_k) = 1 for the three real vertices
    gradient = np.linalg.solve(verts, np.ones(3))
    altitude = gradient / (gradient @ gradient)
    verts.setflags(write=False)
    gradient.setflags(write=False)
    altitude.setflags(write=False)
    return Sector(index, verts, altitude, gradient)


@dataclass(frozen=True)
class Zone:
    side: str  # "central" or "infinite"
    sector: int  # canonical owner (lowest index among ``sectors``)
    sectors: tuple
    on_interface: bool


@dataclass(frozen=True)
class SpaceDecomposition:
    """Sectors tiling the sphere of directions around the origin.

    ``Omega_0`` must be convex and contain the origin in its interior; the
    polygonal radius is then the gauge of ``Omega_0``, i.e. the maximum of the
    sector linear forms, and the owning sector of a point is the one attaining
    that maximum (ties go to the lowest index).
    """

    sectors: tuple
    R0: float
    gradients: np.ndarray = field(repr=False)
    radius_bounds: tuple = field(default=(np.nan, np.nan))

    @property
    def n_sectors(self) -> int:
        return len(self.sectors)

    @property
    def vertices(self) -> np.ndarray:
        """Distinct real vertices of ``Omega_0`` (rows)."""
        allv = np.concatenate([s.vertices for s in self.sectors])
        return np.unique(np.round(allv, 12), axis=0)

    def sector_of(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.argmax(x @ self.gradients.T, axis=-1)

    def radius(self, x) -> np.ndarray:
        """Polygonal radius ``r(x)``; ``r(0) = 0`` by continuity."""
        x = np.asarray(x, dtype=float)
        return np.max(x @ self.gradients.T, axis=-1)

    def inversion(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = self.radius(x)
        if np.any(r <= 0):
            raise DomainError("the polygonal inversion is undefined at the origin")
        return x / (r**2)[..., None]

    def inversion_jacobian(self, x) -> np.ndarray:
        """``D phi(x) = r^-2 (I - 2 x g^T / r)`` with ``g`` the owning sector gradient.

        On a face shared by two sectors the owner chosen by :meth:`sector_of`
        is used.
        """
        x = np.asarray(x, dtype=float)
        r = self.radius(x)
        if np.any(r <= 0):
            raise DomainError("the polygonal inversion is undefined at the origin")
        g = self.gradients[self.sector_of(x)]
        eye = np.eye(3)
        outer = x[..., :, None] * g[..., None, :]
        return (eye - 2.0 * outer / r[..., None, None]) / (r**2)[..., None, None]

    def locate(self, x, atol: float = 1e-12) -> Zone:
        x = np.asarray(x, dtype=float).reshape(3)
        vals = self.gradients @ x
        r = vals.max()
        scale = max(1.0, float(np.abs(vals).max()))
        owners = tuple(int(i) for i in np.flatnonzero(vals >= r - atol * scale))
        side = "central" if r <= 1.0 + atol else "infinite"
        on_iface = bool(abs(r - 1.0) <= atol)
        return Zone(side, owners[0], owners, on_iface)


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = np.pi * (1.0 + 5**0.5) * k
    s = np.sqrt(1.0 - z**2)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def decomposition_from_faces(faces, R0: float, n_directions: int = 20000) -> SpaceDecomposition:
    """Build a decomposition from the boundary triangles of a convex ``Omega_0``."""
    sectors = tuple(make_sector(i, f) for i, f in enumerate(faces))
    grads = np.array([s.gradient for s in sectors])
    grads.setflags(write=False)
    dirs = _fibonacci_sphere(n_directions)
    # vertex directions are where r/|x| is smallest on a convex gauge
    verts = np.concatenate([s.vertices for s in sectors])
    dirs = np.concatenate([dirs, verts / np.linalg.norm(verts, axis=1)[:, None]])
    rr = np.max(dirs @ grads.T, axis=1)
    if np.any(rr <= 0):
        raise InvalidParameterError("Omega_0 must contain the origin in its interior")
    return SpaceDecomposition(sectors, float(R0), grads, (float(rr.min()), float(rr.max())))


def big_tetrahedron_vertices(R0: float) -> np.ndarray:
    """The four vertices ``a_1..a_4`` of the regular tetrahedron of circumradius ``R0``."""
    return R0 * np.array(
        [
            [np.sqrt(8.0) / 3.0, 0.0, -1.0 / 3.0],
            [-np.sqrt(2.0) / 3.0, np.sqrt(2.0 / 3.0), -1.0 / 3.0],
            [-np.sqrt(2.0) / 3.0, -np.sqrt(2.0 / 3.0), -1.0 / 3.0],
            [0.0, 0.0, 1.0],
        ]
    )


def build_big_tetra_decomposition(R0: float = 4.0) -> SpaceDecomposition:
    """Four sectors; sector ``i`` is spanned by the vertices ``a_j``, ``j != i``."""
    if not np.isfinite(R0) or R0 <= 0:
        raise InvalidParameterError(f"R0 must be positive, got {R0!r}")
    a = big_tetrahedron_vertices(R0)
    faces = [a[[j for j in range(4) if j != i]] for i in range(4)]
    return decomposition_from_faces(faces, R0)


def inradius(d: SpaceDecomposition) -> float:
    """Radius of the largest origin-centred ball inside ``Omega_0``."""
    return float(min(np.linalg.norm(s.altitude) for s in d.sectors))

