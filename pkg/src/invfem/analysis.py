"""Error norms, stray-field energies, convergence slopes and run records."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import integrate

from invfem.errors import EnergyBoundError, InsufficientDataError, UnsupportedForCaseError
from invfem.femspace import FieldPair, evaluate
from invfem.meshing import CUT, restrict_to_domain
from invfem.quadrature import subdivided_rule, tet_rule

CSV_HEADER = ["case", "L", "mu", "gamma", "R0", "dof", "h", "e0", "energy", "e_energy", "cg_iters", "seconds"]


@dataclass
class RunRecord:
    case: str
    L: int
    mu: float
    gamma: float
    R0: float
    dof: int
    h: float
    e0: float  # nan when no closed form is available
    energy: float
    e_energy: float
    cg_iters: int
    seconds: float

    def as_row(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]


def write_csv(path_or_file, records) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for rec in records:
            w.writerow([_fmt(v) for v in rec.as_row()])
    finally:
        if own:
            fh.close()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def read_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for f in fields(RunRecord):
                raw = row[f.name]
                kw[f.name] = raw if f.type == "str" else (int(raw) if f.type == "int" else float(raw))
            out.append(RunRecord(**kw))
    return out


def exact_weighted_norm(case) -> float:
    """``||u||`` in the weight ``(1 + |x|^2)^-1`` by radial quadrature of the closed form.

    Only for potentials ``f(rho) cos(theta)``, where the angular integral is
    ``4 pi / 3``.
    """
    u = case.require_potential()
    if not case.dipolar:
        raise UnsupportedForCaseError(f"no radial reduction for case {case.name!r}")
    r0 = case.domain.radius

    def f2(rho):
        return float(u(np.array([0.0, 0.0, rho]))) ** 2 * rho**2 / (1.0 + rho**2)

    a, _ = integrate.quad(f2, 0.0, r0, epsabs=0.0, epsrel=1e-12, limit=200)
    b, _ = integrate.quad(f2, r0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return float(np.sqrt(4.0 * np.pi / 3.0 * (a + b)))


def weighted_l2_error(u_h: FieldPair, case, degree: int = 5, cut_depth: int = 1) -> float:
    """Relative error ``||u_h - u|| / ||u||`` with weight ``(1 + |x|^2)^-1`` over R^3."""
    u = case.require_potential()
    num = weighted_l2_distance_sq(u_h, u, case, degree, cut_depth)
    return float(np.sqrt(num) / exact_weighted_norm(case))


def weighted_l2_distance_sq(u_h: FieldPair, u, case=None, degree: int = 5, cut_depth: int = 1) -> float:
    s = u_h.space
    pair, d = s.pair, s.decomposition
    rule = tet_rule(degree)
    total = 0.0

    # central zone; elements cut by the body boundary get a composite rule
    mesh = pair.central
    vals = u_h.central_values[mesh.tets]
    cls = np.zeros(mesh.n_tets, dtype=np.int8)
    if case is not None:
        cls = restrict_to_domain(mesh, case.domain)
    for sel, q in ((cls != CUT, rule), (cls == CUT, subdivided_rule(degree, cut_depth))):
        idx = np.flatnonzero(sel)
        for start in range(0, len(idx), 20000):
            e = idx[start:start + 20000]
            x = q.physical_points(mesh.vertices[mesh.tets[e]])
            uh = np.einsum("qk,ek->eq", q.points, vals[e])
            diff2 = (uh - u(x.reshape(-1, 3)).reshape(uh.shape)) ** 2
            w = 1.0 / (1.0 + (x**2).sum(-1))
            total += float(np.sum(mesh.volumes[e] * np.einsum("q,eq->e", q.weights, w * diff2)))

    # exterior, pulled back to the star mesh
    mesh = pair.star
    vals = u_h.star_values[mesh.tets]
    for start in range(0, mesh.n_tets, 20000):
        e = np.arange(start, min(start + 20000, mesh.n_tets))
        xs = rule.physical_points(mesh.vertices[mesh.tets[e]])
        g = d.gradients[mesh.region[e]]
        rs = np.einsum("eqd,ed->eq", xs, g)
        x = xs / (rs**2)[..., None]
        vh = rs**s.gamma * np.einsum("qk,ek->eq", rule.points, vals[e])
        diff2 = (vh - u(x.reshape(-1, 3)).reshape(vh.shape)) ** 2
        w = rs**-6 / (1.0 + (x**2).sum(-1))
        total += float(np.sum(mesh.volumes[e] * np.einsum("q,eq->e", rule.weights, w * diff2)))
    return total


def discrete_energy(x, b) -> float:
    """``E_h = 1/2 b . x`` (equals ``1/2 int |grad u_h|^2`` at the Galerkin solution)."""
    return 0.5 * float(np.dot(b, x))


def energy_error(E_h: float, case, slack: float = 1e-3, check_bound: bool = True) -> float:
    """Relative energy error; raises :class:`EnergyBoundError` if ``E_h > E (1 + slack)``."""
    E = case.require_energy()
    if check_bound and E_h > E * (1.0 + slack):
        raise EnergyBoundError(f"discrete energy {E_h:.6g} exceeds exact {E:.6g} beyond slack {slack}")
    return abs(E - E_h) / abs(E)


def loglog_slope(h, err) -> float:
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if len(h) < 3 or len(np.unique(h)) < 3:
        raise InsufficientDataError("a slope needs at least three distinct mesh sizes")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def convergence_slope(records, field: str, last: int = 4) -> float:
    """Least-squares slope of ``log(field)`` against ``log(h)`` over the finest ``last`` runs."""
    recs = sorted(records, key=lambda r: -r.h)
    if len(recs) < 3:
        raise InsufficientDataError("a slope needs at least three runs")
    recs = recs[-last:] if last else recs
    return loglog_slope([r.h for r in recs], [getattr(r, field) for r in recs])


@dataclass
class ProfileSample:
    r: float
    u_h: float
    u_exact: float


def radial_profile(u_h: FieldPair, case=None, direction=(0.0, 0.0, 1.0), radii=None, n: int = 200, r_max: float = 10.0):
    """Samples of ``u_h`` (and the closed form when available) along a ray from the origin."""
    dvec = np.asarray(direction, dtype=float)
    dvec = dvec / np.linalg.norm(dvec)
    if radii is None:
        radii = np.linspace(r_max / n, r_max, n)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("profile radii must be positive")
    pts = radii[:, None] * dvec
    vals, _ = evaluate(u_h, pts)
    exact = np.full(len(radii), np.nan)
    if case is not None and case.potential is not None:
        exact = case.potential(pts)
    return [ProfileSample(float(r), float(a), float(b)) for r, a, b in zip(radii, vals, exact)]


def record_dict(rec: RunRecord) -> dict:
    return asdict(rec)
