"""Legacy ASCII VTK unstructured-grid files for tetrahedral meshes."""

from __future__ import annotations

import numpy as np

from invfem.femspace import FieldPair

VTK_TETRA = 10


def write_vtk(path, vertices, tets, point_data=None, title: str = "invfem mesh") -> None:
    """Write a tetrahedral mesh with optional vertex scalars (``name -> array``)."""
    vertices = np.asarray(vertices, dtype=float)
    tets = np.asarray(tets, dtype=np.int64)
    point_data = point_data or {}
    lines = [
        "# vtk DataFile Version 3.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(vertices)} double",
    ]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in vertices]
    lines.append(f"CELLS {len(tets)} {5 * len(tets)}")
    lines += [f"4 {a} {b} {c} {d}" for a, b, c, d in tets]
    lines.append(f"CELL_TYPES {len(tets)}")
    lines += [str(VTK_TETRA)] * len(tets)
    if point_data:
        lines.append(f"POINT_DATA {len(vertices)}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (len(vertices),):
                raise ValueError(f"field {name!r} has shape {values.shape}, expected ({len(vertices)},)")
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [f"{v:.17g}" for v in values]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path):
    """Read a file produced by :func:`write_vtk`; returns ``(vertices, tets, point_data)``."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    it = iter(tokens[4:])
    vertices = tets = None
    data = {}
    n_points = 0
    for line in it:
        parts = line.split()
        if not parts:
            continue
        key = parts[0]
        if key == "POINTS":
            n_points = int(parts[1])
            vertices = np.array([next(it).split() for _ in range(n_points)], dtype=float).reshape(n_points, 3)
        elif key == "CELLS":
            n = int(parts[1])
            rows = np.array([next(it).split() for _ in range(n)], dtype=np.int64).reshape(n, 5)
            if np.any(rows[:, 0] != 4):
                raise ValueError("only tetrahedral cells are supported")
            tets = rows[:, 1:]
        elif key == "CELL_TYPES":
            for _ in range(int(parts[1])):
                next(it)
        elif key == "SCALARS":
            next(it)  # LOOKUP_TABLE
            data[parts[1]] = np.array([next(it) for _ in range(n_points)], dtype=float)
    if vertices is None or tets is None:
        raise ValueError(f"{path}: not an unstructured grid")
    return vertices, tets, data


def central_gradient_magnitude(u: FieldPair) -> np.ndarray:
    """Vertex values of ``|grad u_h|`` by volume-weighted averaging of element gradients."""
    mesh = u.space.pair.central
    grad = np.einsum("ek,ekd->ed", u.central_values[mesh.tets], mesh.gradients)
    mag = np.linalg.norm(grad, axis=1) * mesh.volumes
    acc = np.zeros(mesh.n_vertices)
    wsum = np.zeros(mesh.n_vertices)
    for k in range(4):
        np.add.at(acc, mesh.tets[:, k], mag)
        np.add.at(wsum, mesh.tets[:, k], mesh.volumes)
    return acc / wsum


def export_solution(u: FieldPair, central_path, star_path) -> None:
    """Central mesh with ``potential`` and ``grad_magnitude``; star mesh with ``potential_hat``."""
    pair = u.space.pair
    write_vtk(
        central_path, pair.central.vertices, pair.central.tets,
        {"potential": u.central_values, "grad_magnitude": central_gradient_magnitude(u)},
        title="central zone",
    )
    write_vtk(
        star_path, pair.star.vertices, pair.star.tets,
        {"potential_hat": u.star_values},
        title="inverted exterior zone",
    )
