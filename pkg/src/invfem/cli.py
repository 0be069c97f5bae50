"""Command-line front end: ``solve``, ``converge``, ``mesh-audit`` and ``export``.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from pathlib import Path

from invfem.analysis import convergence_slope, write_csv
from invfem.assembly import AssemblyOptions
from invfem.cases import CASES
from invfem.driver import solve_case, sweep
from invfem.errors import (
    AssemblyError,
    ConvergenceError,
    EnergyBoundError,
    InsufficientDataError,
    InvalidConfigurationError,
    InvalidParameterError,
    MeshGenerationError,
    NumericalBreakdownError,
    ResourceError,
    UnsupportedForCaseError,
)
from invfem.geometry import build_big_tetra_decomposition
from invfem.linsolve import SolverConfig
from invfem.meshing import MAX_LEVEL, audit_grading, build_mesh_pair

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

CONFIG_ERRORS = (InvalidParameterError, InvalidConfigurationError, InsufficientDataError, UnsupportedForCaseError, ResourceError)
SOLVER_ERRORS = (ConvergenceError, NumericalBreakdownError, AssemblyError, EnergyBoundError, MeshGenerationError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _levels(text: str):
    """``"3"``, ``"2..5"`` or ``"2,3,5"``."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t]


def _floats(text: str):
    return [float(t) for t in text.split(",") if t]


def _common(p, level_flag="--level", level_type=int, level_default=3):
    p.add_argument("--case", default="sphere-uniform", help=f"one of {', '.join(CASES)}")
    p.add_argument(level_flag, dest="level", type=level_type, default=level_default)
    p.add_argument("--gamma", type=float, default=1.0, help="decay exponent (> -1/2)")
    p.add_argument("--r-big", dest="r_big", type=float, default=None,
                   help="size of Omega_0 (default: 4, or 6 for sphere-vortex)")
    p.add_argument("--quad-degree", dest="quad_degree", type=int, default=5,
                   help="quadrature degree for exterior integrals")
    p.add_argument("--tol", type=float, default=1e-10, help="relative CG residual tolerance")
    p.add_argument("--deterministic", action="store_true",
                   help="single worker and zeroed timing column, for bitwise-reproducible rows")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="invfem", description="Inverted finite element stray-field solver")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one case at one level")
    _common(p)
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--csv", default="-", help="output CSV path ('-' for stdout)")
    p.add_argument("--vtk-prefix", default=None, help="also write <prefix>_central.vtk and <prefix>_star.vtk")

    p = sub.add_parser("converge", help="level sweep with slope summary")
    _common(p, "--levels", _levels, [2, 3, 4, 5])
    p.add_argument("--mu", type=_floats, default=[0.5], help="comma-separated list")
    p.add_argument("--csv", default="-")
    p.add_argument("--last", type=int, default=4, help="number of finest levels in the slope fit")
    p.add_argument("--workers", type=int, default=None, help="parallel runs (default from INVFEM_WORKERS)")

    p = sub.add_parser("mesh-audit", help="grading and conformity constants of the mesh pair")
    p.add_argument("--levels", type=_levels, default=[2, 3, 4, 5])
    p.add_argument("--mu", type=_floats, default=[1.0, 0.7, 0.5])
    p.add_argument("--r-big", dest="r_big", type=float, default=4.0)
    p.add_argument("--csv", default="-")

    p = sub.add_parser("export", help="solve and write VTK files of both meshes")
    _common(p)
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--output", default="invfem", help="prefix for <prefix>_central.vtk / <prefix>_star.vtk")
    return parser


def _check_ranges(args):
    if args.level is not None:
        for L in args.level if isinstance(args.level, list) else [args.level]:
            if not 0 <= L <= MAX_LEVEL:
                raise InvalidParameterError(f"level must lie in [0, {MAX_LEVEL}]")
    if args.case not in CASES:
        raise InvalidParameterError(f"unknown case {args.case!r}")


def _open_out(path):
    if path == "-":
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def _export(field, prefix):
    from invfem.vtkio import export_solution

    Path(f"{prefix}_central.vtk").parent.mkdir(parents=True, exist_ok=True)
    export_solution(field, f"{prefix}_central.vtk", f"{prefix}_star.vtk")


def _settings(args):
    return AssemblyOptions(quad_degree=args.quad_degree), SolverConfig(tol=args.tol)


def _finalize(records, deterministic):
    return [replace(r, seconds=0.0) for r in records] if deterministic else records


def cmd_solve(args) -> int:
    _check_ranges(args)
    options, solver = _settings(args)
    sol = solve_case(args.case, args.level, args.mu, args.gamma, args.r_big, options, solver)
    rec = _finalize([sol.record], args.deterministic)
    fh, own = _open_out(args.csv)
    try:
        write_csv(fh, rec)
    finally:
        if own:
            fh.close()
    if args.vtk_prefix:
        _export(sol.field, args.vtk_prefix)
    return EXIT_OK


def cmd_converge(args) -> int:
    _check_ranges(args)
    if len(set(args.level)) < 3:
        raise InsufficientDataError("converge needs at least three levels")
    options, solver = _settings(args)
    workers = 1 if args.deterministic else args.workers
    recs = sweep(args.case, args.level, args.mu, args.gamma, args.r_big, options, solver, workers)
    recs = sorted(_finalize(recs, args.deterministic), key=lambda r: (r.case, r.mu, r.L))
    fh, own = _open_out(args.csv)
    try:
        write_csv(fh, recs)
    finally:
        if own:
            fh.close()
    summary = sys.stderr if args.csv == "-" else sys.stdout
    for mu in sorted(set(r.mu for r in recs)):
        group = [r for r in recs if r.mu == mu]
        for metric in ("e0", "e_energy"):
            if any(math.isnan(getattr(r, metric)) for r in group):
                continue
            slope = convergence_slope(group, metric, args.last)
            print(f"slope case={args.case} mu={mu:g} {metric}={slope:.3f}", file=summary)
    return EXIT_OK


def cmd_mesh_audit(args) -> int:
    d = build_big_tetra_decomposition(args.r_big)
    for L in args.levels:
        if not 0 <= L <= MAX_LEVEL:
            raise InvalidParameterError(f"level must lie in [0, {MAX_LEVEL}]")
    fh, own = _open_out(args.csv)
    try:
        w = csv.writer(fh)
        w.writerow(["L", "mu", "c0", "c1_star", "c2_star", "c3_star", "h", "min_volume", "conforming"])
        for mu in sorted(args.mu):
            for L in args.levels:
                a = audit_grading(build_mesh_pair(d, L, mu))
                w.writerow([L, mu, a.c0, a.c1_star, a.c2_star, a.c3_star, a.h, a.min_volume, int(a.conforming)])
    finally:
        if own:
            fh.close()
    return EXIT_OK


def cmd_export(args) -> int:
    _check_ranges(args)
    options, solver = _settings(args)
    sol = solve_case(args.case, args.level, args.mu, args.gamma, args.r_big, options, solver, compute_error=False)
    prefix = args.output
    _export(sol.field, prefix)
    print(f"wrote {prefix}_central.vtk and {prefix}_star.vtk")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "converge": cmd_converge, "mesh-audit": cmd_mesh_audit, "export": cmd_export}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except CONFIG_ERRORS as exc:
        print(f"invfem: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"invfem: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"invfem: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
