"""Truncation-free stray-field solver based on inverted finite elements.

The whole space is split into a bounded polyhedron ``Omega_0`` meshed with
ordinary P1 tetrahedra and an exterior made of infinite tetrahedra, which is
mapped back onto a graded copy of ``Omega_0`` by a polygonal inversion.
"""

from invfem.errors import (
    AssemblyError,
    ConvergenceError,
    DomainError,
    EnergyBoundError,
    GeometryError,
    InsufficientDataError,
    InvalidConfigurationError,
    InvalidParameterError,
    MeshGenerationError,
    NumericalBreakdownError,
    ResourceError,
    ToleranceNotMetError,
    UnsupportedForCaseError,
)
from invfem.geometry import SpaceDecomposition, build_big_tetra_decomposition
from invfem.meshing import MeshPair, TetMesh, audit_grading, build_mesh_pair
from invfem.femspace import DofSpace, FieldPair, build_dof_space
from invfem.cases import get_case, CASES
from invfem.driver import solve_case

__all__ = [
    "AssemblyError",
    "CASES",
    "ConvergenceError",
    "DofSpace",
    "DomainError",
    "EnergyBoundError",
    "FieldPair",
    "GeometryError",
    "InsufficientDataError",
    "InvalidConfigurationError",
    "InvalidParameterError",
    "MeshGenerationError",
    "MeshPair",
    "NumericalBreakdownError",
    "ResourceError",
    "SpaceDecomposition",
    "TetMesh",
    "ToleranceNotMetError",
    "UnsupportedForCaseError",
    "audit_grading",
    "build_big_tetra_decomposition",
    "build_dof_space",
    "build_mesh_pair",
    "get_case",
    "solve_case",
]

__version__ = "0.1.0"
