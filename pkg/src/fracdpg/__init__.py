"""Petrov-Galerkin time stepping with 1D continuous finite elements for
time-fractional subdiffusion on graded time meshes."""

from .fem1d import (
    FESpace,
    SpatialOperators,
    assemble_mass,
    assemble_operators,
    assemble_stiffness,
    build_space,
    evaluate,
    l2_norm_error,
    load_vector,
    ritz_project,
)
from .kernel import (
    FractionalParams,
    HistoryBlock,
    Interval,
    TemporalBasis,
    caputo_apply,
    frac_integral_monomial,
    history_block_disjoint,
    history_block_local,
    history_blocks_for_slab,
    memory_bilinear_matrix,
    shifted_legendre_coeffs,
    weight,
)
from .stepper import (
    DpgStepper,
    ForcingTerm,
    PowerForcing,
    ProblemSpec,
    QuadratureConfig,
    SingularSlabSystemError,
    SlabSolution,
    StabilityResult,
    Trajectory,
    evaluate_at,
    solve,
    stability_functional,
)
from .time_mesh import MeshBoundsReport, TimeMesh, build_graded, check_mesh_bounds

__version__ = "0.1.0"

__all__ = [
    "DpgStepper",
    "FESpace",
    "ForcingTerm",
    "FractionalParams",
    "HistoryBlock",
    "Interval",
    "MeshBoundsReport",
    "PowerForcing",
    "ProblemSpec",
    "QuadratureConfig",
    "SingularSlabSystemError",
    "SlabSolution",
    "SpatialOperators",
    "StabilityResult",
    "TemporalBasis",
    "TimeMesh",
    "Trajectory",
    "assemble_mass",
    "assemble_operators",
    "assemble_stiffness",
    "build_graded",
    "build_space",
    "caputo_apply",
    "check_mesh_bounds",
    "evaluate",
    "evaluate_at",
    "frac_integral_monomial",
    "history_block_disjoint",
    "history_block_local",
    "history_blocks_for_slab",
    "l2_norm_error",
    "load_vector",
    "memory_bilinear_matrix",
    "ritz_project",
    "shifted_legendre_coeffs",
    "solve",
    "stability_functional",
    "weight",
]
