"""Manufactured cases, convergence studies, invariant checks, and the CLI."""

from .cases import ManufacturedCase, PowerSum, example1, example2, get_example, sine_mode
from .studies import (
    ConvergenceReport,
    DEFAULT_FINE_GRID,
    DEFAULT_TIME_STUDY_SPACE,
    eoc,
    error_norm,
    fine_grid,
    run_single,
    solve_case,
    study_space,
    study_time,
)
from .verify import CheckResult, run_verification

__all__ = [
    "CheckResult",
    "ConvergenceReport",
    "DEFAULT_FINE_GRID",
    "DEFAULT_TIME_STUDY_SPACE",
    "ManufacturedCase",
    "PowerSum",
    "eoc",
    "error_norm",
    "example1",
    "example2",
    "fine_grid",
    "get_example",
    "run_single",
    "run_verification",
    "sine_mode",
    "solve_case",
    "study_space",
    "study_time",
]
