"""Bound-preserving, energy-stable lattice schemes for the Allen-Cahn equation."""

from .errors import (
    AllenCahnError,
    ConfigError,
    Extinction,
    InvariantViolation,
    IterationFailure,
    NumericFailure,
    ParameterError,
)
from .grid import BoundaryCondition, GridSpec, ScalarField, apply_stencil, stencil_matrix
from .scheme import SchemeParams, StepReport, advance, derive_params, params_from_ratio, solve_cubic, step
from .diagnostics import (
    EnergyRecord,
    ErrorReport,
    check_energy_monotone,
    check_theorem3_matrix,
    convergence_rates,
    discrete_energy,
    error_norms,
)
from .problems import ProblemKind, ProblemSpec, expected_radius, extract_radius, initial_field
from .config import RunConfig, SchemeKind, load_config, parse_config
from .harness import compare, converge, run, simulate

__version__ = "0.1.0"

__all__ = [
    "AllenCahnError",
    "BoundaryCondition",
    "ConfigError",
    "EnergyRecord",
    "ErrorReport",
    "Extinction",
    "GridSpec",
    "InvariantViolation",
    "IterationFailure",
    "NumericFailure",
    "ParameterError",
    "ProblemKind",
    "ProblemSpec",
    "RunConfig",
    "ScalarField",
    "SchemeKind",
    "SchemeParams",
    "StepReport",
    "advance",
    "apply_stencil",
    "check_energy_monotone",
    "check_theorem3_matrix",
    "compare",
    "converge",
    "convergence_rates",
    "derive_params",
    "discrete_energy",
    "error_norms",
    "expected_radius",
    "extract_radius",
    "initial_field",
    "load_config",
    "params_from_ratio",
    "parse_config",
    "run",
    "simulate",
    "solve_cubic",
    "stencil_matrix",
    "step",
]
