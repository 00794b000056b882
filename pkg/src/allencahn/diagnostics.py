"""Discrete energy, monitors, error norms and convergence rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ._kernels import energy_terms
from .grid import BoundaryCondition, GridSpec, ScalarField, laplacian_array, stencil_matrix
from .scheme import SchemeParams

__all__ = [
    "EnergyRecord",
    "ErrorReport",
    "MatrixVerdict",
    "Verdict",
    "check_energy_monotone",
    "check_max_principle",
    "check_theorem3_matrix",
    "convergence_rates",
    "discrete_energy",
    "error_norms",
]

# largest system assembled by check_theorem3_matrix
MAX_ASSEMBLED_NODES = 4096


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    energy: float
    max_abs: float

    def __post_init__(self):
        if not math.isfinite(self.energy):
            raise ValueError(f"energy must be finite, got {self.energy}")
        if not self.max_abs >= 0:
            raise ValueError(f"max_abs must be non-negative, got {self.max_abs}")


@dataclass(frozen=True)
class Verdict:
    """Outcome of a sequence check; ``index`` is the first offending record."""

    passed: bool
    index: int | None = None
    worst: float = 0.0
    detail: str = ""

    def __bool__(self):
        return self.passed


def discrete_energy(field: ScalarField, params: SchemeParams) -> float:
    """``dx^d [1/4 sum (phi^2 - 1)^2 - e / (2 dt) * Phi . (Lambda Phi)]``.

    Both sums use compensated accumulation so that step-to-step differences
    near round-off are meaningful.
    """
    spec = field.spec
    if params.d != spec.d:
        raise ValueError("params and field dimensions differ")
    u = field.data
    lam_u = laplacian_array(u, spec.bc)
    bulk, quad = energy_terms(u.ravel(), lam_u.ravel())
    coef = params.eps_ratio / (2.0 * params.dt)
    return spec.dx**spec.d * (0.25 * bulk - coef * quad)


def _energies(records) -> np.ndarray:
    return np.array([r.energy if isinstance(r, EnergyRecord) else float(r) for r in records])


def check_energy_monotone(records: Sequence, tol: float | None = None) -> Verdict:
    """Pass iff every consecutive energy difference is at most ``tol``.

    ``records`` holds :class:`EnergyRecord` or plain energies. The default
    tolerance is ``1e-12 * max |E|``.
    """
    energies = _energies(records)
    if energies.size == 0:
        raise ValueError("no energy records")
    if tol is None:
        tol = 1e-12 * float(np.abs(energies).max())
    diffs = np.diff(energies)
    if diffs.size == 0:
        return Verdict(True)
    worst = float(diffs.max())
    bad = np.flatnonzero(diffs > tol)
    if bad.size:
        i = int(bad[0]) + 1
        return Verdict(False, i, worst, f"energy rose by {diffs[i - 1]:.3e} at record {i}")
    return Verdict(True, None, worst)


def check_max_principle(records: Sequence[EnergyRecord], tol: float = 1e-13) -> Verdict:
    """Pass iff ``max_abs <= 1 + tol`` for every record."""
    values = np.array([r.max_abs for r in records])
    if values.size == 0:
        raise ValueError("no records")
    bad = np.flatnonzero(values > 1.0 + tol)
    worst = float(values.max())
    if bad.size:
        i = int(bad[0])
        return Verdict(False, i, worst, f"max norm {values[i]:.17g} at record {i}")
    return Verdict(True, None, worst)


@dataclass(frozen=True)
class MatrixVerdict:
    """Result of :func:`check_theorem3_matrix`.

    ``dominant`` uses weak row dominance for HN and P and strict row
    dominance for HD. ``passed`` requires symmetry, dominance and a positive
    smallest eigenvalue.
    """

    symmetric: bool
    dominant: bool
    positive_definite: bool
    min_eigenvalue: float
    dt_bound: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.symmetric and self.dominant and self.positive_definite

    def __bool__(self):
        return self.passed


def check_theorem3_matrix(params: SchemeParams, spec: GridSpec) -> MatrixVerdict:
    """Assemble ``M = (4 - dt) I + 2 e Lambda`` and test it.

    The dissipation argument needs ``M`` positive definite, which follows
    from diagonal dominance when ``dt <= 4 (1 - 2 d e)`` (strict for HD).
    """
    if spec.size > MAX_ASSEMBLED_NODES:
        raise ValueError(f"grid has {spec.size} nodes; at most {MAX_ASSEMBLED_NODES} can be assembled")
    if params.d != spec.d:
        raise ValueError("params and grid dimensions differ")
    e, dt = params.eps_ratio, params.dt
    lam = stencil_matrix(spec)
    m = (4.0 - dt) * np.eye(spec.size) + 2.0 * e * lam
    symmetric = bool(np.array_equal(m, m.T))
    diag = np.diag(m)
    off = np.abs(m).sum(axis=1) - np.abs(diag)
    # round-off allowance so the boundary case dt = 4 (1 - 2 d e) is decided exactly
    slack = 1e-12 * float(np.abs(m).max())
    if spec.bc is BoundaryCondition.HD:
        dominant = bool(np.all(diag - off > slack))
    else:
        dominant = bool(np.all(diag - off >= -slack))
    min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.T)).min())
    positive = min_eig > 0.0
    notes = []
    if not symmetric:
        notes.append("not symmetric")
    if not dominant:
        row = int(np.argmin(diag - off))
        notes.append(f"row {row} not dominant: diag {diag[row]:.6g}, off-diagonal sum {off[row]:.6g}")
    if not positive:
        notes.append(f"smallest eigenvalue {min_eig:.3e}")
    return MatrixVerdict(
        symmetric=symmetric,
        dominant=dominant,
        positive_definite=positive,
        min_eigenvalue=min_eig,
        dt_bound=4.0 * (1.0 - 2 * spec.d * e),
        detail="; ".join(notes),
    )


@dataclass(frozen=True)
class ErrorReport:
    dx: float
    err_inf: float
    err_l2: float
    cr_inf: float | None = None
    cr_l2: float | None = None

    def __post_init__(self):
        if not (self.err_inf >= 0 and self.err_l2 >= 0):
            raise ValueError("errors must be non-negative")


def error_norms(numeric: ScalarField, reference, *, normalize: bool = False) -> tuple[float, float]:
    """Max norm and ``dx^(d/2)``-weighted l2 norm of ``numeric - reference``.

    ``reference`` is a field on the same grid or an array of the grid shape.
    With ``normalize`` the l2 norm is further divided by ``length^(d/2)``,
    giving a root-mean-square over the domain.
    """
    spec = numeric.spec
    if isinstance(reference, ScalarField):
        if reference.spec != spec:
            raise ValueError("fields live on different grids")
        ref = reference.data
    else:
        ref = np.asarray(reference, dtype=float)
        if ref.shape != spec.shape:
            raise ValueError(f"reference shape {ref.shape} does not match grid {spec.shape}")
    diff = numeric.data - ref
    err_inf = float(np.abs(diff).max())
    weight = spec.dx**spec.d
    if normalize:
        weight /= spec.length**spec.d
    err_l2 = math.sqrt(weight * float(np.sum(diff * diff)))
    return err_inf, err_l2


def _rate(e1, e2, ratio):
    if e1 == 0 or e2 == 0:
        return None
    return math.log(e1 / e2) / math.log(ratio)


def convergence_rates(reports: Sequence[ErrorReport], *, require_halving: bool = True) -> list[ErrorReport]:
    """Fill ``cr_inf`` and ``cr_l2`` from consecutive levels.

    The rate is ``log(E_coarse / E_fine) / log(dx_coarse / dx_fine)``, which is
    the base-2 logarithm under halving. Rates involving a zero error are left
    absent.

    Raises:
        ValueError: with ``require_halving`` if some spacing does not halve.
    """
    out = list(reports[:1])
    for prev, cur in zip(reports, reports[1:]):
        ratio = prev.dx / cur.dx
        if require_halving and abs(ratio - 2.0) > 1e-9:
            raise ValueError(f"spacing {prev.dx} -> {cur.dx} is not a halving")
        if not ratio > 1.0:
            raise ValueError(f"spacing must decrease, got {prev.dx} -> {cur.dx}")
        out.append(
            replace(
                cur,
                cr_inf=_rate(prev.err_inf, cur.err_inf, ratio),
                cr_l2=_rate(prev.err_l2, cur.err_l2, ratio),
            )
        )
    if out:
        out[0] = replace(out[0], cr_inf=None, cr_l2=None)
    return out
