"""Experiment orchestration: single runs, convergence studies and comparisons.

Every entry point returns plain data and, unless told otherwise, writes its
tables to ``config.output_dir``:

* ``energy.csv``: ``step,t,energy,max_abs``
* ``snapshot_<step>.csv``: ``i[,j[,k]],x[,y[,z]],phi`` (or ``.acef`` binary in 3D)
* ``radius.csv``: ``step,t,radius,expected`` for the circle and sphere
* ``summary.json``: final norms, verdicts, wall time
* ``convergence.csv`` and ``comparison.csv`` for the multi-run drivers

Files are written to a temporary name and renamed, so a reader never sees a
partial table.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import cn_step, fex_fd_step
from .config import DtRule, RunConfig, SchemeKind
from .diagnostics import (
    EnergyRecord,
    ErrorReport,
    Verdict,
    check_energy_monotone,
    check_max_principle,
    convergence_rates,
    discrete_energy,
    error_norms,
)
from .errors import ConfigError, Extinction, InvariantViolation, NumericFailure
from .grid import GridSpec, ScalarField
from .kinetic import LatticeModel, equilibrium_field, kinetic_step, moment_phi
from .problems import (
    ProblemKind,
    expected_radius,
    extract_radius,
    initial_field,
    traveling_wave_exact,
)
from .scheme import SchemeParams, advance

__all__ = [
    "RunResult",
    "ComparisonRow",
    "simulate",
    "run",
    "converge",
    "compare",
    "exact_solution",
    "restrict",
    "write_snapshot_csv",
    "write_snapshot_binary",
    "read_snapshot_binary",
]

# validated-mode bounds
MAX_NORM_TOL = 1e-13
ENERGY_REL_TOL = 1e-12

BINARY_MAGIC = b"ACEF"


class _Stepper:
    """Uniform ``advance(n)`` interface over the four schemes."""

    def __init__(self, config: RunConfig, params: SchemeParams, field0: ScalarField):
        self.config = config
        self.params = params
        self.kind = config.scheme
        self.validate = not config.allow_unsafe
        self.max_abs_seen = field0.max_abs()
        if self.kind is SchemeKind.KINETIC:
            self.model = LatticeModel.from_params(params)
            self.state = equilibrium_field(field0, self.model)
        else:
            self.state = field0
        self.field = field0

    def advance(self, n: int) -> ScalarField:
        kind = self.kind
        if kind is SchemeKind.RLB_MIE_FD:
            self.field, report = advance(self.field, self.params, n, validate=self.validate)
            self.max_abs_seen = max(self.max_abs_seen, report.max_abs)
            return self.field
        for _ in range(n):
            if kind is SchemeKind.FEX_FD:
                self.field = fex_fd_step(self.field, self.params)
            elif kind is SchemeKind.CN:
                self.field = cn_step(self.field, self.params, self.config.newton_tol)
            else:
                self.state = kinetic_step(self.state, self.params, self.model, validate=self.validate)
                self.field = moment_phi(self.state)
            self.max_abs_seen = max(self.max_abs_seen, self.field.max_abs())
        return self.field


@dataclass
class RunResult:
    """Everything a run produced.

    ``status`` is ``ok``, ``invariant_violated`` or ``numeric_failure``.
    ``error`` holds ``(err_inf, err_l2)`` against the exact solution when one
    exists.
    """

    config: RunConfig
    params: SchemeParams
    field: ScalarField | None
    steps: int
    t_final: float
    records: list[EnergyRecord] = field(default_factory=list)
    record_steps: list[int] = field(default_factory=list)
    snapshots: dict[int, ScalarField] = field(default_factory=dict)
    radii: list[tuple[int, float, float, float]] = field(default_factory=list)
    max_abs_max: float = 0.0
    energy_verdict: Verdict | None = None
    max_verdict: Verdict | None = None
    error: tuple[float, float] | None = None
    wall_time: float = 0.0
    status: str = "ok"
    message: str = ""

    def summary(self) -> dict:
        cfg = self.config
        out = {
            "status": self.status,
            "message": self.message,
            "problem": cfg.problem.kind.value,
            "scheme": cfg.scheme.value,
            "d": cfg.grid.d,
            "bc": cfg.grid.bc.value,
            "n": cfg.grid.n,
            "nbar": cfg.grid.nbar,
            "dx": cfg.grid.dx,
            "dt": cfg.dt,
            "eps_interface": self.params.eps_interface,
            "eps_ratio": self.params.eps_ratio,
            "omega1": self.params.omega1,
            "s": self.params.s,
            "unsafe": self.params.unsafe,
            "violations": list(self.params.violations),
            "seed": cfg.problem.seed,
            "steps": self.steps,
            "t_final": self.t_final,
            "max_abs_max": self.max_abs_max,
            "final_energy": self.records[-1].energy if self.records else None,
            "wall_time_s": self.wall_time,
        }
        if self.max_verdict is not None:
            out["max_principle"] = "PASS" if self.max_verdict.passed else "FAIL"
            out["max_principle_first_violation"] = self.max_verdict.index
        if self.energy_verdict is not None:
            out["energy_monotone"] = "PASS" if self.energy_verdict.passed else "FAIL"
            out["energy_first_violation"] = self.energy_verdict.index
        if self.error is not None:
            out["err_inf"], out["err_l2"] = self.error
        if self.radii:
            out["final_radius"] = self.radii[-1][2]
            out["expected_radius"] = self.radii[-1][3]
        return out


def exact_solution(config: RunConfig, spec: GridSpec, t: float) -> np.ndarray | None:
    """Exact solution on ``spec`` at time ``t``, or ``None`` if there is none."""
    if config.problem.kind is ProblemKind.TRAVELING_WAVE:
        return traveling_wave_exact(spec.coordinates()[0], t, config.problem.eps_interface)
    return None


def _radius_row(config: RunConfig, step: int, t: float, f: ScalarField):
    try:
        r = extract_radius(f)
    except Extinction:
        r = math.nan
    try:
        expected = expected_radius(t, config.problem.radius, config.problem.eps_interface, config.grid.d)
    except Extinction:
        expected = 0.0
    return (step, t, r, expected)


def _stops(config: RunConfig, n_steps: int, track: bool) -> list[int]:
    stops = {n_steps}
    if track:
        stops.update(range(config.energy_every, n_steps, config.energy_every))
    stops.update(round(t / config.dt) for t in config.snapshot_times)
    stops.discard(0)
    return sorted(stops)


def simulate(config: RunConfig, *, track: bool = True) -> RunResult:
    """Run ``config`` in memory.

    With ``track`` the energy and max norm are recorded every
    ``energy_every`` steps and, in validated mode, checked as they are
    produced: a max norm above ``1 + 1e-13`` or an energy increase above
    ``1e-12 max(1, |E|)`` stops the run with status ``invariant_violated``.
    Numeric failures stop it with status ``numeric_failure``. The partial
    result is returned in both cases; nothing is raised.
    """
    params = config.params()
    spec = config.grid
    f0 = initial_field(config.problem, spec)
    n_steps = config.n_steps
    result = RunResult(config, params, f0, 0, 0.0)
    curvature = config.problem.kind in (ProblemKind.CIRCLE_2D, ProblemKind.SPHERE_3D)
    snapshot_steps = {round(t / config.dt) for t in config.snapshot_times}
    validate = not config.allow_unsafe
    start = time.perf_counter()

    def observe(step: int, f: ScalarField):
        t = step * config.dt
        if step in snapshot_steps:
            result.snapshots[step] = f
        if not track:
            return
        energy = discrete_energy(f, params)
        if not math.isfinite(energy):
            raise NumericFailure(f"energy overflowed at step {step}")
        rec = EnergyRecord(t, energy, f.max_abs())
        prev = result.records[-1] if result.records else None
        result.records.append(rec)
        result.record_steps.append(step)
        if curvature:
            result.radii.append(_radius_row(config, step, t, f))
        if validate:
            if stepper.max_abs_seen > 1.0 + MAX_NORM_TOL:
                raise InvariantViolation(
                    f"max norm {stepper.max_abs_seen:.17g} exceeds 1 by step {step}"
                )
            if prev is not None and rec.energy - prev.energy > ENERGY_REL_TOL * max(1.0, abs(prev.energy)):
                raise InvariantViolation(
                    f"energy rose from {prev.energy:.17g} to {rec.energy:.17g} at step {step}"
                )

    stepper = _Stepper(config, params, f0)
    current = 0
    try:
        observe(0, f0)
        for stop in _stops(config, n_steps, track):
            f = stepper.advance(stop - current)
            current = stop
            result.field, result.steps = f, current
            observe(current, f)
    except InvariantViolation as exc:
        result.status, result.message = "invariant_violated", str(exc)
        result.steps = current
    except NumericFailure as exc:
        result.status, result.message = "numeric_failure", str(exc)
        result.field = None
    result.t_final = result.steps * config.dt
    result.wall_time = time.perf_counter() - start
    result.max_abs_max = stepper.max_abs_seen
    if result.records:
        result.max_verdict = check_max_principle(result.records, MAX_NORM_TOL)
        result.energy_verdict = check_energy_monotone(result.records)
    if result.field is not None and result.status == "ok":
        exact = exact_solution(config, spec, result.t_final)
        if exact is not None:
            result.error = error_norms(result.field, exact, normalize=config.normalize_l2)
    return result


def _atomic_write(path: Path, data: bytes | str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode, **({} if isinstance(data, bytes) else {"encoding": "utf-8", "newline": ""})) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.17g}"


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def write_snapshot_csv(path, f: ScalarField) -> None:
    """One row per stored node: storage indices, coordinates, value."""
    spec = f.spec
    names = "ijk"[: spec.d]
    coords = [c.ravel() for c in spec.coordinates()]
    index = np.indices(spec.shape).reshape(spec.d, -1)
    header = list(names) + list("xyz"[: spec.d]) + ["phi"]
    values = f.data.ravel()
    lines = [",".join(header)]
    for n in range(spec.size):
        parts = [str(int(index[a, n])) for a in range(spec.d)]
        parts += [f"{coords[a][n]:.17g}" for a in range(spec.d)]
        parts.append(f"{values[n]:.17g}")
        lines.append(",".join(parts))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def write_snapshot_binary(path, f: ScalarField) -> None:
    """``ACEF`` header (magic, u32 d, u32 nbar, u32 0), then float64 values, little-endian."""
    header = BINARY_MAGIC + struct.pack("<III", f.spec.d, f.spec.nbar, 0)
    _atomic_write(Path(path), header + f.data.astype("<f8").tobytes(order="C"))


def read_snapshot_binary(path) -> np.ndarray:
    """Inverse of :func:`write_snapshot_binary`; returns the shaped array."""
    raw = Path(path).read_bytes()
    if raw[:4] != BINARY_MAGIC:
        raise ValueError(f"{path} is not an ACEF snapshot")
    d, nbar, _ = struct.unpack("<III", raw[4:16])
    return np.frombuffer(raw[16:], dtype="<f8").reshape((nbar,) * d)


def write_run_outputs(result: RunResult, out_dir: Path | None = None) -> Path:
    """Write the energy, snapshot, radius and summary files of a run."""
    cfg = result.config
    out = Path(out_dir or cfg.output_dir)
    rows = [(s, r.t, r.energy, r.max_abs) for s, r in zip(result.record_steps, result.records)]
    _atomic_write(out / "energy.csv", _csv_text(["step", "t", "energy", "max_abs"], rows))
    for step, snap in sorted(result.snapshots.items()):
        if cfg.snapshot_format == "binary":
            write_snapshot_binary(out / f"snapshot_{step:08d}.acef", snap)
        else:
            write_snapshot_csv(out / f"snapshot_{step:08d}.csv", snap)
    if result.radii:
        _atomic_write(out / "radius.csv", _csv_text(["step", "t", "radius", "expected"], result.radii))
    _atomic_write(out / "summary.json", json.dumps(result.summary(), indent=2, allow_nan=True) + "\n")
    return out


def run(config: RunConfig, *, write: bool = True) -> RunResult:
    """Simulate ``config`` and write its outputs."""
    result = simulate(config)
    if write:
        write_run_outputs(result)
    return result


def _axis_weights(coarse: np.ndarray, fine: np.ndarray):
    """Linear interpolation indices and weights of ``coarse`` points in ``fine``."""
    h = fine[1] - fine[0] if len(fine) > 1 else 1.0
    pos = (coarse - fine[0]) / h
    near = np.rint(pos)
    exact = np.abs(pos - near) < 1e-9
    lo = np.where(exact, near, np.floor(pos)).astype(int)
    lo = np.clip(lo, 0, len(fine) - 1)
    w = np.where(exact, 0.0, pos - np.floor(pos))
    hi = np.clip(lo + 1, 0, len(fine) - 1)
    if np.any((pos < -1e-9) | (pos > len(fine) - 1 + 1e-9)):
        raise ValueError("coarse grid extends beyond the reference grid")
    return lo, hi, w


def restrict(fine: ScalarField, coarse: GridSpec) -> ScalarField:
    """Sample ``fine`` at the nodes of ``coarse``.

    Coincident nodes are copied; otherwise values are interpolated linearly
    along each axis. Coarse HN nodes outside the fine node range (the
    half-cell ghost positions) are mirrored about the nearest face first.
    """
    if fine.spec.d != coarse.d or fine.spec.bc is not coarse.bc:
        raise ValueError("grids differ in dimension or boundary condition")
    values = fine.data
    for axis in range(coarse.d):
        x = coarse.axis_coordinates(axis)
        if coarse.bc.value == "HN":
            left = coarse.origin[axis]
            right = left + coarse.length
            x = np.where(x < left, 2 * left - x, x)
            x = np.where(x > right, 2 * right - x, x)
        lo, hi, w = _axis_weights(x, fine.spec.axis_coordinates(axis))
        shape = [1] * coarse.d
        shape[axis] = -1
        w = w.reshape(shape)
        values = (1 - w) * np.take(values, lo, axis=axis) + w * np.take(values, hi, axis=axis)
    return ScalarField(coarse, values)


def _raise_failed(result: RunResult):
    if result.status == "invariant_violated":
        raise InvariantViolation(result.message)
    if result.status == "numeric_failure":
        raise NumericFailure(result.message)


def converge(
    base: RunConfig,
    levels: int | None = None,
    dt_rule: DtRule | str | None = None,
    *,
    dx_levels: Sequence[float] | None = None,
    reference: tuple[float, float] | None = None,
    write: bool = True,
) -> list[ErrorReport]:
    """Convergence table over a sequence of grids.

    Level spacings are ``dx / 2^k`` for ``k < levels`` unless ``dx_levels``
    (argument or config) lists them. The step follows ``dt_rule``:
    ``fixed_ratio_dx2`` keeps ``dt / dx^2`` fixed, ``fixed`` keeps ``dt``.
    Errors are taken against the exact solution when the problem has one,
    otherwise against a reference run at ``reference = (dx, dt)`` (argument
    or config), otherwise against the finest level.

    Raises:
        InvariantViolation, NumericFailure: if any run fails.
    """
    dt_rule = DtRule(dt_rule) if dt_rule is not None else base.dt_rule
    explicit = list(dx_levels if dx_levels is not None else base.dx_levels)
    if explicit:
        spacings = explicit
    else:
        if levels is None or levels < 2:
            raise ConfigError("a convergence study needs at least two levels")
        spacings = [base.grid.dx / 2**k for k in range(levels)]
    if len(spacings) < 2:
        raise ConfigError("a convergence study needs at least two levels")

    def level_dt(dx):
        if dt_rule is DtRule.FIXED:
            return base.dt
        return base.dt * (dx / base.grid.dx) ** 2

    if reference is None and base.reference_dx is not None:
        reference = (base.reference_dx, base.reference_dt or level_dt(base.reference_dx))

    runs = []
    for dx in spacings:
        cfg = base.at_resolution(dx, level_dt(dx))
        res = simulate(cfg, track=False)
        _raise_failed(res)
        runs.append((cfg, res))

    has_exact = exact_solution(base, base.grid, 0.0) is not None
    ref_field = None
    if not has_exact:
        if reference is not None:
            ref_cfg = base.at_resolution(*reference)
            ref_res = simulate(ref_cfg, track=False)
            _raise_failed(ref_res)
            ref_field = ref_res.field
        else:
            ref_field = runs[-1][1].field
            runs = runs[:-1]

    reports = []
    for cfg, res in runs:
        if has_exact:
            target = exact_solution(cfg, cfg.grid, res.t_final)
        else:
            target = restrict(ref_field, cfg.grid)
        e_inf, e_l2 = error_norms(res.field, target, normalize=base.normalize_l2)
        reports.append(ErrorReport(cfg.grid.dx, e_inf, e_l2))
    reports = convergence_rates(reports, require_halving=not explicit)
    if write:
        rows = [
            (r.dx, cfg.dt, r.err_inf, r.err_l2, r.cr_inf, r.cr_l2)
            for r, (cfg, _) in zip(reports, runs)
        ]
        _atomic_write(
            Path(base.output_dir) / "convergence.csv",
            _csv_text(["dx", "dt", "err_inf", "err_l2", "cr_inf", "cr_l2"], rows),
        )
    return reports


@dataclass(frozen=True)
class ComparisonRow:
    scheme: str
    dt: float
    steps: int
    status: str
    err_inf: float | None
    err_l2: float | None
    max_abs_max: float
    final_energy: float | None
    max_principle: bool | None
    energy_monotone: bool | None


def compare(configs: Sequence[RunConfig], *, write: bool = True, out_dir=None) -> list[ComparisonRow]:
    """Run several schemes or steps on one problem and grid, side by side.

    A run that blows up is reported with status ``numeric_failure`` and an
    infinite error instead of aborting the comparison.
    """
    if not configs:
        raise ConfigError("nothing to compare")
    first = configs[0]
    for cfg in configs[1:]:
        if cfg.problem != first.problem or cfg.grid != first.grid:
            raise ConfigError("compared runs must share problem and grid")
    rows = []
    for cfg in configs:
        res = simulate(cfg)
        blown = res.status == "numeric_failure"
        err = res.error or ((math.inf, math.inf) if blown else (None, None))
        rows.append(
            ComparisonRow(
                scheme=cfg.scheme.value,
                dt=cfg.dt,
                steps=res.steps,
                status=res.status,
                err_inf=err[0],
                err_l2=err[1],
                max_abs_max=res.max_abs_max,
                final_energy=res.records[-1].energy if res.records else None,
                max_principle=res.max_verdict.passed if res.max_verdict else None,
                energy_monotone=res.energy_verdict.passed if res.energy_verdict else None,
            )
        )
    if write:
        header = ["scheme", "dt", "steps", "status", "err_inf", "err_l2", "max_abs_max",
                  "final_energy", "max_principle", "energy_monotone"]
        body = [
            (r.scheme, r.dt, r.steps, r.status, r.err_inf, r.err_l2, r.max_abs_max, r.final_energy,
             "" if r.max_principle is None else ("PASS" if r.max_principle else "FAIL"),
             "" if r.energy_monotone is None else ("PASS" if r.energy_monotone else "FAIL"))
            for r in rows
        ]
        _atomic_write(Path(out_dir or first.output_dir) / "comparison.csv", _csv_text(header, body))
    return rows
