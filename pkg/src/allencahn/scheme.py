"""The lattice-Boltzmann derived implicit-explicit finite-difference scheme.

One step reads

    phi_new + dt/2 f(phi_new) = (1 - 2 d e) phi - dt/2 f(phi) + e * (neighbour sum)

with ``f(phi) = phi^3 - phi`` and ``e = omega1 / s = eps^2 dt / dx^2``.
The right-hand side ``xi`` is explicit and the left-hand side is a cubic in
``phi_new`` with a single real root, so every node is updated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvariantViolation, NumericFailure, ParameterError
from .grid import ScalarField, neighbor_sum, neighbor_sum_field

__all__ = [
    "DEFAULT_OMEGA1",
    "SchemeParams",
    "StepReport",
    "derive_params",
    "params_from_ratio",
    "reaction",
    "xi_at_node",
    "xi_field",
    "solve_cubic",
    "step",
    "advance",
]

# weights used for the reported experiments
DEFAULT_OMEGA1 = {1: 1.0 / 3.0, 2: 1.0 / 5.0, 3: 1.0 / 6.0}


def reaction(phi):
    """``f(phi) = phi^3 - phi``."""
    return phi * phi * phi - phi


@dataclass(frozen=True)
class SchemeParams:
    """Scheme coefficients and their stability status.

    ``violations`` names every failed condition of
    ``0 < omega1 <= 1/(2d)``, ``s > 1`` and ``dt <= 1 - 2 d omega1 / s``.
    ``unsafe`` marks parameters accepted despite violations.
    """

    d: int
    omega1: float
    s: float
    dx: float
    dt: float
    eps_interface: float
    eps_ratio: float
    c: float
    violations: tuple[str, ...] = ()
    unsafe: bool = False

    @property
    def omega0(self) -> float:
        return 1.0 - 2 * self.d * self.omega1

    @property
    def cs2(self) -> float:
        """Lattice sound speed squared, ``2 omega1 c^2``."""
        return 2.0 * self.omega1 * self.c**2

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def dt_bound(self) -> float:
        """Largest time step allowed by the bound-preservation conditions."""
        return 1.0 - 2 * self.d * self.eps_ratio


def _violations(d, omega1, s, dt) -> tuple[str, ...]:
    out = []
    if not 0.0 < omega1 <= 1.0 / (2 * d):
        out.append(f"0 < omega1 <= 1/(2d): omega1={omega1:.6g}, 1/(2d)={1/(2*d):.6g}")
    if not s > 1.0:
        out.append(f"s > 1: s={s:.6g}")
    bound = 1.0 - 2 * d * omega1 / s
    if not dt <= bound:
        out.append(f"dt <= 1 - 2d*omega1/s: dt={dt:.6g}, bound={bound:.6g}")
    return tuple(out)


def _finish(d, omega1, s, dx, dt, eps_interface, eps_ratio, allow_unsafe):
    violations = _violations(d, omega1, s, dt)
    if violations and not allow_unsafe:
        raise ParameterError(
            "stability conditions violated: " + "; ".join(violations),
            conditions=violations,
        )
    return SchemeParams(
        d=d,
        omega1=omega1,
        s=s,
        dx=dx,
        dt=dt,
        eps_interface=eps_interface,
        eps_ratio=eps_ratio,
        c=dx / dt,
        violations=violations,
        unsafe=bool(violations),
    )


def derive_params(
    d: int,
    omega1: float | None,
    eps_interface: float,
    dx: float,
    dt: float,
    *,
    allow_unsafe: bool = False,
) -> SchemeParams:
    """Derive ``eps_ratio = eps^2 dt / dx^2`` and ``s = omega1 / eps_ratio``.

    Raises:
        ParameterError: if a stability condition fails and ``allow_unsafe``
            is false. With ``allow_unsafe`` the params are returned with
            ``unsafe=True`` and the failures listed in ``violations``.
    """
    if omega1 is None:
        omega1 = DEFAULT_OMEGA1[d]
    for name, value in (("omega1", omega1), ("eps_interface", eps_interface),
                        ("dx", dx), ("dt", dt)):
        if not value > 0:
            raise ParameterError(f"{name} must be positive, got {value}", (name,))
    eps_ratio = eps_interface**2 * dt / dx**2
    s = omega1 / eps_ratio
    return _finish(d, omega1, s, dx, dt, eps_interface, eps_ratio, allow_unsafe)


def params_from_ratio(
    d: int,
    eps_ratio: float,
    dx: float,
    dt: float,
    omega1: float | None = None,
    *,
    allow_unsafe: bool = False,
) -> SchemeParams:
    """Build params from the stencil weight ``eps_ratio`` directly.

    The interfacial parameter follows from ``eps^2 = eps_ratio dx^2 / dt``.
    """
    if omega1 is None:
        omega1 = DEFAULT_OMEGA1[d]
    if not eps_ratio > 0 or not dx > 0 or not dt > 0:
        raise ParameterError("eps_ratio, dx and dt must be positive", ("positivity",))
    eps_interface = math.sqrt(eps_ratio * dx * dx / dt)
    s = omega1 / eps_ratio
    return _finish(d, omega1, s, dx, dt, eps_interface, eps_ratio, allow_unsafe)


@dataclass(frozen=True)
class StepReport:
    """Summary of one or more steps.

    ``xi_range`` spans every node and step covered by the report;
    ``newton_fallback_count`` counts extra Newton iterations beyond the
    single polish step.
    """

    max_abs: float
    xi_range: tuple[float, float]
    newton_fallback_count: int = 0
    steps: int = 1


def xi_at_node(field: ScalarField, node, params: SchemeParams) -> float:
    """Explicit right-hand side at one node (storage index)."""
    node = tuple(np.atleast_1d(node))
    x = float(field.data[node])
    e = params.eps_ratio
    return (1.0 - 2 * params.d * e) * x - 0.5 * params.dt * reaction(x) + e * neighbor_sum(field, node)


def xi_field(field: ScalarField, params: SchemeParams) -> np.ndarray:
    """Explicit right-hand side at every node."""
    u = field.data
    e = params.eps_ratio
    return (1.0 - 2 * params.d * e) * u - 0.5 * params.dt * reaction(u) + e * neighbor_sum_field(field)


def solve_cubic(xi, dt: float):
    """Unique real root of ``theta + dt/2 (theta^3 - theta) = xi``.

    Accepts a scalar or an array of ``xi``. For ``|xi| <= 1`` the root lies
    in ``[-1, 1]``.

    Raises:
        ValueError: unless ``0 < dt < 2``; outside that range the cubic may
            have three real roots.
    """
    if not 0.0 < dt < 2.0:
        raise ValueError(f"cubic solve needs 0 < dt < 2, got dt={dt}")
    if np.isscalar(xi):
        return float(_kernels.solve_node(float(xi), float(dt))[0])
    xi = np.ascontiguousarray(xi, dtype=np.float64)
    return _kernels.cubic_root_array(xi, float(dt))


def _check_status(status, data, stats, validate):
    if status == _kernels.STATUS_NONFINITE or not np.isfinite(data).all():
        bad = np.argwhere(~np.isfinite(data))
        node = tuple(int(i) for i in bad[0]) if len(bad) else None
        raise NumericFailure(f"non-finite value at node {node}", node=node)
    if status == _kernels.STATUS_XI_RANGE:
        raise InvariantViolation(
            f"explicit right-hand side left [-1, 1]: range ({stats[0]:.17g}, {stats[1]:.17g})"
        )


def advance(
    field: ScalarField,
    params: SchemeParams,
    n_steps: int = 1,
    *,
    validate: bool | None = None,
) -> tuple[ScalarField, StepReport]:
    """Take ``n_steps`` steps in compiled code.

    With ``validate`` (default: ``not params.unsafe``) a right-hand side
    outside ``[-1, 1]`` raises :class:`InvariantViolation`.
    """
    if not 0.0 < params.dt < 2.0:
        raise ValueError(f"cubic solve needs 0 < dt < 2, got dt={params.dt}")
    if params.d != field.spec.d:
        raise ValueError("params and field dimensions differ")
    if validate is None:
        validate = not params.unsafe
    spec = field.spec
    p = np.pad(field.data, 1)
    q = np.zeros_like(p)
    stats = np.array([np.inf, -np.inf, 0.0, 0.0, 0.0])
    bc = _kernels.BC_CODES[spec.bc.value]
    kernel = _kernels.ADVANCE[spec.d]
    done, out = kernel(p, q, params.eps_ratio, params.dt, bc, int(n_steps), bool(validate), stats)
    interior = out[(slice(1, -1),) * spec.d].copy()
    status = int(stats[4])
    _check_status(status, interior, stats, validate)
    report = StepReport(
        max_abs=float(np.abs(interior).max()),
        xi_range=(float(stats[0]), float(stats[1])),
        newton_fallback_count=int(stats[3]),
        steps=int(done),
    )
    return ScalarField(spec, interior), report


def step(field: ScalarField, params: SchemeParams, *, validate: bool | None = None):
    """One step; returns the new field and its :class:`StepReport`."""
    return advance(field, params, 1, validate=validate)
