"""Regularized lattice Boltzmann evolution on the DdQ(2d+1) lattice.

This path carries all ``2d + 1`` distributions and streams equilibria plus a
regularized non-equilibrium part built from first-order gradients. Its
zeroth moment must follow the macroscopic scheme in :mod:`allencahn.scheme`
exactly, which makes it an independent check of that scheme. It is slower
and is not meant for production runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation
from .grid import GridSpec, ScalarField, padded, _check_node, _shifted
from .scheme import SchemeParams, reaction, solve_cubic
from ._kernels import XI_TOL

__all__ = [
    "LatticeModel",
    "DistributionField",
    "equilibrium",
    "equilibrium_field",
    "gradient_upwind",
    "kinetic_step",
    "moment_phi",
]


@dataclass(frozen=True)
class LatticeModel:
    """Velocities ``c_0 = 0``, ``c_k = c e_k``, ``c_{k+d} = -c e_k`` and weights."""

    d: int
    omega1: float
    c: float = 1.0

    @classmethod
    def from_params(cls, params: SchemeParams) -> "LatticeModel":
        return cls(params.d, params.omega1, params.c)

    @property
    def q(self) -> int:
        return 2 * self.d + 1

    @property
    def velocities(self) -> np.ndarray:
        e = np.eye(self.d)
        return self.c * np.vstack([np.zeros((1, self.d)), e, -e])

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.q, self.omega1)
        w[0] = 1.0 - 2 * self.d * self.omega1
        return w

    @property
    def cs2(self) -> float:
        return 2.0 * self.omega1 * self.c**2

    def direction(self, k: int) -> tuple[int, int]:
        """``(axis, sign)`` of velocity ``k >= 1``."""
        if not 1 <= k < self.q:
            raise IndexError(f"velocity index {k} has no direction")
        return (k - 1) % self.d, (1 if k <= self.d else -1)


@dataclass(frozen=True, eq=False)
class DistributionField:
    """Distributions ``f_k`` stored with shape ``(2d + 1,) + spec.shape``."""

    spec: GridSpec
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        expected = (2 * self.spec.d + 1,) + self.spec.shape
        if data.shape != expected:
            raise ValueError(f"distribution shape {data.shape}, expected {expected}")
        object.__setattr__(self, "data", data)


def equilibrium(phi: float, model: LatticeModel) -> np.ndarray:
    """``f_k^eq = omega_k * phi``."""
    return model.weights * phi


def equilibrium_field(field: ScalarField, model: LatticeModel) -> DistributionField:
    """Distributions at equilibrium with ``field``."""
    w = model.weights.reshape((-1,) + (1,) * field.spec.d)
    return DistributionField(field.spec, w * field.data[None])


def moment_phi(dist: DistributionField) -> ScalarField:
    """Zeroth moment ``sum_k f_k``."""
    total = np.zeros(dist.spec.shape)
    for fk in dist.data:
        total += fk
    return ScalarField(dist.spec, total)


def gradient_upwind(field: ScalarField, node, axis: int, direction: int) -> float:
    """First-order difference at the neighbour of ``node`` in ``direction``.

    ``direction=+1`` gives the forward difference ``(phi(x + dx e) - phi(x)) / dx``
    assigned to the plus neighbour; ``-1`` gives ``(phi(x) - phi(x - dx e)) / dx``
    assigned to the minus neighbour. Neighbours follow the grid boundary rule.
    """
    spec = field.spec
    node = _check_node(spec, node)
    p = padded(field.data, spec.bc)
    centre = tuple(i + 1 for i in node)
    other = list(centre)
    other[axis] += direction
    diff = p[tuple(other)] - p[centre]
    return float(direction * diff / spec.dx)


def _gradients(phi_padded: np.ndarray, axis: int, dx: float):
    """Backward and forward differences along ``axis`` at every node."""
    centre = _shifted(phi_padded, axis, 0)
    backward = (centre - _shifted(phi_padded, axis, -1)) / dx
    forward = (_shifted(phi_padded, axis, +1) - centre) / dx
    return backward, forward


def kinetic_step(
    dist: DistributionField,
    params: SchemeParams,
    model: LatticeModel | None = None,
    *,
    validate: bool | None = None,
) -> DistributionField:
    """One regularized lattice Boltzmann step.

    For each velocity the post-step quantity ``f_k - dt/2 F_k`` at ``x`` is the
    equilibrium streamed from ``x - c_k dt``, plus the regularized
    non-equilibrium part ``s_A omega_k c_k . Pi_ne`` evaluated there, plus half
    the explicit source. Summing over ``k`` gives an implicit relation for the
    new ``phi``, solved node-wise by :func:`solve_cubic`.
    """
    if model is None:
        model = LatticeModel.from_params(params)
    if validate is None:
        validate = not params.unsafe
    spec = dist.spec
    d, dt, s = spec.d, params.dt, params.s
    w = model.weights
    cs2 = model.cs2
    s_a = (1.0 - s) / cs2

    phi = moment_phi(dist).data
    p = padded(phi, spec.bc)
    source = -reaction(phi)

    rhs = np.empty_like(dist.data)
    rhs[0] = w[0] * phi + 0.5 * dt * w[0] * source
    for k in range(1, model.q):
        axis, sign = model.direction(k)
        upstream = _shifted(p, axis, -sign)
        backward, forward = _gradients(p, axis, spec.dx)
        # gradient at x - c_k dt: backward difference for +c, forward for -c
        grad_upstream = backward if sign > 0 else forward
        pi_ne = -dt * cs2 * grad_upstream / s
        c_dot_pi = sign * model.c * pi_ne
        rhs[k] = w[k] * upstream + s_a * (w[k] * c_dot_pi) + 0.5 * dt * w[k] * source

    xi = np.zeros(spec.shape)
    for r in rhs:
        xi += r
    if validate and np.abs(xi).max() > 1.0 + XI_TOL:
        raise InvariantViolation(f"kinetic right-hand side left [-1, 1]: max |xi| = {np.abs(xi).max():.17g}")
    phi_new = solve_cubic(xi, dt)
    source_new = -reaction(phi_new)
    out = rhs + 0.5 * dt * w.reshape((-1,) + (1,) * d) * source_new[None]
    # route through ScalarField for the finiteness check
    ScalarField(spec, phi_new)
    return DistributionField(spec, out)
