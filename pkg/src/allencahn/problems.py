"""Initial data, exact solutions and radius post-processing for the test problems."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import Extinction
from .grid import BoundaryCondition, GridSpec, ScalarField

__all__ = [
    "ProblemKind",
    "ProblemSpec",
    "expected_radius",
    "extinction_time",
    "extract_radius",
    "initial_field",
    "splitmix64_uniform",
    "traveling_wave_exact",
    "traveling_wave_speed",
]


class ProblemKind(str, enum.Enum):
    TRAVELING_WAVE = "TravelingWave"
    RANDOM_HD = "RandomHD"
    PERIODIC_SINE_2D = "PeriodicSine2D"
    CIRCLE_2D = "Circle2D"
    SPHERE_3D = "Sphere3D"

    @classmethod
    def parse(cls, value) -> "ProblemKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().replace("_", "").lower()
        for kind in cls:
            if kind.value.lower() == text:
                return kind
        raise ValueError(f"unknown problem kind {value!r}")


# kind -> (dimension, boundary condition, default domain)
_LAYOUT = {
    ProblemKind.TRAVELING_WAVE: (1, BoundaryCondition.HN, (-0.5, 2.5)),
    ProblemKind.RANDOM_HD: (1, BoundaryCondition.HD, (0.0, 1.0)),
    ProblemKind.PERIODIC_SINE_2D: (2, BoundaryCondition.P, (0.0, 2.0 * math.pi)),
    ProblemKind.CIRCLE_2D: (2, BoundaryCondition.HN, (-1.0, 1.0)),
    ProblemKind.SPHERE_3D: (3, BoundaryCondition.HN, (-1.0, 1.0)),
}


@dataclass(frozen=True)
class ProblemSpec:
    """One of the shipped test problems.

    Args:
        kind: problem family
        eps_interface: interface width; needed by the tanh profiles
        radius: initial radius ``R0`` of a circle or sphere
        amplitude: amplitude of the periodic sine data
        seed: seed for the random data
        d: dimension of the random problem (other kinds fix their own)
        domain: ``(lo, hi)`` per axis; defaults to the family's domain
    """

    kind: ProblemKind
    eps_interface: float | None = None
    radius: float = 0.7
    amplitude: float = 0.05
    seed: int = 0
    d: int | None = None
    domain: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind.parse(self.kind))
        dim, _, default_domain = _LAYOUT[self.kind]
        if self.d is None:
            object.__setattr__(self, "d", dim)
        elif self.d != dim and self.kind is not ProblemKind.RANDOM_HD:
            raise ValueError(f"{self.kind.value} is {dim}-dimensional, got d={self.d}")
        if self.domain is None:
            object.__setattr__(self, "domain", default_domain)
        lo, hi = (float(v) for v in self.domain)
        if not hi > lo:
            raise ValueError(f"empty domain ({lo}, {hi})")
        object.__setattr__(self, "domain", (lo, hi))
        if self.needs_eps and not (self.eps_interface and self.eps_interface > 0):
            raise ValueError(f"{self.kind.value} needs a positive eps_interface")
        if self.kind in (ProblemKind.CIRCLE_2D, ProblemKind.SPHERE_3D) and not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 0 <= self.amplitude <= 1:
            raise ValueError("amplitude must lie in [0, 1]")

    @property
    def needs_eps(self) -> bool:
        return self.kind in (ProblemKind.TRAVELING_WAVE, ProblemKind.CIRCLE_2D, ProblemKind.SPHERE_3D)

    @property
    def bc(self) -> BoundaryCondition:
        return _LAYOUT[self.kind][1]

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    def grid(self, dx: float) -> GridSpec:
        """The grid of spacing ``dx`` on this problem's domain."""
        return GridSpec.from_spacing(self.d, dx, self.length, self.domain[0], self.bc)

    def check_grid(self, spec: GridSpec) -> None:
        """Raise ``ValueError`` unless ``spec`` matches the problem layout."""
        if spec.d != self.d or spec.bc is not self.bc:
            raise ValueError(
                f"{self.kind.value} runs on a {self.d}D {self.bc.value} grid, "
                f"got {spec.d}D {spec.bc.value}"
            )
        if abs(spec.length - self.length) > 1e-12 * self.length or any(
            abs(o - self.domain[0]) > 1e-12 * self.length for o in spec.origin
        ):
            raise ValueError(f"grid domain does not match {self.domain}")


def traveling_wave_speed(eps_interface: float) -> float:
    """Front speed ``3 eps / sqrt(2)``."""
    return 3.0 * eps_interface / math.sqrt(2.0)


def traveling_wave_exact(x, t: float, eps_interface: float):
    """``1/2 [1 - tanh((x - s t) / (2 sqrt(2) eps))]`` with ``s = 3 eps / sqrt(2)``."""
    if not eps_interface > 0:
        raise ValueError("eps_interface must be positive")
    z = (np.asarray(x, dtype=float) - traveling_wave_speed(eps_interface) * t) / (
        2.0 * math.sqrt(2.0) * eps_interface
    )
    value = 0.5 * (1.0 - np.tanh(z))
    return float(value) if np.ndim(value) == 0 else value


def extinction_time(r0: float, eps_interface: float, d: int) -> float:
    """Time at which ``R0^2 - 2 (d - 1) eps^2 t`` reaches zero."""
    if d not in (2, 3):
        raise ValueError("curvature flow needs d = 2 or 3")
    return r0 * r0 / (2.0 * (d - 1) * eps_interface**2)


def expected_radius(t: float, r0: float, eps_interface: float, d: int) -> float:
    """``sqrt(R0^2 - 2 (d - 1) eps^2 t)``.

    Raises:
        Extinction: past the extinction time, which the exception carries.
    """
    radicand = r0 * r0 - 2.0 * (d - 1) * eps_interface**2 * t
    if radicand < 0:
        t_ext = extinction_time(r0, eps_interface, d)
        raise Extinction(f"radius vanished at t = {t_ext:.6g}", time=t_ext)
    return math.sqrt(radicand)


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def splitmix64_uniform(seed: int, index) -> np.ndarray:
    """Uniform doubles in ``[0, 1)``, one per non-negative integer ``index``.

    Output ``k`` is the splitmix64 finaliser applied to
    ``mix(seed) + (k + 1) * 0x9E3779B97F4A7C15`` (mod 2^64), keeping the top
    53 bits. Each value depends only on the seed and its own index.
    """
    index = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        z = _mix(base + (index + np.uint64(1)) * _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def initial_field(problem: ProblemSpec, spec: GridSpec) -> ScalarField:
    """Sample the initial condition of ``problem`` on ``spec``."""
    problem.check_grid(spec)
    kind = problem.kind
    coords = spec.coordinates()
    if kind is ProblemKind.TRAVELING_WAVE:
        data = traveling_wave_exact(coords[0], 0.0, problem.eps_interface)
    elif kind is ProblemKind.RANDOM_HD:
        u = splitmix64_uniform(problem.seed, np.arange(spec.size))
        data = 0.1 * u - 0.05
    elif kind is ProblemKind.PERIODIC_SINE_2D:
        data = problem.amplitude * np.sin(coords[0]) * np.sin(coords[1])
    else:
        center = spec.center
        r = np.sqrt(sum((c - x0) ** 2 for c, x0 in zip(coords, center)))
        data = np.tanh((problem.radius - r) / (math.sqrt(2.0) * problem.eps_interface))
    return ScalarField(spec, data)


def _line_through_center(field: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Values along axis 0 on the line through the grid center.

    Transverse axes are linearly interpolated to the center coordinate.
    """
    spec = field.spec
    values = field.data
    for axis in range(spec.d - 1, 0, -1):
        x = spec.axis_coordinates(axis)
        c = spec.center[axis]
        j = int(np.clip(np.searchsorted(x, c) - 1, 0, len(x) - 2)) if len(x) > 1 else 0
        if len(x) == 1:
            values = np.take(values, 0, axis=axis)
            continue
        w = (c - x[j]) / (x[j + 1] - x[j])
        values = (1 - w) * np.take(values, j, axis=axis) + w * np.take(values, j + 1, axis=axis)
    return spec.axis_coordinates(0), values


def extract_radius(field: ScalarField) -> float:
    """Distance from the grid center to the first sign change of ``phi`` along ``+x``.

    The crossing is located by linear interpolation between the two
    straddling nodes; a node value of exactly zero is returned as is.

    Raises:
        Extinction: if ``phi`` has no sign change beyond the center.
    """
    x, p = _line_through_center(field)
    cx = field.spec.center[0]
    for i in range(len(x) - 1):
        if x[i + 1] <= cx:
            continue
        a, b = p[i], p[i + 1]
        if a == 0.0 and x[i] >= cx:
            return float(x[i] - cx)
        if a * b < 0.0 or (b == 0.0 and a != 0.0):
            crossing = x[i] + (x[i + 1] - x[i]) * a / (a - b)
            return float(abs(crossing - cx))
    raise Extinction("no sign change along the +x ray from the center")
