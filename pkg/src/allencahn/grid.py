"""Structured lattices, boundary handling and the dimensionless Laplacian stencil.

Fields are stored as C-ordered ``numpy`` arrays of shape ``(nbar,) * d`` so
that ``data.ravel()`` follows the Kronecker ordering of the assembled matrix
(last index fastest).

Node counts per axis, for ``N`` subdivisions of an axis of length ``X``:

======  ==========  ==========================================
BC      ``nbar``    stored node ``i`` sits at
======  ==========  ==========================================
HN      ``N + 2``   ``origin + dx * (i - 0.5)``
HD      ``N - 1``   ``origin + dx * (i + 1)``  (interior only)
P       ``N``       ``origin + dx * i``
======  ==========  ==========================================
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericFailure

__all__ = [
    "BoundaryCondition",
    "GridSpec",
    "ScalarField",
    "apply_stencil",
    "apply_stencil_dx",
    "laplacian_array",
    "neighbor_sum",
    "neighbor_sum_array",
    "neighbor_sum_field",
    "node_coordinates",
    "padded",
    "stencil_matrix_1d",
    "stencil_matrix",
]


class BoundaryCondition(str, enum.Enum):
    """Homogeneous Neumann, homogeneous Dirichlet or periodic."""

    HN = "HN"
    HD = "HD"
    P = "P"

    @classmethod
    def parse(cls, value: "str | BoundaryCondition") -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(f"unknown boundary condition {value!r}") from None


# np.pad modes realising each boundary condition through one ghost layer
_PAD_MODE = {
    BoundaryCondition.HN: "edge",
    BoundaryCondition.HD: "constant",
    BoundaryCondition.P: "wrap",
}


@dataclass(frozen=True)
class GridSpec:
    """A uniform ``d``-dimensional lattice on the cube ``origin + [0, length]^d``.

    Args:
        d: spatial dimension (1, 2 or 3)
        n: number of subdivisions ``N`` per axis
        length: axis length ``X``
        origin: lower corner, a scalar or one value per axis
        bc: boundary condition
    """

    d: int
    n: int
    length: float
    origin: tuple[float, ...] | float = 0.0
    bc: BoundaryCondition = BoundaryCondition.HN

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        origin = self.origin
        if np.isscalar(origin):
            origin = (float(origin),) * self.d
        origin = tuple(float(o) for o in origin)
        if len(origin) != self.d:
            raise ValueError(f"origin needs {self.d} entries, got {len(origin)}")
        object.__setattr__(self, "origin", origin)
        if self.nbar < 1:
            raise ValueError(f"{self.bc.value} grid with n={self.n} has no unknowns")

    @classmethod
    def from_spacing(cls, d, dx, length, origin=0.0, bc=BoundaryCondition.HN):
        """Build a grid from a target spacing; ``length / dx`` must be integral."""
        n = round(length / dx)
        if n < 1 or abs(n * dx - length) > 1e-9 * length:
            raise ValueError(f"spacing {dx} does not divide length {length}")
        return cls(d=d, n=n, length=length, origin=origin, bc=bc)

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def nbar(self) -> int:
        """Number of stored nodes per axis."""
        if self.bc is BoundaryCondition.HN:
            return self.n + 2
        if self.bc is BoundaryCondition.HD:
            return self.n - 1
        return self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nbar,) * self.d

    @property
    def size(self) -> int:
        return self.nbar**self.d

    @property
    def lattice_offset(self) -> int:
        """Lattice index of stored node 0 (1 for HD, whose boundary nodes are not stored)."""
        return 1 if self.bc is BoundaryCondition.HD else 0

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(o + 0.5 * self.length for o in self.origin)

    def axis_coordinates(self, axis: int = 0) -> np.ndarray:
        """Coordinates of the stored nodes along one axis."""
        i = np.arange(self.nbar, dtype=float) + self.lattice_offset
        if self.bc is BoundaryCondition.HN:
            i = i - 0.5
        return self.origin[axis] + self.dx * i

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of every stored node, each of shape :attr:`shape`."""
        axes = [self.axis_coordinates(k) for k in range(self.d)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def with_bc(self, bc) -> "GridSpec":
        return GridSpec(self.d, self.n, self.length, self.origin, bc)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Node values on a :class:`GridSpec`.

    ``data`` may be given flat or shaped; it is stored shaped, as float64,
    and must be finite.
    """

    spec: GridSpec
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, order="C")
        if data.size != self.spec.size:
            raise ValueError(
                f"field has {data.size} values, grid needs {self.spec.size}"
            )
        data = data.reshape(self.spec.shape)
        if not np.isfinite(data).all():
            bad = np.argwhere(~np.isfinite(data))[0]
            raise NumericFailure(
                f"non-finite value at node {tuple(int(i) for i in bad)}",
                node=tuple(int(i) for i in bad),
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def constant(cls, spec: GridSpec, value: float) -> "ScalarField":
        return cls(spec, np.full(spec.shape, float(value)))

    @property
    def flat(self) -> np.ndarray:
        return self.data.ravel()

    def max_abs(self) -> float:
        return float(np.abs(self.data).max())

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)


def _check_node(spec: GridSpec, node, lo: int = 0) -> tuple[int, ...]:
    if np.isscalar(node):
        node = (node,)
    node = tuple(int(i) for i in node)
    if len(node) != spec.d:
        raise IndexError(f"node {node} does not have {spec.d} indices")
    for i in node:
        if not lo <= i < lo + spec.nbar:
            raise IndexError(f"node {node} out of range [{lo}, {lo + spec.nbar})")
    return node


def padded(data: np.ndarray, bc: BoundaryCondition) -> np.ndarray:
    """Return ``data`` with one ghost layer per face filled by the boundary rule."""
    return np.pad(data, 1, mode=_PAD_MODE[BoundaryCondition.parse(bc)])


def _shifted(p: np.ndarray, axis: int, offset: int) -> np.ndarray:
    """Interior-sized view of the padded array ``p`` shifted by ``offset`` along ``axis``."""
    index = [slice(1, -1)] * p.ndim
    index[axis] = slice(1 + offset, p.shape[axis] - 1 + offset)
    return p[tuple(index)]


def neighbor_sum_array(u: np.ndarray, bc) -> np.ndarray:
    """Sum of the ``2d`` boundary-resolved axis neighbours at every node of ``u``.

    Terms are accumulated axis by axis, plus neighbour before minus neighbour.
    """
    p = padded(u, bc)
    acc = np.zeros(u.shape)
    for axis in range(u.ndim):
        acc += _shifted(p, axis, +1)
        acc += _shifted(p, axis, -1)
    return acc


def laplacian_array(u: np.ndarray, bc) -> np.ndarray:
    """Dimensionless stencil applied to a raw array (see :func:`apply_stencil`)."""
    return neighbor_sum_array(u, bc) - 2 * u.ndim * u


def neighbor_sum_field(field: ScalarField) -> np.ndarray:
    """Neighbour sum at every node of ``field``."""
    return neighbor_sum_array(field.data, field.spec.bc)


def neighbor_sum(field: ScalarField, node) -> float:
    """Neighbour sum at one stored node (storage index, not lattice index)."""
    node = _check_node(field.spec, node)
    spec, u = field.spec, field.data
    total = 0.0
    for axis in range(spec.d):
        for step in (+1, -1):
            j = list(node)
            j[axis] += step
            if 0 <= j[axis] < spec.nbar:
                total += u[tuple(j)]
            elif spec.bc is BoundaryCondition.P:
                j[axis] %= spec.nbar
                total += u[tuple(j)]
            elif spec.bc is BoundaryCondition.HN:
                total += u[node]
            # HD: boundary value is zero
    return float(total)


def apply_stencil(field: ScalarField) -> ScalarField:
    """Apply the dimensionless Laplacian ``Lambda = dx**2 * Lambda_dx``.

    Matrix-free: neighbour sum minus ``2d`` times the node value, where HN faces
    see a mirrored neighbour. This reproduces the explicitly assembled
    Kronecker matrix (see :func:`stencil_matrix`).
    """
    return ScalarField(field.spec, laplacian_array(field.data, field.spec.bc))


def apply_stencil_dx(field: ScalarField) -> ScalarField:
    """Apply ``Lambda_dx``, the stencil scaled by ``1 / dx**2``."""
    return ScalarField(field.spec, apply_stencil(field).data / field.spec.dx**2)


def node_coordinates(spec: GridSpec, node) -> tuple[float, ...]:
    """Physical coordinates of a node given by its *lattice* index.

    Lattice indices run over ``[0, N + 1]`` (HN), ``[1, N - 1]`` (HD) or
    ``[0, N - 1]`` (P). For HD the stored index is the lattice index minus one.
    """
    node = _check_node(spec, node, lo=spec.lattice_offset)
    shift = 0.5 if spec.bc is BoundaryCondition.HN else 0.0
    return tuple(o + spec.dx * (i - shift) for o, i in zip(spec.origin, node))


def stencil_matrix_1d(nbar: int, bc) -> np.ndarray:
    """Dense one-dimensional dimensionless stencil matrix ``dx**2 * D_dx``."""
    bc = BoundaryCondition.parse(bc)
    D = np.zeros((nbar, nbar))
    for i in range(nbar):
        for j in (i - 1, i + 1):
            if 0 <= j < nbar:
                D[i, j] += 1.0
            elif bc is BoundaryCondition.P:
                D[i, j % nbar] += 1.0
        D[i, i] -= 2.0
    if bc is BoundaryCondition.HN:
        D[0, 0] = D[-1, -1] = -1.0
        if nbar == 1:
            D[0, 0] = 0.0
    return D


def stencil_matrix(spec: GridSpec) -> np.ndarray:
    """Explicit ``Lambda`` as a sum of Kronecker products; intended for small grids."""
    D = stencil_matrix_1d(spec.nbar, spec.bc)
    eye = np.eye(spec.nbar)
    total = np.zeros((spec.size, spec.size))
    for axis in range(spec.d):
        factors = [D if k == axis else eye for k in range(spec.d)]
        term = factors[0]
        for f in factors[1:]:
            term = np.kron(term, f)
        total += term
    return total


def iter_nodes(spec: GridSpec) -> Sequence[tuple[int, ...]]:
    """All storage multi-indices in row-major order."""
    return list(itertools.product(range(spec.nbar), repeat=spec.d))
