"""Reference time steppers used for stability and accuracy comparisons."""

from __future__ import annotations

import enum

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import IterationFailure
from .grid import ScalarField, laplacian_array
from .scheme import SchemeParams, reaction

__all__ = ["BaselineKind", "fex_fd_step", "fex_fd_dt_bound", "cn_step"]


class BaselineKind(str, enum.Enum):
    FEX_FD = "FEX_FD"
    CN = "CN"


def fex_fd_dt_bound(params: SchemeParams) -> float:
    """Largest step for which the explicit scheme keeps ``|phi| <= 1``."""
    return 0.5 * (1.0 - 2 * params.d * params.eps_ratio)


def fex_fd_step(field: ScalarField, params: SchemeParams) -> ScalarField:
    """Explicit Euler in both terms: ``phi + e Lambda phi - dt f(phi)``.

    Raises:
        NumericFailure: when the update overflows (blow-up).
    """
    u = field.data
    with np.errstate(over="ignore", invalid="ignore"):
        new = u + params.eps_ratio * laplacian_array(u, field.spec.bc) - params.dt * reaction(u)
    return ScalarField(field.spec, new)


def cn_step(
    field: ScalarField,
    params: SchemeParams,
    newton_tol: float = 1e-12,
    max_iters: int = 50,
    *,
    full_output: bool = False,
):
    """Crank-Nicolson step solved by damped Newton.

    Solves ``u - phi = dt/2 [eps^2 Lambda_dx (phi + u) - f(phi) - f(u)]`` with
    initial guess ``phi``. Each Newton system is symmetric positive definite
    for ``dt < 2`` and is solved matrix-free by conjugate gradients. The step
    is halved while the residual grows, at most 20 times.

    Returns:
        The new field, or ``(field, iterations, residual)`` with ``full_output``.

    Raises:
        IterationFailure: if the residual max-norm is above ``newton_tol``
            after ``max_iters`` iterations.
    """
    if newton_tol <= 0:
        raise ValueError("newton_tol must be positive")
    spec = field.spec
    bc = spec.bc
    e, dt = params.eps_ratio, params.dt
    phi = field.data.ravel().copy()
    shape = spec.shape

    def lap(v):
        return laplacian_array(v.reshape(shape), bc).ravel()

    lam_phi = lap(phi)
    f_phi = reaction(phi)

    def residual(v):
        return v - phi - 0.5 * e * (lam_phi + lap(v)) + 0.5 * dt * (f_phi + reaction(v))

    u = phi.copy()
    r = residual(u)
    rnorm = np.abs(r).max()
    iterations = 0
    while rnorm > newton_tol:
        if iterations >= max_iters:
            raise IterationFailure(
                f"Newton did not converge in {max_iters} iterations (residual {rnorm:.3e})",
                residual=float(rnorm),
            )
        diag = 1.0 + 0.5 * dt * (3.0 * u * u - 1.0)
        jac = LinearOperator(
            (u.size, u.size), matvec=lambda v, diag=diag: diag * v - 0.5 * e * lap(v), dtype=float
        )
        delta, info = cg(jac, -r, rtol=1e-13, atol=0.0, maxiter=10 * u.size)
        if info < 0:
            raise IterationFailure("conjugate gradient breakdown", residual=float(rnorm))
        lam = 1.0
        trial = u + delta
        r_trial = residual(trial)
        halvings = 0
        while np.abs(r_trial).max() > rnorm and halvings < 20:
            lam *= 0.5
            trial = u + lam * delta
            r_trial = residual(trial)
            halvings += 1
        u, r = trial, r_trial
        rnorm = np.abs(r).max()
        iterations += 1
    out = ScalarField(spec, u)
    if full_output:
        return out, iterations, float(rnorm)
    return out
