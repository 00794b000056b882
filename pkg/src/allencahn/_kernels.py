"""Compiled per-node kernels for the implicit-explicit update.

The kernels work on arrays carrying one ghost layer per face. Ghosts are
refilled from the interior before every step (mirror, zero or wrap), so the
update loop itself has no boundary branches. Neighbour sums are accumulated
axis by axis, plus neighbour first, matching :func:`grid.neighbor_sum_field`.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

BC_CODES = {"HN": 0, "HD": 1, "P": 2}

STATUS_OK = 0
STATUS_XI_RANGE = 1
STATUS_NONFINITE = 2

# |xi| may exceed 1 by this much before validated mode objects
XI_TOL = 1e-12
RESIDUAL_TOL = 1e-12


@njit(cache=True)
def cubic_root(xi, dt):
    """Real root of ``theta + dt/2 (theta^3 - theta) = xi`` for ``0 < dt < 2``.

    Cardano form with both cube-root terms combined as
    ``2 zeta / (a^2 - dbar + b^2)`` (``a^3 + b^3 = 2 zeta``, ``ab = dbar``),
    which avoids the cancellation of ``a + b`` when ``|dbar|`` is large.
    One Newton step follows.
    """
    zeta = xi / dt
    dbar = (dt - 2.0) / (3.0 * dt)
    dbar3 = dbar * dbar * dbar
    root = math.sqrt(zeta * zeta - dbar3)
    if zeta >= 0.0:
        q = zeta + root
    else:
        q = -dbar3 / (root - zeta)
    a = np.cbrt(q)
    b = dbar / a
    theta = 2.0 * zeta / (a * a - dbar + b * b)
    half = 0.5 * dt
    p = theta + half * (theta * theta * theta - theta) - xi
    dp = 1.0 + half * (3.0 * theta * theta - 1.0)
    return theta - p / dp


@njit(cache=True)
def cubic_residual(theta, xi, dt):
    return theta + 0.5 * dt * (theta * theta * theta - theta) - xi


@njit(cache=True)
def solve_node(xi, dt):
    """Root plus the number of extra Newton iterations needed (0 normally)."""
    theta = cubic_root(xi, dt)
    half = 0.5 * dt
    extra = 0
    r = cubic_residual(theta, xi, dt)
    while abs(r) > RESIDUAL_TOL and extra < 8:
        theta -= r / (1.0 + half * (3.0 * theta * theta - 1.0))
        r = cubic_residual(theta, xi, dt)
        extra += 1
    return theta, extra


@njit(cache=True)
def cubic_root_array(xi, dt):
    out = np.empty_like(xi)
    for i in range(xi.size):
        out.flat[i] = solve_node(xi.flat[i], dt)[0]
    return out


@njit(cache=True)
def fill_ghosts_1d(p, bc):
    n = p.shape[0] - 2
    if bc == 0:
        p[0] = p[1]
        p[n + 1] = p[n]
    elif bc == 1:
        p[0] = 0.0
        p[n + 1] = 0.0
    else:
        p[0] = p[n]
        p[n + 1] = p[1]


@njit(cache=True)
def fill_ghosts_2d(p, bc):
    n = p.shape[0] - 2
    for j in range(1, n + 1):
        if bc == 0:
            p[0, j] = p[1, j]
            p[n + 1, j] = p[n, j]
            p[j, 0] = p[j, 1]
            p[j, n + 1] = p[j, n]
        elif bc == 1:
            p[0, j] = 0.0
            p[n + 1, j] = 0.0
            p[j, 0] = 0.0
            p[j, n + 1] = 0.0
        else:
            p[0, j] = p[n, j]
            p[n + 1, j] = p[1, j]
            p[j, 0] = p[j, n]
            p[j, n + 1] = p[j, 1]


@njit(cache=True)
def fill_ghosts_3d(p, bc):
    n = p.shape[0] - 2
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            if bc == 0:
                p[0, j, k] = p[1, j, k]
                p[n + 1, j, k] = p[n, j, k]
                p[j, 0, k] = p[j, 1, k]
                p[j, n + 1, k] = p[j, n, k]
                p[j, k, 0] = p[j, k, 1]
                p[j, k, n + 1] = p[j, k, n]
            elif bc == 1:
                p[0, j, k] = 0.0
                p[n + 1, j, k] = 0.0
                p[j, 0, k] = 0.0
                p[j, n + 1, k] = 0.0
                p[j, k, 0] = 0.0
                p[j, k, n + 1] = 0.0
            else:
                p[0, j, k] = p[n, j, k]
                p[n + 1, j, k] = p[1, j, k]
                p[j, 0, k] = p[j, n, k]
                p[j, n + 1, k] = p[j, 1, k]
                p[j, k, 0] = p[j, k, n]
                p[j, k, n + 1] = p[j, k, 1]


@njit(cache=True)
def _update(x, nb, eps, dt, center, validate, stats):
    """Shared per-node update; ``stats`` = [xi_min, xi_max, max_abs, fallbacks, status]."""
    xi = center * x - 0.5 * dt * (x * x * x - x) + eps * nb
    if xi < stats[0]:
        stats[0] = xi
    if xi > stats[1]:
        stats[1] = xi
    if not math.isfinite(xi):
        stats[4] = STATUS_NONFINITE
        return 0.0
    if validate and abs(xi) > 1.0 + XI_TOL:
        stats[4] = STATUS_XI_RANGE
    theta, extra = solve_node(xi, dt)
    stats[3] += extra
    if abs(theta) > stats[2]:
        stats[2] = abs(theta)
    return theta


@njit(cache=True)
def step_1d(p, q, eps, dt, bc, validate, stats):
    n = p.shape[0] - 2
    center = 1.0 - 2.0 * eps
    fill_ghosts_1d(p, bc)
    for i in range(1, n + 1):
        nb = p[i + 1] + p[i - 1]
        q[i] = _update(p[i], nb, eps, dt, center, validate, stats)


@njit(cache=True)
def step_2d(p, q, eps, dt, bc, validate, stats):
    n = p.shape[0] - 2
    center = 1.0 - 4.0 * eps
    fill_ghosts_2d(p, bc)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            nb = p[i + 1, j] + p[i - 1, j]
            nb += p[i, j + 1]
            nb += p[i, j - 1]
            q[i, j] = _update(p[i, j], nb, eps, dt, center, validate, stats)


@njit(cache=True)
def step_3d(p, q, eps, dt, bc, validate, stats):
    n = p.shape[0] - 2
    center = 1.0 - 6.0 * eps
    fill_ghosts_3d(p, bc)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                nb = p[i + 1, j, k] + p[i - 1, j, k]
                nb += p[i, j + 1, k]
                nb += p[i, j - 1, k]
                nb += p[i, j, k + 1]
                nb += p[i, j, k - 1]
                q[i, j, k] = _update(p[i, j, k], nb, eps, dt, center, validate, stats)


@njit(cache=True)
def advance_1d(p, q, eps, dt, bc, nsteps, validate, stats):
    for s in range(nsteps):
        step_1d(p, q, eps, dt, bc, validate, stats)
        if stats[4] != STATUS_OK:
            return s + 1, q
        p, q = q, p
    return nsteps, p


@njit(cache=True)
def advance_2d(p, q, eps, dt, bc, nsteps, validate, stats):
    for s in range(nsteps):
        step_2d(p, q, eps, dt, bc, validate, stats)
        if stats[4] != STATUS_OK:
            return s + 1, q
        p, q = q, p
    return nsteps, p


@njit(cache=True)
def advance_3d(p, q, eps, dt, bc, nsteps, validate, stats):
    for s in range(nsteps):
        step_3d(p, q, eps, dt, bc, validate, stats)
        if stats[4] != STATUS_OK:
            return s + 1, q
        p, q = q, p
    return nsteps, p


ADVANCE = {1: advance_1d, 2: advance_2d, 3: advance_3d}


@njit(cache=True)
def neumaier_sum(values):
    """Compensated sum of a flat array."""
    s = 0.0
    c = 0.0
    for v in values:
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@njit(cache=True)
def energy_terms(u, lam_u):
    """Compensated ``sum (u^2 - 1)^2`` and ``sum u * (Lambda u)`` over flat arrays."""
    s1 = 0.0
    c1 = 0.0
    s2 = 0.0
    c2 = 0.0
    for i in range(u.size):
        x = u[i]
        w = x * x - 1.0
        v = w * w
        t = s1 + v
        if abs(s1) >= abs(v):
            c1 += (s1 - t) + v
        else:
            c1 += (v - t) + s1
        s1 = t
        v = x * lam_u[i]
        t = s2 + v
        if abs(s2) >= abs(v):
            c2 += (s2 - t) + v
        else:
            c2 += (v - t) + s2
        s2 = t
    return s1 + c1, s2 + c2
