import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from allencahn.baselines import cn_step, fex_fd_dt_bound, fex_fd_step
from allencahn.errors import IterationFailure, NumericFailure
from allencahn.grid import GridSpec, ScalarField
from allencahn.scheme import derive_params, params_from_ratio


@pytest.mark.parametrize("bc", ["HN", "P"])
@pytest.mark.parametrize("value", [1.0, -1.0])
def test_fex_constant_fixed(bc, value):
    spec = GridSpec(2, 6, 1.0, bc=bc)
    p = derive_params(2, None, 0.02, spec.dx, 0.1)
    f = ScalarField.constant(spec, value)
    assert np.array_equal(fex_fd_step(f, p).data, f.data)


def test_fex_blowup_is_numeric_failure():
    spec = GridSpec(1, 8, 1.0, bc="P")
    p = params_from_ratio(1, 0.1, spec.dx, 1.9, allow_unsafe=True)
    f = ScalarField(spec, np.full(8, 5.0))
    with pytest.raises(NumericFailure):
        for _ in range(50):
            f = fex_fd_step(f, p)


@settings(max_examples=60, deadline=None)
@given(
    bc=st.sampled_from(["HN", "HD", "P"]),
    eps_ratio=st.floats(1e-3, 0.499),
    frac=st.floats(0.01, 1.0),
    seed=st.integers(0, 2**32 - 1),
)
def test_fex_bounded_under_its_condition(bc, eps_ratio, frac, seed):
    spec = GridSpec(1, 12, 1.0, bc=bc)
    probe = params_from_ratio(1, eps_ratio, spec.dx, 0.01, omega1=0.5, allow_unsafe=True)
    dt = frac * fex_fd_dt_bound(probe)
    p = params_from_ratio(1, eps_ratio, spec.dx, dt, omega1=0.5, allow_unsafe=True)
    f = ScalarField(spec, np.random.default_rng(seed).uniform(-1, 1, spec.shape))
    for _ in range(20):
        f = fex_fd_step(f, p)
        assert f.max_abs() <= 1.0 + 1e-13


@pytest.mark.parametrize("value", [1.0, 0.0])
def test_cn_steady_states(value):
    spec = GridSpec(2, 6, 1.0, bc="HN")
    p = derive_params(2, None, 0.02, spec.dx, 0.1)
    out, iterations, residual = cn_step(ScalarField.constant(spec, value), p, full_output=True)
    assert np.array_equal(out.data, np.full(spec.shape, value))
    assert iterations == 0 and residual == 0.0


def test_cn_residual_and_iterations():
    rng = np.random.default_rng(4)
    spec = GridSpec(2, 10, 1.0, bc="P")
    p = derive_params(2, None, 0.05, spec.dx, 0.1)
    f = ScalarField(spec, rng.uniform(-1, 1, spec.shape))
    out, iterations, residual = cn_step(f, p, newton_tol=1e-12, full_output=True)
    assert residual <= 1e-12
    assert iterations <= 8
    from allencahn.grid import laplacian_array

    u, phi = out.data, f.data
    r = u - phi - 0.5 * p.eps_ratio * (laplacian_array(phi, "P") + laplacian_array(u, "P")) \
        + 0.5 * p.dt * (phi**3 - phi + u**3 - u)
    assert np.abs(r).max() <= 1e-12


def test_cn_temporal_self_convergence():
    spec = GridSpec(1, 32, 2 * math.pi, bc="P")
    f0 = ScalarField(spec, 0.5 * np.sin(spec.axis_coordinates()))

    def solve(dt, t_end=0.8):
        p = derive_params(1, None, 0.3, spec.dx, dt, allow_unsafe=True)
        f = f0
        for _ in range(round(t_end / dt)):
            f = cn_step(f, p)
        return f.data

    a, b, c = solve(0.1), solve(0.05), solve(0.025)
    rate = math.log2(np.abs(a - b).max() / np.abs(b - c).max())
    assert rate == pytest.approx(2.0, abs=0.05)


def test_cn_iteration_failure():
    spec = GridSpec(1, 16, 1.0, bc="P")
    p = derive_params(1, None, 0.02, spec.dx, 0.1)
    f = ScalarField(spec, np.random.default_rng(0).uniform(-1, 1, 17 - 1))
    with pytest.raises(IterationFailure) as info:
        cn_step(f, p, newton_tol=1e-30, max_iters=2)
    assert info.value.residual > 0
    with pytest.raises(ValueError):
        cn_step(f, p, newton_tol=0.0)
