import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from allencahn.diagnostics import (
    EnergyRecord,
    ErrorReport,
    check_energy_monotone,
    check_max_principle,
    check_theorem3_matrix,
    convergence_rates,
    discrete_energy,
    error_norms,
)
from allencahn.grid import GridSpec, ScalarField, stencil_matrix
from allencahn.scheme import derive_params, params_from_ratio


def params_for(spec, eps_ratio=0.05, dt=0.2):
    return params_from_ratio(spec.d, eps_ratio, spec.dx, dt, allow_unsafe=True)


@pytest.mark.parametrize("bc", ["HN", "P"])
@pytest.mark.parametrize("value", [1.0, -1.0])
def test_energy_of_pure_phases(bc, value):
    spec = GridSpec(2, 8, 1.0, bc=bc)
    assert discrete_energy(ScalarField.constant(spec, value), params_for(spec)) == 0.0


@pytest.mark.parametrize("bc", ["HN", "HD", "P"])
def test_energy_of_zero_field(bc):
    spec = GridSpec(2, 8, 1.0, bc=bc)
    e = discrete_energy(ScalarField.constant(spec, 0.0), params_for(spec))
    assert e == pytest.approx(spec.dx**2 * spec.size / 4, rel=1e-15)


def test_energy_alternating_periodic():
    spec = GridSpec(1, 6, 1.0, bc="P")
    p = params_for(spec, 0.1, 0.25)
    u = np.tile([1.0, -1.0], 3)
    # explicit quadratic form on the assembled matrix
    quad = -u @ stencil_matrix(spec) @ u
    assert quad == 4 * spec.nbar
    expected = spec.dx * (p.eps_ratio / (2 * p.dt)) * 4 * spec.nbar
    assert discrete_energy(ScalarField(spec, u), p) == pytest.approx(expected, rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(bc=st.sampled_from(["HN", "HD", "P"]), seed=st.integers(0, 2**32 - 1), shift=st.integers(1, 5))
def test_energy_symmetry_invariance(bc, seed, shift):
    spec = GridSpec(2, 6, 1.0, bc=bc)
    p = params_for(spec)
    u = np.random.default_rng(seed).uniform(-1, 1, spec.shape)
    e = discrete_energy(ScalarField(spec, u), p)
    if bc == "P":
        v = np.roll(u, shift, axis=shift % 2)
    else:
        v = u[::-1, :] if shift % 2 else u[:, ::-1]
    assert discrete_energy(ScalarField(spec, v), p) == pytest.approx(e, rel=1e-13)


def test_monotone_verdicts():
    assert check_energy_monotone([1.0, 1.0, 1.0]).passed
    assert check_energy_monotone([3.0, 2.0, 1.5, 1.0]).passed
    v = check_energy_monotone([3.0, 2.0, 2.5, 1.0])
    assert not v.passed and v.index == 2
    recs = [EnergyRecord(0.0, 1.0, 0.5), EnergyRecord(0.1, 1.0 + 1e-13, 0.5)]
    assert check_energy_monotone(recs).passed
    with pytest.raises(ValueError):
        check_energy_monotone([])


def test_max_principle_verdict():
    recs = [EnergyRecord(0.0, 1.0, 0.9), EnergyRecord(1.0, 0.5, 1.0 + 1e-12)]
    v = check_max_principle(recs)
    assert not v and v.index == 1
    assert check_max_principle(recs[:1])


def test_energy_record_invariants():
    with pytest.raises(ValueError):
        EnergyRecord(0.0, math.nan, 0.1)
    with pytest.raises(ValueError):
        EnergyRecord(0.0, 1.0, -0.1)


def test_theorem3_valid_params():
    spec = GridSpec(2, 6, 1.0, bc="HN")
    p = derive_params(2, None, 0.02, spec.dx, 0.2)
    v = check_theorem3_matrix(p, spec)
    assert v.passed and v.positive_definite and v.symmetric and v.dominant


def test_theorem3_hd_violation():
    spec = GridSpec(1, 10, 1.0, bc="HD")
    e = 0.1
    dt = 4 * (1 - 2 * e) + 0.01
    p = params_from_ratio(1, e, spec.dx, min(dt, 1.999), allow_unsafe=True)
    # dt above the bound; the cubic solver range is irrelevant to this check
    p = type(p)(**{**p.__dict__, "dt": dt})
    v = check_theorem3_matrix(p, spec)
    assert not v.dominant and not v.passed


def test_theorem3_periodic_boundary_case():
    e = 0.1
    spec = GridSpec(1, 7, 1.0, bc="P")  # odd size keeps the matrix nonsingular
    p = params_from_ratio(1, e, spec.dx, 0.5, allow_unsafe=True)
    p = type(p)(**{**p.__dict__, "dt": 4 * (1 - 2 * e)})
    v = check_theorem3_matrix(p, spec)
    assert v.dominant and v.positive_definite and v.passed
    even = GridSpec(1, 8, 1.0, bc="P")
    v = check_theorem3_matrix(p, even)
    assert v.dominant and not v.positive_definite
    assert abs(v.min_eigenvalue) < 1e-12


def test_theorem3_size_limit():
    spec = GridSpec(2, 80, 1.0, bc="P")
    with pytest.raises(ValueError):
        check_theorem3_matrix(derive_params(2, None, 0.001, spec.dx, 0.1), spec)


def test_error_norm_examples():
    spec = GridSpec(2, 4, 1.0, bc="P")
    u = np.random.default_rng(1).uniform(-1, 1, spec.shape)
    f = ScalarField(spec, u)
    assert error_norms(f, f) == (0.0, 0.0)
    c = -0.3
    e_inf, e_l2 = error_norms(ScalarField(spec, u + c), f)
    assert e_inf == pytest.approx(0.3, abs=1e-15)
    assert e_l2 == pytest.approx(0.3 * math.sqrt(spec.dx**2 * spec.size), rel=1e-14)
    _, e_norm = error_norms(ScalarField(spec, u + c), u, normalize=True)
    assert e_norm == pytest.approx(e_l2 / spec.length, rel=1e-14)
    with pytest.raises(ValueError):
        error_norms(f, ScalarField(GridSpec(2, 4, 1.0, bc="HN"), np.zeros((6, 6))))
    with pytest.raises(ValueError):
        error_norms(f, np.zeros(3))


def test_convergence_rate_examples():
    out = convergence_rates([ErrorReport(0.1, 4e-3, 8e-3), ErrorReport(0.05, 1e-3, 2e-3)])
    assert out[0].cr_inf is None
    assert out[1].cr_inf == pytest.approx(2.0) and out[1].cr_l2 == pytest.approx(2.0)
    flat = convergence_rates([ErrorReport(0.1, 1e-3, 1e-3), ErrorReport(0.05, 1e-3, 1e-3)])
    assert flat[1].cr_inf == 0.0
    zero = convergence_rates([ErrorReport(0.1, 0.0, 0.0), ErrorReport(0.05, 0.0, 0.0)])
    assert zero[1].cr_inf is None
    with pytest.raises(ValueError):
        convergence_rates([ErrorReport(0.1, 1, 1), ErrorReport(0.08, 1, 1)])
    mixed = convergence_rates([ErrorReport(0.1, 1.0, 1.0), ErrorReport(0.08, 0.64, 0.64)], require_halving=False)
    assert mixed[1].cr_inf == pytest.approx(2.0)


def test_paper_table2_rates_from_paper_errors():
    errs = [9.8980e-3, 2.4823e-3, 6.1411e-4, 1.5323e-4]
    reports = [ErrorReport(2.0**-k / 64, e, e) for k, e in enumerate(errs)]
    rates = [r.cr_inf for r in convergence_rates(reports)[1:]]
    assert rates == pytest.approx([1.9954, 2.0151, 2.0027], abs=5e-4)
