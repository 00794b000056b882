import numpy as np
import pytest

from allencahn.grid import GridSpec, ScalarField
from allencahn.kinetic import (
    DistributionField,
    LatticeModel,
    equilibrium,
    equilibrium_field,
    gradient_upwind,
    kinetic_step,
    moment_phi,
)
from allencahn.scheme import derive_params, step


@pytest.mark.parametrize("d", [1, 2, 3])
def test_weight_identities(d):
    model = LatticeModel(d, 1 / (2 * d + 2), c=1.7)
    w, c = model.weights, model.velocities
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.abs(w @ c).max() <= 1e-15
    second = np.einsum("k,ki,kj->ij", w, c, c)
    np.testing.assert_allclose(second, model.cs2 * np.eye(d), atol=1e-14)


def test_equilibrium_examples():
    model = LatticeModel(1, 1 / 3)
    assert not equilibrium(0.0, model).any()
    np.testing.assert_allclose(equilibrium(1.0, model), [1 / 3] * 3, atol=1e-16)
    f = equilibrium(-0.37, model)
    assert f.sum() == pytest.approx(-0.37, abs=1e-16)
    assert f @ model.velocities[:, 0] == pytest.approx(0.0, abs=1e-16)


def test_direction():
    model = LatticeModel(2, 0.2)
    assert [model.direction(k) for k in range(1, 5)] == [(0, 1), (1, 1), (0, -1), (1, -1)]
    with pytest.raises(IndexError):
        model.direction(0)


def test_gradient_examples():
    spec = GridSpec(1, 3, 3.0, bc="P")
    f = ScalarField(spec, [0.0, 1.0, 2.0])
    assert gradient_upwind(f, 0, 0, +1) == 1.0
    assert gradient_upwind(f, 1, 0, +1) == 1.0
    assert gradient_upwind(f, 2, 0, +1) == -2.0  # across the seam
    assert gradient_upwind(f, 1, 0, -1) == 1.0
    assert gradient_upwind(f, 0, 0, -1) == -2.0  # across the seam
    const = ScalarField(spec, [0.4] * 3)
    assert gradient_upwind(const, 1, 0, +1) == 0.0
    hn = ScalarField(GridSpec(1, 2, 4.0, bc="HN"), [0.0, 1.0, 2.0, 3.0])
    assert gradient_upwind(hn, 3, 0, +1) == 0.0
    assert gradient_upwind(hn, 0, 0, -1) == 0.0
    assert gradient_upwind(hn, 1, 0, +1) == 0.5


def test_distribution_shape_checked():
    spec = GridSpec(1, 4, 1.0, bc="P")
    with pytest.raises(ValueError):
        DistributionField(spec, np.zeros((2, 4)))


@pytest.mark.parametrize("value", [1.0, 0.0])
def test_uniform_equilibria_are_fixed(value):
    spec = GridSpec(2, 5, 1.0, bc="P")
    p = derive_params(2, None, 0.05, spec.dx, 0.1)
    model = LatticeModel.from_params(p)
    dist = equilibrium_field(ScalarField.constant(spec, value), model)
    out = kinetic_step(dist, p, model)
    np.testing.assert_allclose(out.data, dist.data, atol=1e-15, rtol=0)


def test_moment_roundtrip():
    rng = np.random.default_rng(2)
    spec = GridSpec(2, 5, 1.0, bc="HN")
    u = rng.uniform(-1, 1, spec.shape)
    dist = equilibrium_field(ScalarField(spec, u), LatticeModel(2, 0.2))
    # weights sum to 1 only up to rounding
    np.testing.assert_allclose(moment_phi(dist).data, u, atol=2 * np.finfo(float).eps, rtol=0)
    zero = DistributionField(spec, np.zeros((5,) + spec.shape))
    assert not moment_phi(zero).data.any()


@pytest.mark.parametrize("bc", ["HN", "HD", "P"])
@pytest.mark.parametrize("d", [1, 2])
def test_one_step_matches_macroscopic(bc, d):
    rng = np.random.default_rng(d * 10 + len(bc))
    spec = GridSpec(d, 7, 1.0, bc=bc)
    p = derive_params(d, None, 0.04, spec.dx, 0.3)
    f = ScalarField(spec, rng.uniform(-1, 1, spec.shape))
    dist = kinetic_step(equilibrium_field(f, LatticeModel.from_params(p)), p)
    macro, _ = step(f, p)
    assert np.abs(moment_phi(dist).data - macro.data).max() <= 1e-13
