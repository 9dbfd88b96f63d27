import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dglimit.euler import (
    ConstraintSpec,
    DegenerateStateError,
    GasParams,
    cons_to_prim,
    constraint_g,
    flux,
    max_wave_speed,
    pressure,
    prim_to_cons,
    specific_entropy,
)

GP = GasParams()
GAMMA = 1.4


def test_gas_params_validation():
    with pytest.raises(ValueError):
        GasParams(gamma=1.0)
    with pytest.raises(ValueError):
        GasParams(p_min=-1.0)


@pytest.mark.parametrize("u, expected", [
    ([1.0, 0.0, 1.0 / (GAMMA - 1)], 1.0),
    ([3.0, 9.0, 16.0], 1.0),
    ([1.0, 1.0, 0.3], -0.08),
])
def test_pressure(u, expected):
    assert pressure(u, GP) == pytest.approx(expected, abs=1e-14)


def test_pressure_zero_density():
    with pytest.raises(DegenerateStateError):
        pressure([0.0, 1.0, 1.0], GP)


def test_right_state_round_trip():
    u = prim_to_cons([3.0, 3.0, 1.0], GP)
    np.testing.assert_allclose(u, [3.0, 9.0, 16.0], rtol=1e-15)
    np.testing.assert_allclose(cons_to_prim(u, GP), [3.0, 3.0, 1.0], rtol=1e-15)


@pytest.mark.parametrize("u, expected", [
    ([1.0, 0.0, 1.0 / (GAMMA - 1)], 1.0),
    ([3.0, 9.0, 16.0], 3.0 ** -1.4),
    ([1.0, 1.0, 0.3], -0.08),
])
def test_specific_entropy(u, expected):
    assert specific_entropy(u, GP) == pytest.approx(expected, abs=1e-14)


def test_specific_entropy_needs_positive_density():
    with pytest.raises(DegenerateStateError):
        specific_entropy([-1.0, 0.0, 1.0], GP)


def test_constraint_values():
    gp0 = GasParams(rho_min=0.0, p_min=0.0)
    assert constraint_g(ConstraintSpec.density(gp0), [2.0, 0.0, 1.0], gp0) == 2.0
    assert constraint_g(ConstraintSpec.pressure(gp0), [1.0, 1.0, 0.3], gp0) == pytest.approx(-0.08)
    left = prim_to_cons([1.0, 1.0, 2e-11], GP)
    g3 = constraint_g(ConstraintSpec(ConstraintSpec.density(GP).kind.MIN_ENTROPY, 0.1), left, GP)
    assert g3 == pytest.approx(-0.1, abs=1e-10)
    with pytest.raises(DegenerateStateError):
        constraint_g(ConstraintSpec.min_entropy(GasParams(sigma_min=0.1)), [0.0, 0.0, 1.0], GP)


def test_flux_examples():
    np.testing.assert_allclose(flux([1.0, 0.0, 2.5], GP)[:, 0], [0.0, 1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(flux([3.0, 9.0, 16.0], GP)[:, 0], [9.0, 28.0, 51.0], rtol=1e-14)
    F = flux([1.0, 0.0, 1.0, 2.5 + 0.5], GP)
    assert F.shape == (4, 2)
    np.testing.assert_allclose(F[:, 1], [1.0, 0.0, 2.0, 2.5 + 1.5], rtol=1e-14)
    with pytest.raises(DegenerateStateError):
        flux([0.0, 0.0, 1.0], GP)


def test_prim_to_cons_examples():
    np.testing.assert_allclose(prim_to_cons([1.0, 0.0, 1.0], GP), [1.0, 0.0, 2.5])
    np.testing.assert_allclose(prim_to_cons([1.0, 1.0, 2e-11], GP), [1.0, 1.0, 0.5 + 5e-11],
                               rtol=1e-15)
    with pytest.raises(DegenerateStateError):
        cons_to_prim([0.0, 0.0, 1.0], GP)


def _random_prims(rng, n, d):
    w = np.empty((n, d + 2))
    w[:, 0] = rng.uniform(1e-3, 10.0, n)
    w[:, 1:-1] = rng.uniform(-5.0, 5.0, (n, d))
    w[:, -1] = rng.uniform(1e-3, 10.0, n)
    return w


@pytest.mark.parametrize("d", [1, 2])
def test_round_trip_random(d):
    rng = np.random.default_rng(0)
    w = _random_prims(rng, 1000, d)
    w[:, 0] = rng.uniform(0.1, 10.0, 1000)
    w[:, -1] = rng.uniform(0.1, 10.0, 1000)
    w[:, 1:-1] *= 0.2
    back = cons_to_prim(prim_to_cons(w, GP), GP)
    np.testing.assert_allclose(back, w, rtol=1e-14)


def test_round_trip_kinetic_dominated():
    # Pressure is recovered from E - |m|^2 / (2 rho), so it inherits the
    # cancellation when kinetic energy dwarfs internal energy.
    rng = np.random.default_rng(3)
    w = _random_prims(rng, 1000, 2)
    back = cons_to_prim(prim_to_cons(w, GP), GP)
    np.testing.assert_allclose(back[:, :-1], w[:, :-1], rtol=1e-14)
    np.testing.assert_allclose(back[:, -1], w[:, -1], rtol=1e-11)


def test_pressure_of_prim_to_cons_moderate():
    rng = np.random.default_rng(1)
    w = _random_prims(rng, 1000, 2)
    w[:, 1:-1] *= 0.1
    P = pressure(prim_to_cons(w, GP), GP)
    np.testing.assert_allclose(P, w[:, -1], rtol=1e-13)


def test_max_wave_speed():
    assert max_wave_speed([1.0, 0.0, 2.5], GP) == pytest.approx(np.sqrt(1.4))
    assert max_wave_speed([1.0, 1.0, 3.0], GP) == pytest.approx(1.0 + np.sqrt(1.4))
    assert max_wave_speed(prim_to_cons([1.0, 1.0, 1e-30], GP), GP) == pytest.approx(1.0)
    with pytest.raises(DegenerateStateError):
        max_wave_speed([1.0, 1.0, 0.3], GP)


state_1d = st.tuples(st.floats(0.05, 5.0), st.floats(-3.0, 3.0), st.floats(0.05, 5.0))


@settings(max_examples=200, deadline=None)
@given(a=state_1d, b=state_1d)
def test_quasiconcavity_along_segments(a, b):
    gp = GasParams(rho_min=0.0, p_min=0.0)
    ua, ub = prim_to_cons(np.array(a), gp), prim_to_cons(np.array(b), gp)
    theta = np.linspace(0.0, 1.0, 101)[:, None]
    seg = theta * ua + (1 - theta) * ub
    sigma_min = min(specific_entropy(ua, gp), specific_entropy(ub, gp))
    specs = [ConstraintSpec.density(gp), ConstraintSpec.pressure(gp),
             ConstraintSpec.min_entropy(GasParams(sigma_min=0.5 * sigma_min))]
    for spec in specs:
        ga, gb = constraint_g(spec, ua, gp), constraint_g(spec, ub, gp)
        assert np.all(constraint_g(spec, seg, gp) >= min(ga, gb) - 1e-12)


def test_density_constraint_is_linear():
    rng = np.random.default_rng(2)
    ua = prim_to_cons(_random_prims(rng, 100, 2), GP)
    ub = prim_to_cons(_random_prims(rng, 100, 2), GP)
    spec = ConstraintSpec.density(GP)
    th = rng.uniform(0, 1, (100, 1))
    lhs = constraint_g(spec, th * ua + (1 - th) * ub, GP)
    rhs = th[:, 0] * constraint_g(spec, ua, GP) + (1 - th[:, 0]) * constraint_g(spec, ub, GP)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-14, atol=1e-14)
