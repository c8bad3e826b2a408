import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsmc.envelope import (
    DesignConditionError, Envelope, reaching_time_bound, rho, rho_dot, suggest_rho0, validate_c1, validate_c2,
)
from qsmc.surface import SurfaceSpec

EX1 = Envelope(4.0, 0.05, 3.0, 0.1)
EX2 = Envelope(5.0, 0.05, 3.0, 0.1)

envelopes = st.builds(
    lambda rho_inf, eps_gap, rho0_gap, mu: Envelope(rho_inf + eps_gap + rho0_gap, rho_inf, mu, rho_inf + eps_gap),
    st.floats(1e-3, 1.0), st.floats(1e-3, 1.0), st.floats(1e-3, 10.0), st.floats(0.1, 10.0),
)


def test_rho_examples():
    assert rho(EX1, 0.0) == pytest.approx(4.05, rel=1e-15)
    assert rho(EX2, 0.0) == pytest.approx(5.05, rel=1e-15)
    assert rho(EX1, 1e3) == 0.05
    assert EX1(0.0) == rho(EX1, 0.0)


def test_rho_rejects_negative_time():
    with pytest.raises(ValueError):
        rho(EX1, -1e-9)
    with pytest.raises(ValueError):
        rho_dot(EX1, np.array([0.0, -1.0]))


def test_rho_dot_examples():
    assert rho_dot(EX1, 0.0) == -12.0
    assert rho_dot(Envelope(1.0, 0.05, 1.0, 0.1), math.log(2)) == pytest.approx(-0.5, rel=1e-15)
    assert rho_dot(EX1, 1e3) == pytest.approx(0.0, abs=1e-300)


def test_array_and_scalar_paths_agree():
    t = np.linspace(0, 5, 101)
    np.testing.assert_allclose(rho(EX1, t), [rho(EX1, float(s)) for s in t], rtol=1e-15)
    np.testing.assert_allclose(rho_dot(EX2, t), [rho_dot(EX2, float(s)) for s in t], rtol=1e-15)


def test_validate_c1():
    assert validate_c1(EX1, 2.7)
    assert validate_c1(EX1, 1.7)  # pendulum from x0 = [0.9, 0.9]
    env = Envelope(1.0, 0.05, 1.0, 0.1)
    assert not validate_c1(env, 1.0)
    assert not validate_c1(env, -1.0)
    assert validate_c1(env, 0.0)


def test_c2_enforced_on_construction():
    assert validate_c2(EX1)
    with pytest.raises(DesignConditionError):
        Envelope(4.0, 0.1, 3.0, 0.1)
    with pytest.raises(DesignConditionError):
        Envelope(0.05, 0.01, 3.0, 0.1)
    with pytest.raises(DesignConditionError):
        Envelope(4.0, 0.0, 3.0, 0.1)
    loose = Envelope.unchecked(4.0, 0.2, 3.0, 0.1)
    assert not validate_c2(loose)
    with pytest.raises(DesignConditionError):
        reaching_time_bound(loose)


def test_reaching_time_bound_examples():
    b1 = reaching_time_bound(EX1)
    assert b1 == pytest.approx(math.log(80) / 3, rel=1e-12)
    assert b1 == pytest.approx(1.4607, abs=1e-4)
    assert b1 < 1.5
    b2 = reaching_time_bound(EX2)
    assert b2 == pytest.approx(math.log(100) / 3, rel=1e-12)
    assert b2 == pytest.approx(1.5351, abs=1e-4)
    assert reaching_time_bound(Envelope(math.e * 0.05, 0.05, 1.0, 0.1)) == pytest.approx(1.0, rel=1e-15)


def test_suggest_rho0_examples():
    assert suggest_rho0(SurfaceSpec((2.0, 1.0)), [1.0, 1.1]) == pytest.approx(3.41, rel=1e-14)
    assert suggest_rho0(SurfaceSpec((1.0,)), [0.0]) == 0.0
    assert suggest_rho0(SurfaceSpec((8.0, 12.0, 6.0, 1.0)), [1, 1, 1, 1]) == pytest.approx(29.7, rel=1e-14)
    assert suggest_rho0(SurfaceSpec((2.0, 1.0)), [1.0, 1.0], safety=2.0) == 6.0


def test_suggest_rho0_rejects():
    with pytest.raises(ValueError):
        suggest_rho0(SurfaceSpec((2.0, 1.0)), [1.0])
    with pytest.raises(ValueError):
        suggest_rho0(SurfaceSpec((2.0, 1.0)), [1.0, -0.5])


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(st.floats(0.01, 5), min_size=3, max_size=3))
def test_suggested_rho0_covers_any_admissible_sigma0(e0_unit, bounds):
    spec = SurfaceSpec((3.0, -2.0, 1.0))
    e0 = [b * v / 5.0 * 0.999 for b, v in zip(bounds, e0_unit)]
    env = Envelope(suggest_rho0(spec, bounds), 1e-4, 1.0, 2e-4)
    assert validate_c1(env, sum(c * e for c, e in zip(spec.coeffs, e0)))


@given(envelopes, st.floats(0, 50), st.floats(1e-6, 10))
def test_rho_strictly_decreasing_and_above_floor(env, t1, gap):
    t2 = t1 + gap
    if env.rho0 * math.exp(-env.mu * t2) > 1e-12 * env.rho_inf:
        assert rho(env, t2) < rho(env, t1)
    assert rho(env, t1) >= env.rho_inf
    if env.mu * t1 < 30:
        assert rho(env, t1) > env.rho_inf


@given(envelopes)
def test_derivative_band_dense_grid(env):
    t = np.linspace(0, 20, 2001)
    d = rho_dot(env, t)
    assert np.all(d <= 0)
    assert np.all(d >= -env.mu * env.rho0)


def test_finite_difference_converges_quadratically():
    t0 = 0.4
    errors = []
    for h in (1e-2, 5e-3, 2.5e-3):
        fd = (rho(EX1, t0 + h) - rho(EX1, t0 - h)) / (2 * h)
        errors.append(abs(fd - rho_dot(EX1, t0)))
    assert 3.5 < errors[0] / errors[1] < 4.5
    assert 3.5 < errors[1] / errors[2] < 4.5


@given(envelopes)
def test_band_nesting(env):
    bound = reaching_time_bound(env)
    assert rho(env, bound) == pytest.approx(env.epsilon, rel=1e-12)
    assert rho(env, bound * 1.01 + 1e-9) < env.epsilon
