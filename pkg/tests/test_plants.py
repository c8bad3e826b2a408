import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsmc.controllers import QsmcLaw
from qsmc.envelope import Envelope
from qsmc.expr import ExprError
from qsmc.plants import (
    BUILTIN_SOURCES, InitialCondition, PlantModel, ReferenceSignal, builtin, dynamics, error_state,
    plant_from_expressions, reference_from_expressions, validate_assumptions,
)
from qsmc.sim import SimConfig, SimulationAbort, simulate
from qsmc.surface import SurfaceSpec, binomial_surface

from conftest import EX1_ENV

finite = st.floats(-5, 5)


def test_pendulum_dynamics_examples(pendulum):
    plant, _, _ = pendulum
    gain = 1.0 / (0.01 * 9.8 ** 2)
    np.testing.assert_allclose(dynamics(plant, [0.0, 0.0], 1.0, 0.0), [0.0, gain], rtol=1e-14)
    assert gain == pytest.approx(1.04123, abs=1e-5)
    x, t = [0.4, -0.3], 1.1
    expected = -math.sin(0.4) + 0.3 + math.sin(-0.3) + gain * 2.0 + 0.5 * math.sin(t)
    np.testing.assert_allclose(dynamics(plant, x, 2.0, t), [-0.3, expected], rtol=1e-14)


def test_dynamics_rejects_wrong_dimension(pendulum):
    with pytest.raises(ValueError):
        dynamics(pendulum[0], [0.0, 0.0, 0.0], 1.0, 0.0)


def test_error_state_examples(pendulum, example2):
    np.testing.assert_allclose(error_state([0.9, 0.9], pendulum[1], 0.0), [0.9, -0.1], atol=1e-15)
    # y_des(0)=1, y_des'(0)=1, y_des''(0)=-0.25, y_des'''(0)=-1
    np.testing.assert_allclose(error_state([0.5] * 4, example2[1], 0.0), [-0.5, -0.5, 0.75, 1.5], atol=1e-15)
    with pytest.raises(ValueError):
        error_state([0.5] * 3, example2[1], 0.0)


def test_builtin_catalogue(pendulum, example2):
    plant, ref, ics = pendulum
    assert (plant.order, ref.order, len(ics)) == (2, 2, 4)
    assert [ic.x0 for ic in ics] == [(0.9, 0.9), (0.7, 0.7), (0.3, 0.3), (0.1, 0.1)]
    plant2, ref2, ics2 = example2
    assert (plant2.order, ref2.order, len(ics2)) == (4, 4, 3)
    assert builtin("example1")[0].name == "pendulum"
    with pytest.raises(KeyError):
        builtin("cart-pole")


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
def test_example2_gain_stays_in_unit_to_three(x):
    g = builtin("example2")[0].gain(x)
    assert 1.0 <= g <= 3.0


@pytest.mark.parametrize("name", ["pendulum", "example2"])
def test_builtin_callables_match_expression_sources(name):
    src = BUILTIN_SOURCES[name]
    plant, ref, _ = builtin(name)
    parsed = plant_from_expressions(src["order"], src["f"], src["g"], src["d"])
    parsed_ref = reference_from_expressions(src["reference"])
    rng = np.random.default_rng(7)
    for x in rng.uniform(-3, 3, size=(200, src["order"])):
        assert parsed.drift(x) == pytest.approx(plant.drift(x), rel=1e-13, abs=1e-14)
        assert parsed.gain(x) == pytest.approx(plant.gain(x), rel=1e-14)
    for t in list(rng.uniform(0, 20, 200)) + [0.0, 6.0, 9.0, 20.0]:
        assert parsed.disturbance(t) == pytest.approx(plant.disturbance(t), rel=1e-13, abs=1e-14)
        for a, b in zip(parsed_ref.derivatives, ref.derivatives):
            assert a(t) == pytest.approx(b(t), rel=1e-13, abs=1e-14)


@pytest.mark.parametrize("name", ["pendulum", "example2"])
def test_reference_derivatives_are_consistent(name):
    ref = builtin(name)[1]
    for t in np.linspace(0.1, 19.9, 37):
        for k in range(ref.order):
            errs = []
            for h in (1e-2, 5e-3):
                fd = (ref.derivatives[k](t + h) - ref.derivatives[k](t - h)) / (2 * h)
                errs.append(abs(fd - ref.derivatives[k + 1](t)))
            assert errs[0] < 1e-4
            # second-order convergence unless already at round-off
            assert errs[1] < 1e-10 or 3.0 < errs[0] / errs[1] < 5.0


def test_lift_reconstructs_zero_error(example2):
    ref = example2[1]
    for t in (0.0, 2.5, 13.0):
        np.testing.assert_array_equal(error_state(ref.lift(t), ref, t), np.zeros(4))


@given(st.lists(finite, min_size=3, max_size=3), finite, st.floats(0, 20), st.floats(-10, 10))
def test_strict_feedback_chain(x, u, t, shift):
    base = plant_from_expressions(3, "x1*x2 - x3", "2 + cos(x1)", "sin(t)")
    shifted = PlantModel(3, lambda s: base.drift(s) + shift, base.gain, base.disturbance)
    dx, dx_shift = dynamics(base, x, u, t), dynamics(shifted, x, u, t)
    np.testing.assert_array_equal(dx[:-1], x[1:])
    np.testing.assert_array_equal(dx_shift[:-1], dx[:-1])
    assert dx_shift[-1] == pytest.approx(dx[-1] + shift, abs=1e-9)


def test_expression_plant_rejects_time_in_state_functions():
    with pytest.raises(ExprError):
        plant_from_expressions(2, "x1 + t", "1", "0")
    with pytest.raises(ExprError):
        plant_from_expressions(2, "x1", "1", "x1")


def test_model_validation():
    with pytest.raises(ValueError):
        PlantModel(0, abs, abs, abs)
    with pytest.raises(ValueError):
        PlantModel(2, abs, abs, abs, gain_sign=0)
    with pytest.raises(ValueError):
        PlantModel(2, abs, abs, abs, dist_bound=-1.0)
    with pytest.raises(ValueError):
        ReferenceSignal((math.sin,))
    with pytest.raises(ValueError):
        InitialCondition((0.1, 0.2), error_bounds=(1.0, 0.0))
    with pytest.raises(ValueError):
        InitialCondition((0.1, float("nan")))


def test_validate_assumptions_pendulum(pendulum):
    plant, ref, _ = pendulum
    report = validate_assumptions(plant, ref, InitialCondition((0.9, 0.9)), binomial_surface(2, 2.0), EX1_ENV)
    assert report.ok
    assert report.sigma0 == pytest.approx(1.7, rel=1e-14)
    assert report.c1_ok and report.gain_sign_ok and report.gain_floor_ok
    assert report.dist_bound_status == "asserted, unverified"
    assert report.as_dict()["ok"] is True


def test_validate_assumptions_flags_problems(pendulum):
    plant, ref, _ = pendulum
    declared = PlantModel(2, plant.drift, plant.gain, plant.disturbance, dist_bound=0.4, name="pendulum")
    grid = np.linspace(0, 20, 2001)
    rep = validate_assumptions(declared, ref, InitialCondition((0.9, 0.9), (0.5, 0.5)), binomial_surface(2, 2.0),
                               Envelope(1.5, 0.05, 3.0, 0.1), dist_grid=grid)
    assert not rep.ok
    assert rep.dist_bound_status.startswith("declared, violated")
    assert rep.error_bounds_ok is False
    assert rep.c1_ok is False
    assert rep.suggested_rho0 == pytest.approx(1.1 * 1.5, rel=1e-14)
    assert len(rep.issues) == 3

    flipped = PlantModel(2, plant.drift, plant.gain, plant.disturbance, gain_sign=-1)
    rep = validate_assumptions(flipped, ref, InitialCondition((0.0, 0.0)))
    assert not rep.gain_sign_ok and not rep.ok


def test_gain_sign_change_aborts_simulation():
    plant = plant_from_expressions(2, "0", "sin(x1)", "0", gain_sign=1)
    ref = reference_from_expressions(["-1", "0", "0"])
    law = QsmcLaw(Envelope(2.0, 0.05, 3.0, 0.1), binomial_surface(2, 1.0))
    with pytest.raises(SimulationAbort) as info:
        simulate(plant, ref, law, InitialCondition((0.5, 0.0)), SimConfig(dt=1e-3, horizon=10.0))
    abort = info.value
    assert "gain" in str(abort)
    assert 0 < abort.time < 10.0
    assert abort.state[0] <= 1e-3
    traj = abort.trajectory
    assert len(traj) >= 1 and traj.t[-1] <= abort.time
    assert np.all(traj.x[:-1, 0] > 0)


def test_surface_order_must_match_plant(pendulum):
    plant, ref, ics = pendulum
    law = QsmcLaw(EX1_ENV, SurfaceSpec((6.0, 12.0, 8.0, 1.0)))
    with pytest.raises(ValueError):
        simulate(plant, ref, law, ics[0], SimConfig(horizon=0.01))
