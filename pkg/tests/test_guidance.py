import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aerocap.aero import QUADRATIC_FIT, VehicleModel
from aerocap.dynamics import ModelBundle, SimState, propagate_to_exit
from aerocap.guidance import (GuidanceConfig, LoadTrigger, Predictor, PredictorConfig, casm_solve,
                              constant_bank_solve, density_ratio_filter, load_trigger_check)
from aerocap.orbits import TargetOrbit, inertial_from_relative
from aerocap.planet import AtmosphereModel, PlanetModel
from aerocap.simulation import EntryState, Mission

A_LIM = (-25.0, -10.0)
S_LIM = (15.0, 165.0)


def test_load_trigger_latches():
    trig = LoadTrigger(0.98)
    assert not trig.update(0.0, 0.5)
    assert trig.update(1.0, 1.0)
    assert trig.update(2.0, 0.0)
    assert trig.t_fired == 1.0
    assert load_trigger_check(0.0, 0.98, True)
    assert not load_trigger_check(0.5, 0.98, False)
    assert GuidanceConfig().trigger_accel == pytest.approx(0.980665)


@given(st.floats(0.01, 1.0), st.integers(0, 60))
def test_density_filter_geometric_response(k, n):
    est = 1.0
    for _ in range(n):
        est = density_ratio_filter(1.2, 1.0, est, gain=k)
    assert est == pytest.approx(1.2 - 0.2 * (1 - k) ** n, rel=1e-12)


def test_density_filter_zero_gain_and_low_drag_hold():
    assert density_ratio_filter(5.0, 1.0, 0.8, gain=0.0) == 0.8
    assert density_ratio_filter(5.0, 1e-6, 0.8, gain=0.5) == 0.8
    assert density_ratio_filter(1e6, 1.0, 1.0, gain=1.0) == 10.0


def test_casm_linear_residual_root():
    def f(s, a):
        return s - 100.0 + 2.0 * (a + 17.0)

    res = casm_solve(f, (-17.0, 30.0, f(30.0, -17.0)), A_LIM, S_LIM)
    # The best opposite-sign partner is the (165, -25) corner; f is linear along the segment.
    assert res.bracketed
    assert res.kappa == pytest.approx(70.0 / 119.0, abs=1e-9)
    assert res.sigma == pytest.approx(30.0 + 135.0 * 70.0 / 119.0, abs=1e-6)
    assert res.alpha == pytest.approx(-17.0 - 8.0 * 70.0 / 119.0, abs=1e-6)
    assert abs(f(res.sigma, res.alpha)) <= 1e-3


def test_casm_fallback_picks_smallest_residual():
    def f(s, a):
        return s + a + 1000.0

    res = casm_solve(f, (-17.0, 30.0, f(30.0, -17.0)), A_LIM, S_LIM)
    assert not res.bracketed and math.isnan(res.kappa)
    assert (res.sigma, res.alpha) == (15.0, -25.0)
    assert res.value == 990.0


def test_casm_keeps_previous_command_on_zero_residual():
    res = casm_solve(lambda s, a: 1.0, (-12.0, 40.0, 0.0), A_LIM, S_LIM)
    assert (res.alpha, res.sigma, res.evaluations) == (-12.0, 40.0, 0)


@given(st.floats(-200.0, 200.0), st.floats(-50.0, 50.0), st.floats(0.1, 10.0))
def test_constant_bank_solve(root_offset, slope_sign, scale):
    target = 90.0 + root_offset

    def f(s):
        return scale * (s - target)

    s, z, ok = constant_bank_solve(f, S_LIM)
    if S_LIM[0] < target < S_LIM[1]:
        assert ok and abs(z) <= 1e-3
    else:
        assert not ok
        assert s == (S_LIM[0] if target < S_LIM[0] else S_LIM[1])


def _predictor(planet, cfg=PredictorConfig()):
    tgt = Mission().target(planet)
    return Predictor(planet, QUADRATIC_FIT, VehicleModel(), tgt, cfg), tgt


def test_predictor_vacuum_matches_vis_viva():
    planet = PlanetModel(J2=0.0, Omega=0.0,
                         atmosphere=AtmosphereModel(rho0=1e-300, scale_height=1.0, h_top=-1.0))
    pred, tgt = _predictor(planet, PredictorConfig(dt=0.5))
    r = tgt.r_exit - 200e3
    s = SimState(0.0, r, 0.0, 0.0, 21e3, math.radians(3.0), 1.0)
    v = pred.exit_velocity(s, (), [[-17.0, -60.0]])
    expected = math.sqrt(s.V**2 + 2 * planet.mu * (1 / tgt.r_exit - 1 / r))
    assert v == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("ts", [(200.0, 300.0, 400.0), (300.0, 400.0, 500.0)])
def test_predictor_agrees_with_truth_plant(ts):
    planet = PlanetModel()
    pred, tgt = _predictor(planet)
    s0 = EntryState().to_sim_state(planet)
    levels = [[-25.0, -15.0], [-10.0, -15.0], [-10.0, -165.0], [-25.0, -165.0]]

    def policy(s):
        k = int(np.searchsorted(ts, s.t, side="right"))
        return tuple(levels[k])

    bundle = ModelBundle(planet, QUADRATIC_FIT, VehicleModel())
    tr = propagate_to_exit(s0, policy, bundle, r_exit=tgt.r_exit)
    assert tr.status == "exited"
    v_truth, _ = inertial_from_relative(tr.final, planet)
    v_pred = pred.exit_velocity(s0, ts, levels)
    assert v_pred == pytest.approx(v_truth, rel=5e-3)


def test_predictor_reports_capture_as_depleted():
    planet = PlanetModel()
    pred, _ = _predictor(planet)
    steep = EntryState(efpa_deg=-14.0).to_sim_state(planet)
    assert pred.exit_velocity(steep, (), [[-10.0, -165.0]]) <= 0.0
    assert pred.residual(steep, (), [[-10.0, -165.0]]) <= -pred.v_target


def test_guidance_config_rejects_unknown_algorithm():
    with pytest.raises(ValueError):
        GuidanceConfig(algorithm="bam")


def test_predictor_at_exit_interface_returns_current_speed():
    planet = PlanetModel()
    pred, tgt = _predictor(planet)
    s = SimState(0.0, tgt.r_exit, 1.0, -0.2, 20.5e3, math.radians(2.0), 2.0)
    v_inertial, _ = inertial_from_relative(s, planet)
    assert pred.exit_velocity(s, (), [[-17.0, -60.0]]) == pytest.approx(v_inertial, rel=1e-12)


def test_longitudinal_predictor_agrees_with_non_rotating_plant():
    planet = PlanetModel(J2=0.0, Omega=0.0)
    pred, tgt = _predictor(planet, PredictorConfig(model="longitudinal"))
    s0 = EntryState().to_sim_state(planet)
    levels = [[-25.0, -15.0], [-10.0, -15.0], [-10.0, -165.0], [-25.0, -165.0]]
    ts = (200.0, 300.0, 400.0)

    def policy(s):
        return tuple(levels[int(np.searchsorted(ts, s.t, side="right"))])

    tr = propagate_to_exit(s0, policy, ModelBundle(planet, QUADRATIC_FIT, VehicleModel()),
                           r_exit=tgt.r_exit)
    assert tr.status == "exited"
    assert pred.exit_velocity(s0, ts, levels) == pytest.approx(tr.final.V, rel=5e-3)
