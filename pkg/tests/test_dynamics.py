import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aerocap.aero import QUADRATIC_FIT, VehicleModel
from aerocap.dynamics import (ControlCommand, LonState, ModelBundle, Plant, SimState,
                              SingularityError, full_derivatives, lon_derivatives,
                              propagate_to_exit, step)
from aerocap.planet import AtmosphereModel, PlanetModel
from aerocap.simulation import EntryState

# 50-digit evaluation of the rotating-planet equations (scripts/derive_oracles.py)
# at the nominal entry state, alpha = -17 deg, sigma = -165 deg.
ENTRY_REL = (21565.179387772745, -0.20793210433216941, 2.1063571372096155)
RHS_ENTRY = (-4451.8507149102281, 0.0007108466105380265, -0.00040544306366205812,
             1.603695730417374, 0.00059871669387349134, -0.0002767426683505395)

VACUUM = AtmosphereModel(rho0=1e-300, scale_height=1.0, h_top=-1.0)


def vacuum_bundle(J2=0.0, Omega=0.0):
    planet = PlanetModel(J2=J2, Omega=Omega, atmosphere=VACUUM)
    return ModelBundle(planet, QUADRATIC_FIT, VehicleModel())


def energy(s: SimState, mu: float) -> float:
    return 0.5 * s.V**2 - mu / s.r


def test_entry_state_conversion_matches_vector_oracle():
    s = EntryState().to_sim_state(PlanetModel())
    assert (s.V, s.gamma, s.psi) == pytest.approx(ENTRY_REL, rel=1e-13)


def test_full_rhs_matches_independent_transcription():
    planet = PlanetModel()
    s = EntryState().to_sim_state(planet)
    d = full_derivatives(s, ControlCommand(-17.0, -165.0), planet, QUADRATIC_FIT, VehicleModel())
    for got, want in zip(d, RHS_ENTRY):
        assert got == pytest.approx(want, rel=1e-10)


def test_level_flight_has_no_climb_rate():
    planet = PlanetModel()
    s = SimState(0.0, planet.R0 + 300e3, 0.0, 0.2, 20e3, 0.0, 1.0)
    d = full_derivatives(s, ControlCommand(-17.0, 60.0), planet, QUADRATIC_FIT, VehicleModel())
    assert d[0] == 0.0


def test_circular_orbit_equilibrium():
    b = vacuum_bundle()
    r = b.planet.R0 + 2000e3
    s = SimState(0.0, r, 0.0, 0.3, math.sqrt(b.planet.mu / r), 0.0, 0.7)
    d = full_derivatives(s, ControlCommand(-17.0, 0.0), b.planet, b.aero, b.vehicle)
    assert abs(d[4]) < 1e-18


def test_lon_equilibria():
    b = vacuum_bundle()
    r = b.planet.R0 + 2000e3
    d = lon_derivatives(LonState(r, math.sqrt(b.planet.mu / r), 0.0), 1.0, -17.0, b.planet,
                        b.aero, b.vehicle)
    assert d[0] == 0.0 and d[1] == 0.0 and abs(d[2]) < 1e-18


@given(st.floats(50e3, 900e3), st.floats(5e3, 25e3), st.floats(-0.3, 0.3),
       st.floats(-1.2, 1.2), st.floats(-3.0, 3.0), st.floats(-180.0, 180.0), st.floats(-25.0, -10.0))
def test_full_reduces_to_longitudinal_without_rotation_or_j2(h, V, gamma, phi, psi, sigma, alpha):
    planet = PlanetModel(J2=0.0, Omega=0.0)
    s = SimState(0.0, planet.R0 + h, 0.0, phi, V, gamma, psi)
    full = full_derivatives(s, ControlCommand(alpha, sigma), planet, QUADRATIC_FIT, VehicleModel())
    lon = lon_derivatives(s.lon, math.cos(math.radians(sigma)), alpha, planet, QUADRATIC_FIT,
                          VehicleModel())
    np.testing.assert_allclose(full[[0, 3, 4]], lon, rtol=1e-12, atol=1e-15)


def test_heading_singularity_signalled():
    planet = PlanetModel()
    s = SimState(0.0, planet.R0 + 1e5, 0.0, 0.0, 1e4, math.pi / 2, 0.0)
    with pytest.raises(SingularityError):
        full_derivatives(s, ControlCommand(-17.0, 0.0), planet, QUADRATIC_FIT, VehicleModel())


def test_rate_limit_one_step():
    b = vacuum_bundle()
    s0 = SimState(0.0, b.planet.R0 + 300e3, 0.0, 0.0, 20e3, 0.0, 1.0)
    _, c = step(s0, ControlCommand(-17.0, 165.0, -17.0, 15.0), 0.01, b)
    assert c.sigma_actual == pytest.approx(15.15, abs=1e-12)
    assert c.alpha_actual == -17.0


@given(st.floats(-25.0, -10.0), st.floats(-165.0, 165.0), st.integers(1, 200))
def test_actuators_never_exceed_rate_limits(alpha_cmd, sigma_cmd, n):
    b = ModelBundle(PlanetModel(), QUADRATIC_FIT, VehicleModel())
    s0 = SimState(0.0, b.planet.R0 + 300e3, 0.0, 0.0, 20e3, 0.0, 1.0)
    plant = Plant(s0, ControlCommand(alpha_cmd, sigma_cmd, -17.0, 0.0), b, 0.01)
    prev = plant.act.copy()
    for _ in range(n):
        plant.advance(1)
        da, ds = np.abs(plant.act - prev)
        assert da <= 5.0 * 0.01 + 1e-12
        assert ds <= 15.0 * 0.01 + 1e-12
        prev = plant.act.copy()


def test_rk4_fourth_order_local_error():
    planet = PlanetModel()
    b = ModelBundle(planet, QUADRATIC_FIT, VehicleModel())
    s0 = SimState(0.0, planet.R0 + 250e3, 0.0, -0.2, 21e3, -0.02, 2.0)
    c = ControlCommand(-17.0, -120.0)

    def advance(dt, n):
        p = Plant(s0, c, b, dt)
        p.advance(n)
        return p.x.copy()

    # Local error of one step scales as dt^5: compare against a fine reference.
    H = 8.0
    ref = advance(H / 256, 256)
    e1 = np.abs(advance(H, 1) - ref)[[0, 3, 4]]
    e2 = np.abs(advance(H / 2, 1) - advance(H / 2 / 128, 128))[[0, 3, 4]]
    ratio = e1 / e2
    assert np.all(ratio > 16) and np.all(ratio < 64)


def test_vacuum_energy_conservation():
    b = vacuum_bundle()
    mu = b.planet.mu
    s0 = SimState(0.0, b.planet.R0 + 2000e3, 0.0, 0.1, 18e3, 0.05, 1.0)
    p = Plant(s0, ControlCommand(-17.0, 30.0), b, 0.01)
    p.advance(100_000)
    e0, e1 = energy(s0, mu), energy(p.state, mu)
    assert abs(e1 - e0) / abs(e0) < 1e-9


def test_drag_only_energy_non_increasing():
    planet = PlanetModel(J2=0.0, Omega=0.0)
    aero = replace(QUADRATIC_FIT, k_CL=1e-300)
    b = ModelBundle(planet, aero, VehicleModel())
    s = EntryState().to_sim_state(planet)
    p = Plant(s, ControlCommand(-17.0, 0.0), b, 0.01)
    e_prev = energy(p.state, planet.mu)
    for _ in range(300):
        p.advance(100)
        e = energy(p.state, planet.mu)
        assert e <= e_prev + 1e-9 * abs(e_prev)
        e_prev = e


def test_longitudinal_and_full_agree_without_rotation():
    planet = PlanetModel(J2=0.0, Omega=0.0)
    b = ModelBundle(planet, QUADRATIC_FIT, VehicleModel())
    s0 = EntryState().to_sim_state(planet)
    sigma = -100.0
    full = propagate_to_exit(s0, lambda s: (-17.0, sigma), b, dt=0.01, r_exit=planet.R0 + 1000e3,
                             record_every=100)

    x = s0.lon.as_array()
    u1 = math.cos(math.radians(sigma))
    dt = 0.01

    def f(y):
        return lon_derivatives(LonState(*y), u1, -17.0, planet, QUADRATIC_FIT, VehicleModel()).copy()

    worst = 0.0
    for row in full.rows[1:-1]:
        for _ in range(100):
            k1 = f(x)
            k2 = f(x + 0.5 * dt * k1)
            k3 = f(x + 0.5 * dt * k2)
            k4 = f(x + dt * k3)
            x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        h = x[0] - planet.R0
        worst = max(worst, abs(h - row["h"]) / (row["h"] + planet.R0), abs(x[1] - row["V"]) / row["V"])
    assert worst < 1e-9


def test_shallow_lift_up_exits():
    planet = PlanetModel()
    b = ModelBundle(planet, QUADRATIC_FIT, VehicleModel())
    s0 = replace(EntryState(), efpa_deg=-9.8).to_sim_state(planet)
    tr = propagate_to_exit(s0, lambda s: (-25.0, 15.0), b, r_exit=planet.R0 + 1000e3,
                           policy_interval=100)
    assert tr.status == "exited"
    assert tr.final.r >= planet.R0 + 1000e3 and tr.final.gamma > 0


def test_vertical_entry_crashes():
    planet = PlanetModel()
    b = ModelBundle(planet, QUADRATIC_FIT, VehicleModel())
    s0 = SimState(0.0, planet.R0 + 1000e3, 0.0, 0.0, 23e3, -math.pi / 2 + 1e-6, 0.0)
    tr = propagate_to_exit(s0, lambda s: (-25.0, 15.0), b, r_exit=planet.R0 + 1000e3,
                           policy_interval=100)
    assert tr.status == "crashed"


def test_timeout_status():
    b = vacuum_bundle()
    b = replace(b, t_max=10.0)
    s0 = SimState(0.0, b.planet.R0 + 2000e3, 0.0, 0.0, 18e3, 0.0, 1.0)
    tr = propagate_to_exit(s0, lambda s: (-17.0, 0.0), b, r_exit=b.planet.R0 + 1e9,
                           policy_interval=100)
    assert tr.status == "timeout"


def test_clamped_command_respects_limits():
    c = ControlCommand(-40.0, -179.0).clamped(VehicleModel())
    assert c.alpha_cmd == -25.0 and c.sigma_cmd == -165.0
    c = ControlCommand(0.0, 2.0).clamped(VehicleModel())
    assert c.alpha_cmd == -10.0 and c.sigma_cmd == 15.0
