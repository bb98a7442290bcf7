"""Closed-loop aerocapture: truth plant at the integration rate, guidance at its own rate."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from aerocap import _kernels
from aerocap.aero import QUADRATIC_FIT, AeroModel, VehicleModel
from aerocap.dynamics import (STATUS_NAMES, ControlCommand, ModelBundle, Plant, SimState,
                              trace_row)
from aerocap.guidance import Guidance, GuidanceConfig, Predictor
from aerocap.orbits import (OrbitError, TargetOrbit, apoapsis, delta_v, exit_velocity_target,
                            inertial_from_relative, period_and_classify, relative_components,
                            semi_major_axis)
from aerocap.planet import PlanetModel


@dataclass(frozen=True)
class EntryState:
    """Entry interface conditions; speed, flight-path angle and heading are inertial."""

    altitude: float = 1000e3
    velocity: float = 23.78e3
    efpa_deg: float = -10.79
    azimuth_deg: float = 117.45
    latitude_deg: float = -16.02
    longitude_deg: float = 262.12

    def to_sim_state(self, planet: PlanetModel) -> SimState:
        r = planet.R0 + self.altitude
        phi = math.radians(self.latitude_deg)
        V, gamma, psi = relative_components(r, phi, self.velocity, math.radians(self.efpa_deg),
                                            math.radians(self.azimuth_deg), planet.Omega)
        return SimState(0.0, r, math.radians(self.longitude_deg), phi, V, gamma, psi)


@dataclass(frozen=True)
class Mission:
    entry: EntryState = field(default_factory=EntryState)
    target_apoapsis_alt: float = 2.0e9
    target_periapsis_alt: float = 4.0e6
    exit_altitude: float = 1000e3
    crash_altitude: float = 0.0
    plant_dt: float = 0.01
    t_max: float = 5000.0

    def target(self, planet: PlanetModel) -> TargetOrbit:
        return TargetOrbit(planet.R0 + self.target_apoapsis_alt,
                           planet.R0 + self.target_periapsis_alt,
                           planet.R0 + self.exit_altitude)


@dataclass(frozen=True)
class StateNoise:
    """1-sigma Gaussian errors on the navigated (r, V, gamma)."""

    r: float = 0.0
    V: float = 0.0
    gamma_deg: float = 0.0

    @property
    def active(self) -> bool:
        return self.r > 0 or self.V > 0 or self.gamma_deg > 0


@dataclass(frozen=True)
class Scenario:
    """Everything one closed-loop run needs.

    ``planet`` and ``aero`` are the truth models (possibly perturbed or
    dispersed); the guidance predictor flies their nominal versions with
    ``onboard_aero`` when given.
    """

    planet: PlanetModel = field(default_factory=PlanetModel)
    aero: AeroModel = QUADRATIC_FIT
    vehicle: VehicleModel = field(default_factory=VehicleModel)
    mission: Mission = field(default_factory=Mission)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    onboard_aero: AeroModel | None = None
    noise: StateNoise = field(default_factory=StateNoise)
    noise_seed: int = 0


@dataclass
class RunResult:
    status: str
    final: SimState
    v_exit: float
    gamma_exit: float
    v_target: float
    apoapsis: float
    delta_v: float
    period: float
    eccentricity: float
    passed: bool
    t_trigger: float
    t_guidance_end: float
    predictor_calls: int
    wall_time: float
    trace: list[dict] = field(default_factory=list)
    guidance_log: list[dict] = field(default_factory=list)
    solutions: list = field(default_factory=list)

    @property
    def exit_error(self) -> float:
        return self.v_exit - self.v_target


def _noisy(est: SimState, noise: StateNoise, rng: np.random.Generator) -> SimState:
    return SimState(est.t, est.r + rng.normal(0.0, noise.r) if noise.r else est.r,
                    est.theta, est.phi,
                    est.V + rng.normal(0.0, noise.V) if noise.V else est.V,
                    est.gamma + math.radians(rng.normal(0.0, noise.gamma_deg)) if noise.gamma_deg else est.gamma,
                    est.psi)


def simulate(sc: Scenario, record_every: int | None = None) -> RunResult:
    """Fly one closed-loop aerocapture.

    ``record_every`` (plant steps) enables the trajectory trace.
    """
    wall0 = time.perf_counter()
    m = sc.mission
    planet = sc.planet
    target = m.target(planet)
    bundle = ModelBundle(planet, sc.aero, sc.vehicle, planet.R0 + m.crash_altitude, m.t_max)
    onboard = sc.onboard_aero if sc.onboard_aero is not None else sc.aero.nominal
    predictor = Predictor(planet.with_atmosphere(planet.atmosphere.nominal), onboard, sc.vehicle,
                          target, sc.guidance.predictor, planet.R0 + m.crash_altitude)
    guid = Guidance(sc.guidance, predictor, sc.vehicle)

    cmd0 = ControlCommand(sc.guidance.initial_alpha, sc.guidance.initial_sigma).clamped(sc.vehicle)
    plant = Plant(m.entry.to_sim_state(planet), cmd0, bundle, m.plant_dt, target.r_exit)
    steps_per_guidance = max(1, int(round(1.0 / (sc.guidance.rate_hz * m.plant_dt))))
    rng = np.random.default_rng(sc.noise_seed)

    trace = []
    n = 0
    phase = "pre-trigger"
    while plant.status == _kernels.RUNNING:
        if n % steps_per_guidance == 0:
            truth = plant.state
            est = _noisy(truth, sc.noise, rng) if sc.noise.active else truth
            alpha, sigma = guid.step(truth.t, est, plant.sensed(), (float(plant.act[0]), float(plant.act[1])))
            cmd = ControlCommand(alpha, sigma).clamped(sc.vehicle)
            plant.command(cmd.alpha_cmd, cmd.sigma_cmd)
            phase = guid.log[-1]["phase"]
        if record_every and n % record_every == 0:
            trace.append(trace_row(plant.state, plant.control, bundle, phase))
        chunk = steps_per_guidance - n % steps_per_guidance
        if record_every:
            chunk = min(chunk, record_every - n % record_every)
        plant.advance(chunk)
        n += chunk
    final = plant.state
    if record_every:
        trace.append(trace_row(final, plant.control, bundle, phase))

    status = STATUS_NAMES[plant.status]
    v_exit, g_exit = inertial_from_relative(final, planet)
    T, e, passed = period_and_classify(final.r, v_exit, g_exit, planet.mu,
                                       exited=status == "exited")
    ra = dv = math.nan
    if status == "exited":
        try:
            a = semi_major_axis(final.r, v_exit, planet.mu)
            ra = apoapsis(final.r, v_exit, g_exit, planet.mu)
            dv = delta_v(ra, a, target, planet.mu)
        except OrbitError:
            pass
    gs = guid.state
    return RunResult(
        status=status, final=final, v_exit=v_exit, gamma_exit=g_exit,
        v_target=exit_velocity_target(target, planet.mu), apoapsis=ra, delta_v=dv, period=T,
        eccentricity=e, passed=passed, t_trigger=gs.t_trigger, t_guidance_end=gs.t_end,
        predictor_calls=predictor.calls, wall_time=time.perf_counter() - wall0,
        trace=trace, guidance_log=guid.log, solutions=guid.solutions,
    )
