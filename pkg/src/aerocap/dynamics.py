"""Rotating-planet 3-DoF and longitudinal equations of motion, RK4 stepping, exit propagation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from aerocap import _kernels
from aerocap.aero import AeroModel, VehicleModel
from aerocap.planet import PlanetModel

STATUS_NAMES = {
    _kernels.RUNNING: "running",
    _kernels.EXITED: "exited",
    _kernels.CRASHED: "crashed",
    _kernels.TIMEOUT: "timeout",
}


class SingularityError(ArithmeticError):
    """Heading equation undefined at cos(gamma) = 0."""


@dataclass(frozen=True)
class SimState:
    t: float
    r: float
    theta: float
    phi: float
    V: float
    gamma: float
    psi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.theta, self.phi, self.V, self.gamma, self.psi])

    @classmethod
    def from_array(cls, t: float, x) -> "SimState":
        return cls(float(t), *(float(v) for v in x))

    @property
    def lon(self) -> "LonState":
        return LonState(self.r, self.V, self.gamma)


@dataclass(frozen=True)
class LonState:
    r: float
    V: float
    gamma: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.V, self.gamma])


@dataclass
class ControlCommand:
    """Commanded and actual (alpha, sigma) [deg]. Sigma is signed."""

    alpha_cmd: float
    sigma_cmd: float
    alpha_actual: float | None = None
    sigma_actual: float | None = None

    def __post_init__(self):
        if self.alpha_actual is None:
            self.alpha_actual = self.alpha_cmd
        if self.sigma_actual is None:
            self.sigma_actual = self.sigma_cmd

    def clamped(self, vehicle: VehicleModel) -> "ControlCommand":
        a_lo, a_hi = vehicle.alpha_limits
        s_lo, s_hi = vehicle.sigma_limits
        sign = -1.0 if self.sigma_cmd < 0 else 1.0
        return replace(
            self,
            alpha_cmd=min(max(self.alpha_cmd, a_lo), a_hi),
            sigma_cmd=sign * min(max(abs(self.sigma_cmd), s_lo), s_hi),
        )


@dataclass(frozen=True)
class ModelBundle:
    """Truth models flown by the plant."""

    planet: PlanetModel
    aero: AeroModel
    vehicle: VehicleModel
    r_floor: float | None = None
    t_max: float = 5000.0

    @property
    def floor(self) -> float:
        return self.planet.R0 if self.r_floor is None else self.r_floor


def full_derivatives(state: SimState, control: ControlCommand, planet: PlanetModel,
                     aero: AeroModel, vehicle: VehicleModel) -> np.ndarray:
    """Time derivative of (r, theta, phi, V, gamma, psi) using the actual controls."""
    if abs(math.cos(state.gamma)) < 1e-12:
        raise SingularityError("cos(gamma) = 0 in the heading equation")
    out = np.empty(6)
    _kernels.full_rhs(state.as_array(), control.alpha_actual, control.sigma_actual,
                      planet.packed, planet.atmosphere.packed, 1.0, aero.packed,
                      vehicle.s_over_2m, out)
    return out


def lon_derivatives(state: LonState, u1: float, alpha: float, planet: PlanetModel,
                    aero: AeroModel, vehicle: VehicleModel) -> np.ndarray:
    """Time derivative of (r, V, gamma): spherical gravity, no rotation."""
    out = np.empty(3)
    _kernels.lon_rhs(state.as_array(), float(alpha), float(u1), planet.packed,
                     planet.atmosphere.packed, 1.0, aero.packed, vehicle.s_over_2m, out)
    return out


def sensed_accelerations(state: SimState, alpha: float, bundle: ModelBundle) -> tuple[float, float]:
    """Truth (L, D) [m/s^2] at the state, what an ideal accelerometer reports."""
    L, D, _ = _kernels.lift_drag(state.as_array(), float(alpha), bundle.planet.packed,
                                 bundle.planet.atmosphere.packed, 1.0, bundle.aero.packed,
                                 bundle.vehicle.s_over_2m)
    return float(L), float(D)


class Plant:
    """Mutable truth-plant integrator: owns one trajectory's state and actuators."""

    def __init__(self, state: SimState, control: ControlCommand, bundle: ModelBundle,
                 dt: float = 0.01, r_exit: float | None = None):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.bundle = bundle
        self.dt = dt
        self.x = state.as_array()
        self.t = np.array([state.t])
        self.act = np.array([control.alpha_actual, control.sigma_actual], dtype=float)
        self.cmd = np.array([control.alpha_cmd, control.sigma_cmd], dtype=float)
        v = bundle.vehicle
        self.rates = np.array([v.alpha_rate_limit, v.sigma_rate_limit], dtype=float)
        self.r_exit = math.inf if r_exit is None else r_exit
        self.status = _kernels.RUNNING

    @property
    def state(self) -> SimState:
        return SimState.from_array(self.t[0], self.x)

    @property
    def control(self) -> ControlCommand:
        return ControlCommand(self.cmd[0], self.cmd[1], self.act[0], self.act[1])

    def command(self, alpha: float, sigma: float) -> None:
        self.cmd[0] = alpha
        self.cmd[1] = sigma

    def advance(self, n_steps: int) -> int:
        b = self.bundle
        self.status = _kernels.plant_advance(
            self.x, self.t, self.act, self.cmd, self.rates, self.dt, n_steps,
            b.planet.packed, b.planet.atmosphere.packed, b.aero.packed, b.vehicle.s_over_2m,
            self.r_exit, b.floor, b.t_max,
        )
        return self.status

    def sensed(self) -> tuple[float, float]:
        return sensed_accelerations(self.state, self.act[0], self.bundle)


def step(state: SimState, control: ControlCommand, dt: float,
         bundle: ModelBundle) -> tuple[SimState, ControlCommand]:
    """One rate-limited RK4 step of the full dynamics."""
    plant = Plant(state, control, bundle, dt)
    plant.advance(1)
    return plant.state, plant.control


@dataclass
class Trajectory:
    status: str
    final: SimState
    rows: list[dict] = field(default_factory=list)

    def write_csv(self, path) -> None:
        write_trace_csv(self.rows, path)


TRACE_COLUMNS = ("t", "h", "V", "gamma_deg", "alpha_deg", "sigma_deg", "rho", "L", "D", "phase")


def trace_row(state: SimState, control: ControlCommand, bundle: ModelBundle, phase) -> dict:
    h = state.r - bundle.planet.R0
    L, D = sensed_accelerations(state, control.alpha_actual, bundle)
    return {
        "t": state.t, "h": h, "V": state.V, "gamma_deg": math.degrees(state.gamma),
        "alpha_deg": control.alpha_actual, "sigma_deg": control.sigma_actual,
        "rho": bundle.planet.atmosphere(h), "L": L, "D": D, "phase": phase,
    }


def write_trace_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in TRACE_COLUMNS])


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def propagate_to_exit(
    state: SimState,
    control_policy: Callable[[SimState], tuple[float, float]],
    bundle: ModelBundle,
    dt: float = 0.01,
    r_exit: float | None = None,
    policy_interval: int = 1,
    record_every: int | None = None,
    initial_control: ControlCommand | None = None,
) -> Trajectory:
    """Integrate until exit (r >= r_exit ascending), crash, or timeout.

    ``control_policy`` maps the current state to an (alpha, sigma) command and
    is consulted every ``policy_interval`` plant steps.
    """
    if r_exit is None:
        r_exit = bundle.planet.R0 + bundle.planet.atmosphere.h_top
    if initial_control is None:
        initial_control = ControlCommand(*control_policy(state))
    plant = Plant(state, initial_control, bundle, dt, r_exit)
    rows = []
    if record_every:
        rows.append(trace_row(plant.state, plant.control, bundle, ""))
    chunk = policy_interval if not record_every else math.gcd(policy_interval, record_every)
    n = 0
    while plant.status == _kernels.RUNNING:
        if n % policy_interval == 0:
            plant.command(*control_policy(plant.state))
        plant.advance(chunk)
        n += chunk
        if record_every and (n % record_every == 0 or plant.status != _kernels.RUNNING):
            rows.append(trace_row(plant.state, plant.control, bundle, ""))
    return Trajectory(STATUS_NAMES[plant.status], plant.state, rows)
