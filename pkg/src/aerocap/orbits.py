"""Post-exit Keplerian mechanics: apoapsis, Delta-V cost, exit-speed target, capture check.

All formulas take inertial speed and flight-path angle. ``inertial_from_relative``
is the single bridge from the rotating-frame simulation state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DAY = 86400.0
YEAR = 365.25 * DAY
SUCCESS_WINDOW = (10 * DAY, 2.5 * YEAR)


class OrbitError(ValueError):
    """Orbit quantity undefined (parabolic or hyperbolic input)."""


@dataclass(frozen=True)
class TargetOrbit:
    ra_target: float
    rp_target: float
    r_exit: float

    def __post_init__(self):
        if not self.rp_target < self.ra_target:
            raise ValueError("target periapsis must be below target apoapsis")
        if not self.r_exit < self.ra_target + self.rp_target:
            raise ValueError("exit radius must be below ra + rp")

    @property
    def sma(self) -> float:
        return 0.5 * (self.ra_target + self.rp_target)


def semi_major_axis(r: float, V: float, mu: float) -> float:
    denom = 2.0 * mu / r - V * V
    if denom <= 0:
        raise OrbitError(f"non-elliptical state: V={V:.3f} m/s at r={r:.1f} m")
    return mu / denom


def eccentricity(r: float, V: float, gamma: float, mu: float) -> float:
    energy = 0.5 * V * V - mu / r
    h = r * V * math.cos(gamma)
    return math.sqrt(max(0.0, 1.0 + 2.0 * energy * h * h / (mu * mu)))


def apoapsis(r: float, V: float, gamma: float, mu: float) -> float:
    """Keplerian apoapsis radius from inertial (r, V, gamma)."""
    a = semi_major_axis(r, V, mu)
    disc = 1.0 - (V * r * math.cos(gamma)) ** 2 / (mu * a)
    return a * (1.0 + math.sqrt(max(disc, 0.0)))


def delta_v(ra_achieved: float, a_achieved: float, target: TargetOrbit, mu: float) -> float:
    """Periapsis raise at the achieved apoapsis plus apoapsis correction at target periapsis."""
    if not (a_achieved > 0 and math.isfinite(ra_achieved) and ra_achieved > 0):
        raise OrbitError("delta_v needs an elliptical achieved orbit")
    ra = ra_achieved
    rp_t = target.rp_target
    ra_t = target.ra_target
    raise_term = abs(math.sqrt(1.0 / ra - 1.0 / (ra + rp_t))
                     - math.sqrt(max(1.0 / ra - 1.0 / (2.0 * a_achieved), 0.0)))
    correction = abs(math.sqrt(1.0 / rp_t - 1.0 / (ra_t + rp_t))
                     - math.sqrt(1.0 / rp_t - 1.0 / (ra + rp_t)))
    return math.sqrt(2.0 * mu) * (raise_term + correction)


def exit_velocity_target(target: TargetOrbit, mu: float) -> float:
    """Exit speed whose vis-viva energy equals that of the target orbit."""
    return math.sqrt(2.0 * mu * (1.0 / target.r_exit - 1.0 / (target.ra_target + target.rp_target)))


def period(a: float, mu: float) -> float:
    return 2.0 * math.pi * math.sqrt(a ** 3 / mu)


def period_and_classify(r: float, V: float, gamma: float, mu: float,
                        window: tuple[float, float] = SUCCESS_WINDOW,
                        exited: bool = True) -> tuple[float, float, bool]:
    """(period [s], eccentricity, pass). Hyperbolic exits get an infinite period."""
    e = eccentricity(r, V, gamma, mu)
    if not exited:
        return math.nan, e, False
    try:
        a = semi_major_axis(r, V, mu)
    except OrbitError:
        return math.inf, e, False
    T = period(a, mu)
    return T, e, window[0] <= T <= window[1]


def inertial_components(r: float, phi: float, V: float, gamma: float, psi: float,
                        Omega: float) -> tuple[float, float, float]:
    """Planet-relative (V, gamma, psi) -> inertial (V, gamma, psi)."""
    up = V * math.sin(gamma)
    north = V * math.cos(gamma) * math.cos(psi)
    east = V * math.cos(gamma) * math.sin(psi) + Omega * r * math.cos(phi)
    horiz = math.hypot(north, east)
    return math.hypot(horiz, up), math.atan2(up, horiz), math.atan2(east, north)


def relative_components(r: float, phi: float, V: float, gamma: float, psi: float,
                        Omega: float) -> tuple[float, float, float]:
    """Inverse of :func:`inertial_components`."""
    return inertial_components(r, phi, V, gamma, psi, -Omega)


def inertial_from_relative(state, planet) -> tuple[float, float]:
    """Inertial (V, gamma) for a simulation state (anything with r, phi, V, gamma, psi)."""
    V, gamma, _ = inertial_components(state.r, state.phi, state.V, state.gamma, state.psi,
                                      planet.Omega)
    return V, gamma
