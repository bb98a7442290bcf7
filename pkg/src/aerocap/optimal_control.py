"""Switching functions of the two-channel (alpha, sigma) minimum-Delta-V problem.

The linear aero model gives bang-bang alpha governed by the lift-up/lift-down
switching curves; the quadratic model gives an unconstrained alpha curve that
is clamped to the admissible interval. Costates come from an external optimal
solution; nothing here solves the boundary-value problem.

The bang-bang profile flown by the guidance predictor lives here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from aerocap.aero import AeroModel

EPS_SINGULAR = 1e-12


class SingularityError(ArithmeticError):
    """The alpha^2 coefficient vanished; the quadratic control curve is undefined."""


@dataclass(frozen=True)
class Costate:
    lambda_r: float
    lambda_V: float
    lambda_gamma: float


def _analytic(aero: AeroModel) -> AeroModel:
    if aero.kind == "table":
        raise ValueError("switching functions need an analytic (linear or quadratic) aero model")
    return aero


def h_alpha_up(cs: Costate, V: float, aero: AeroModel) -> float:
    a = _analytic(aero)
    return -cs.lambda_V * a.CDa + cs.lambda_gamma * a.CLa / V


def h_alpha_down(cs: Costate, V: float, aero: AeroModel) -> float:
    a = _analytic(aero)
    return -cs.lambda_V * a.CDa - cs.lambda_gamma * a.CLa / V


def h_alpha2_up(cs: Costate, V: float, aero: AeroModel) -> float:
    a = _analytic(aero)
    return -cs.lambda_V * a.CDa2 + cs.lambda_gamma * a.CLa2 / V


def h_alpha2_down(cs: Costate, V: float, aero: AeroModel) -> float:
    a = _analytic(aero)
    return -cs.lambda_V * a.CDa2 - cs.lambda_gamma * a.CLa2 / V


def sigma_switch_indicator(cs: Costate) -> float:
    """Bank switching function; positive means lift-up (sigma_min)."""
    return cs.lambda_gamma


def optimal_alpha_linear(h_value: float, alpha_limits: tuple[float, float],
                         previous: float | None = None) -> float:
    """Bang-bang alpha: alpha_min for h > 0, alpha_max for h < 0, previous on a tie."""
    a_min, a_max = alpha_limits
    if h_value > 0:
        return a_min
    if h_value < 0:
        return a_max
    return a_min if previous is None else previous


def optimal_sigma(h_sigma: float, sigma_limits: tuple[float, float],
                  previous: float | None = None) -> float:
    s_min, s_max = sigma_limits
    if h_sigma > 0:
        return s_min
    if h_sigma < 0:
        return s_max
    return s_min if previous is None else previous


def calligraphic_A(cs: Costate, V: float, aero: AeroModel, branch: str = "up") -> float:
    """Stationary point of the quadratic-in-alpha Hamiltonian [deg]."""
    if branch == "up":
        h1, h2 = h_alpha_up(cs, V, aero), h_alpha2_up(cs, V, aero)
    elif branch == "down":
        h1, h2 = h_alpha_down(cs, V, aero), h_alpha2_down(cs, V, aero)
    else:
        raise ValueError(f"branch must be 'up' or 'down', got {branch!r}")
    if abs(h2) <= EPS_SINGULAR:
        raise SingularityError(f"|H_alpha2,{branch}| = {abs(h2):.3g} too small")
    return -h1 / (2.0 * h2)


def optimal_alpha_quadratic(A_value: float, alpha_limits: tuple[float, float]) -> float:
    # Plain interval clamp; the published case inequalities list the bounds swapped.
    a_min, a_max = alpha_limits
    return min(max(A_value, a_min), a_max)


@dataclass(frozen=True)
class BangBangProfile:
    """Three-switch profile: (a_min, s_min) -> (a_max, s_min) -> (a_max, s_max) -> phase 4.

    ``phase3_alpha`` selects the phase-3 alpha bound ("max" by default, "min"
    for the variant). The third switch is an alpha switch, so the saturated
    phase-4 level flies the opposite alpha bound at sigma_max.
    """

    ts1: float
    ts2: float
    ts3: float
    alpha_limits: tuple[float, float] = (-25.0, -10.0)
    sigma_limits: tuple[float, float] = (15.0, 165.0)
    phase3_alpha: str = "max"
    phase4: str = "hold-saturated"

    def __post_init__(self):
        if not self.ts1 <= self.ts2 <= self.ts3:
            raise ValueError(f"switching times out of order: {self.ts1}, {self.ts2}, {self.ts3}")
        if self.phase3_alpha not in ("max", "min"):
            raise ValueError("phase3_alpha must be 'max' or 'min'")
        if self.phase4 not in ("hold-saturated", "casm"):
            raise ValueError("phase4 must be 'hold-saturated' or 'casm'")

    @property
    def levels(self) -> tuple[tuple[float, float], ...]:
        return phase_levels(self.alpha_limits, self.sigma_limits, self.phase3_alpha)

    def phase_at(self, t: float) -> int:
        if t < self.ts1:
            return 1
        if t < self.ts2:
            return 2
        if t < self.ts3:
            return 3
        return 4


def phase_levels(alpha_limits, sigma_limits, phase3_alpha: str = "max"):
    """(alpha, |sigma|) for phases 1-4 with saturated phase 4."""
    a_min, a_max = alpha_limits
    s_min, s_max = sigma_limits
    a3, a4 = (a_max, a_min) if phase3_alpha == "max" else (a_min, a_max)
    return ((a_min, s_min), (a_max, s_min), (a3, s_max), (a4, s_max))


def profile_control(profile: BangBangProfile, t: float) -> tuple[float, float] | None:
    """(alpha, |sigma|) at time ``t``; ``None`` in phase 4 when it is flown by CASM."""
    phase = profile.phase_at(t)
    if phase == 4 and profile.phase4 == "casm":
        return None
    return profile.levels[phase - 1]


@dataclass
class SwitchingAnalysis:
    """Per-sample switching functions and the switch times they imply."""

    t: np.ndarray
    h_up: np.ndarray
    h_down: np.ndarray
    h_sigma: np.ndarray
    A_up: np.ndarray
    A_down: np.ndarray
    alpha_linear: np.ndarray
    alpha_quadratic: np.ndarray
    sigma: np.ndarray
    sigma_switch_times: list[float]
    alpha_switch_times: list[float]
    A_gap_at_sigma_switch: list[float]

    COLUMNS = ("t", "H_up", "H_down", "lambda_gamma", "A_up", "A_down",
               "alpha_star_linear", "alpha_star_quadratic", "sigma_star")

    def rows(self):
        cols = (self.t, self.h_up, self.h_down, self.h_sigma, self.A_up, self.A_down,
                self.alpha_linear, self.alpha_quadratic, self.sigma)
        return list(zip(*cols))


def _crossings(t: np.ndarray, y: np.ndarray) -> list[float]:
    """Times where ``y`` changes sign, linearly interpolated; zeros count once."""
    out = []
    last_sign = 0.0
    last_i = None
    for i, v in enumerate(y):
        s = math.copysign(1.0, v) if v != 0 else 0.0
        if s == 0.0:
            continue
        if last_sign != 0.0 and s != last_sign:
            y0, y1 = y[last_i], v
            t0, t1 = t[last_i], t[i]
            out.append(float(t0 + (t1 - t0) * y0 / (y0 - y1)))
        last_sign = s
        last_i = i
    return out


def analyze_switching(t, V, lambda_V, lambda_gamma, linear: AeroModel, quadratic: AeroModel,
                      alpha_limits=(-25.0, -10.0), sigma_limits=(15.0, 165.0),
                      lambda_r=None) -> SwitchingAnalysis:
    """Evaluate both theorems along a stored state/costate trajectory."""
    t = np.asarray(t, float)
    V = np.asarray(V, float)
    lV = np.asarray(lambda_V, float)
    lg = np.asarray(lambda_gamma, float)
    lr = np.zeros_like(t) if lambda_r is None else np.asarray(lambda_r, float)
    n = t.size
    h_up = np.empty(n)
    h_down = np.empty(n)
    A_up = np.full(n, np.nan)
    A_down = np.full(n, np.nan)
    sig = np.empty(n)
    a_lin = np.empty(n)
    a_quad = np.full(n, np.nan)
    prev_s = prev_a = None
    for i in range(n):
        cs = Costate(lr[i], lV[i], lg[i])
        h_up[i] = h_alpha_up(cs, V[i], linear)
        h_down[i] = h_alpha_down(cs, V[i], linear)
        for branch, arr in (("up", A_up), ("down", A_down)):
            try:
                arr[i] = calligraphic_A(cs, V[i], quadratic, branch)
            except SingularityError:
                pass
        sig[i] = prev_s = optimal_sigma(lg[i], sigma_limits, prev_s)
        up = sig[i] == sigma_limits[0]
        a_lin[i] = prev_a = optimal_alpha_linear(h_up[i] if up else h_down[i], alpha_limits, prev_a)
        A = A_up[i] if up else A_down[i]
        if not math.isnan(A):
            a_quad[i] = optimal_alpha_quadratic(A, alpha_limits)

    sigma_times = _crossings(t, lg)
    active_h = np.where(sig == sigma_limits[0], h_up, h_down)
    alpha_times = _crossings(t, active_h)

    gaps = []
    for tc in sigma_times:
        cs = Costate(float(np.interp(tc, t, lr)), float(np.interp(tc, t, lV)), 0.0)
        Vc = float(np.interp(tc, t, V))
        try:
            au = calligraphic_A(cs, Vc, quadratic, "up")
            ad = calligraphic_A(cs, Vc, quadratic, "down")
            gaps.append(abs(au - ad) / max(abs(au), abs(ad), 1e-300))
        except SingularityError:
            gaps.append(math.nan)

    return SwitchingAnalysis(t, h_up, h_down, lg.copy(), A_up, A_down, a_lin, a_quad, sig,
                             sigma_times, alpha_times, gaps)
