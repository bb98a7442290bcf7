"""Predictor-corrector aerocapture guidance.

Four algorithms share one numerical predictor:

``abamguid_plus``
    Bang-bang (alpha, sigma) with three switching times, then CASM for the
    final phase.
``abamguid``
    Same first three phases; the final phase holds alpha saturated and
    solves for a constant bank magnitude.
``fnpag``
    Fixed alpha, lift-up then lift-down with one switching time, then a
    constant bank magnitude.
``casm_only``
    CASM from the load trigger onward.

Angles are degrees. Bank angles inside the solvers are magnitudes; the
commanded bank carries ``sigma_sign``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from aerocap import _kernels
from aerocap.aero import AeroModel, VehicleModel
from aerocap.dynamics import SimState
from aerocap.optimal_control import phase_levels
from aerocap.orbits import TargetOrbit, exit_velocity_target
from aerocap.planet import PlanetModel
from aerocap.rootfind import (BracketError, NMConfig, StallError, brent, is_ordered,
                              nelder_mead, newton_secant)

log = logging.getLogger(__name__)

ALGORITHMS = ("abamguid_plus", "abamguid", "fnpag", "casm_only")


@dataclass(frozen=True)
class PredictorConfig:
    """Onboard trajectory predictor settings.

    ``model`` is "full" (rotating 3-DoF with J2) or "longitudinal". The coast
    after the drag falls below ``drag_cutoff`` [m/s^2] on the way out is
    closed by energy conservation; on the way there, while the drag is below
    ``coast_accel`` the step is ``coast_factor`` times longer. With ``rate_limits`` the predicted
    controls slew from the current actual values at the vehicle rate limits.
    """

    model: str = "full"
    dt: float = 2.0
    drag_cutoff: float = 1e-5
    horizon: float = 3000.0
    rate_limits: bool = True
    coast_accel: float = 1.0
    coast_factor: float = 5.0

    def __post_init__(self):
        if self.model not in ("full", "longitudinal"):
            raise ValueError(f"predictor model must be 'full' or 'longitudinal', got {self.model!r}")
        if not (self.dt > 0 and self.horizon > 0 and self.drag_cutoff >= 0):
            raise ValueError("predictor dt and horizon must be positive")
        if self.coast_factor < 1:
            raise ValueError("coast_factor must be at least 1")


class Predictor:
    """Numerical exit-speed predictor on the onboard (nominal) models."""

    def __init__(self, planet: PlanetModel, aero: AeroModel, vehicle: VehicleModel,
                 target: TargetOrbit, cfg: PredictorConfig = PredictorConfig(),
                 r_floor: float | None = None):
        self.cfg = cfg
        self.planet = planet
        self.target = target
        self.v_target = exit_velocity_target(target, planet.mu)
        self._planet = planet.packed
        self._atm = planet.atmosphere.nominal.packed
        self._aero = aero.nominal.packed
        self._s2m = vehicle.s_over_2m
        self._mode = 0 if cfg.model == "full" else 1
        self._rates = (np.array([vehicle.alpha_rate_limit, vehicle.sigma_rate_limit])
                       if cfg.rate_limits else np.zeros(2))
        self._floor = planet.R0 if r_floor is None else r_floor
        self.calls = 0
        self.last_end = math.nan

    def exit_velocity(self, state: SimState, switch_times, levels, rho_scale: float = 1.0,
                      actual: tuple[float, float] | None = None) -> float:
        """Inertial exit speed [m/s].

        ``levels`` has one (alpha, signed sigma) row per interval delimited by
        ``switch_times``. ``actual`` is the current flown (alpha, sigma); when
        omitted the first level is assumed already reached. A trajectory that
        is captured by the atmosphere returns a non-positive "depleted" value:
        minus the speed deficit of its final energy relative to the exit
        radius. ``last_end`` keeps the time the prediction stopped.
        """
        self.calls += 1
        x0 = state.as_array()
        levels = np.asarray(levels, dtype=np.float64)
        switch_times = np.asarray(switch_times, dtype=np.float64)
        if actual is None:
            k = int(np.searchsorted(switch_times, state.t, side="right"))
            actual = levels[k]
        _, v, t_end = _kernels.predict_exit(
            x0, state.t, self._mode, switch_times, levels,
            np.asarray(actual, dtype=np.float64), self._rates, np.array([state.phi, state.psi]),
            self._planet, self._atm, float(rho_scale), self._aero, self._s2m,
            self.cfg.dt, self.target.r_exit, self._floor, self.cfg.horizon, self.cfg.drag_cutoff,
            self.cfg.coast_accel, self.cfg.coast_factor,
        )
        self.last_end = float(t_end)
        return float(v)

    def residual(self, state: SimState, switch_times, levels, rho_scale: float = 1.0,
                 actual: tuple[float, float] | None = None) -> float:
        """V_pred - V*; a trajectory that fails to exit scores at or below -V*."""
        return self.exit_velocity(state, switch_times, levels, rho_scale, actual) - self.v_target


def predict_exit_velocity(state: SimState, switch_times, levels, predictor: Predictor,
                          rho_scale: float = 1.0, actual=None) -> float:
    return predictor.exit_velocity(state, switch_times, levels, rho_scale, actual)


@dataclass(frozen=True)
class GuidanceConfig:
    algorithm: str = "abamguid_plus"
    rate_hz: float = 2.0
    load_trigger_g: float = 0.1
    g0: float = 9.80665
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    nm: NMConfig = field(default_factory=NMConfig)
    eps_NR: float = 1e-2
    secant_max_iters: int = 20
    secant_step: float = 5.0
    brent_tol: float = 1e-3
    brent_max_iters: int = 60
    density_filter_gain: float = 0.1
    density_ratio_bounds: tuple[float, float] = (0.1, 10.0)
    initial_switch_offsets: tuple[float, float, float] = (20.0, 60.0, 120.0)
    phase3_alpha: str = "max"
    fnpag_alpha: float = -17.0
    fnpag_switch_offset: float = 60.0
    casm_sixth_point: bool = True
    initial_alpha: float = -17.0
    initial_sigma: float = -165.0
    sigma_sign: float = -1.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown guidance algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.rate_hz <= 0:
            raise ValueError("guidance rate must be positive")
        if not 0 < self.density_filter_gain <= 1:
            raise ValueError("density filter gain must lie in (0, 1]")
        if self.sigma_sign not in (-1.0, 1.0):
            raise ValueError("sigma_sign must be +1 or -1")
        offs = self.initial_switch_offsets
        if not (len(offs) == 3 and is_ordered(offs)):
            raise ValueError("initial switch offsets must be three non-decreasing values")

    @property
    def trigger_accel(self) -> float:
        return self.load_trigger_g * self.g0


# ---------------------------------------------------------------------------
# small pieces, usable on their own


@dataclass
class LoadTrigger:
    """Latching aero-load trigger."""

    threshold: float
    fired: bool = False
    t_fired: float = math.nan

    def update(self, t: float, accel: float) -> bool:
        if not self.fired and accel >= self.threshold:
            self.fired = True
            self.t_fired = t
        return self.fired


def load_trigger_check(accel: float, threshold: float, already_fired: bool) -> bool:
    return already_fired or accel >= threshold


def density_ratio_filter(sensed_drag: float, modeled_drag: float, previous: float,
                         gain: float = 0.1, bounds: tuple[float, float] = (0.1, 10.0),
                         eps: float = 1e-4) -> float:
    """First-order filter of the sensed/modeled drag ratio, clamped to ``bounds``.

    Holds the previous estimate while the modeled drag is below ``eps``.
    """
    if modeled_drag <= eps:
        return previous
    est = (1.0 - gain) * previous + gain * (sensed_drag / modeled_drag)
    return min(max(est, bounds[0]), bounds[1])


@dataclass(frozen=True)
class CasmResult:
    alpha: float
    sigma: float
    kappa: float
    value: float
    bracketed: bool
    evaluations: int


def casm_solve(f: Callable[[float, float], float], prev: tuple[float, float, float],
               alpha_limits: tuple[float, float], sigma_limits: tuple[float, float],
               tol: float = 1e-3, max_iters: int = 60, sixth_point: bool = True) -> CasmResult:
    """Constrained-Aerodynamic-State Method.

    ``f(sigma, alpha)`` is the exit-speed residual of a constant (|sigma|,
    alpha) pair. ``prev`` is (alpha, |sigma|, f) of the previous command. The
    four corners of the control box are scored; a bracketing partner for the
    previous point is the opposite-sign point with the smallest |f|. A root is
    then sought along the segment between them with Brent's method. Without
    a bracket the point with the smallest |f| is returned.
    """
    a_min, a_max = alpha_limits
    s_min, s_max = sigma_limits
    a_p, s_p, f_p = prev
    if f_p == 0.0:
        return CasmResult(a_p, s_p, 0.0, 0.0, True, 0)

    pts = [(s_min, a_min), (s_min, a_max), (s_max, a_min), (s_max, a_max)]
    if sixth_point:
        pts.append((s_max if f_p > 0 else s_min, a_p))
    vals = [float(f(s, a)) for s, a in pts]
    n_evals = len(vals)

    partners = [i for i, v in enumerate(vals) if v * f_p < 0 or v == 0.0]
    if not partners:
        best = min(range(len(vals)), key=lambda i: abs(vals[i]))
        if abs(vals[best]) < abs(f_p):
            s, a = pts[best]
            return CasmResult(a, s, math.nan, vals[best], False, n_evals)
        return CasmResult(a_p, s_p, math.nan, f_p, False, n_evals)

    j = min(partners, key=lambda i: abs(vals[i]))
    s_j, a_j = pts[j]
    if vals[j] == 0.0:
        return CasmResult(a_j, s_j, 1.0, 0.0, True, n_evals)

    def along(kappa):
        return s_p + kappa * (s_j - s_p), a_p + kappa * (a_j - a_p)

    # The contract is on |f|, so the kappa bracket may shrink to machine resolution.
    res = brent(lambda k: f(*along(k)), 0.0, 1.0, tol=tol, max_iters=max_iters,
                xtol=4 * np.finfo(float).eps, fa=f_p, fb=vals[j])
    s, a = along(res.root)
    return CasmResult(a, s, res.root, res.value, True, n_evals + res.evaluations)


def constant_bank_solve(f: Callable[[float], float], sigma_limits: tuple[float, float],
                        tol: float = 1e-3, max_iters: int = 60) -> tuple[float, float, bool]:
    """Root of f(|sigma|) on the bank interval; the better endpoint when unbracketed."""
    s_min, s_max = sigma_limits
    f_lo, f_hi = f(s_min), f(s_max)
    try:
        res = brent(f, s_min, s_max, tol=tol, max_iters=max_iters, xtol=1e-9, fa=f_lo, fb=f_hi)
        return res.root, res.value, True
    except BracketError:
        if abs(f_lo) <= abs(f_hi):
            return s_min, f_lo, False
        return s_max, f_hi, False


# ---------------------------------------------------------------------------
# the guidance loop


GUIDANCE_LOG_COLUMNS = ("t", "phase", "ts1", "ts2", "ts3", "alpha_cmd", "sigma_cmd",
                        "V_pred", "residual", "density_ratio_estimate", "converged")


@dataclass
class SwitchSolution:
    t: float
    phase: int
    times: tuple[float, ...]
    converged: bool


@dataclass
class GuidanceState:
    triggered: bool = False
    ended: bool = False
    phase: int = 0
    ts: np.ndarray = field(default_factory=lambda: np.full(3, np.inf))
    density_ratio: float = 1.0
    alpha_cmd: float = -17.0
    sigma_cmd: float = -165.0
    f_prev: float = math.nan
    t_trigger: float = math.nan
    t_end: float = math.nan


class Guidance:
    """Stateful guidance law called at the guidance rate."""

    def __init__(self, cfg: GuidanceConfig, predictor: Predictor, vehicle: VehicleModel):
        self.cfg = cfg
        self.pred = predictor
        self.vehicle = vehicle
        self.alpha_limits = vehicle.alpha_limits
        self.sigma_limits = vehicle.sigma_limits
        self.levels4 = phase_levels(self.alpha_limits, self.sigma_limits, cfg.phase3_alpha)
        self.state = GuidanceState(alpha_cmd=cfg.initial_alpha, sigma_cmd=cfg.initial_sigma)
        self.trigger = LoadTrigger(cfg.trigger_accel)
        self.log: list[dict] = []
        self.solutions: list[SwitchSolution] = []
        self._actual = (cfg.initial_alpha, cfg.initial_sigma)

    # -- helpers -----------------------------------------------------------

    def _signed(self, levels):
        sgn = self.cfg.sigma_sign
        return np.array([[a, sgn * s] for a, s in levels], dtype=float)

    def _bang_bang_residual(self, est: SimState, ts) -> float:
        return self.pred.residual(est, ts, self._signed(self.levels4), self.state.density_ratio,
                                  self._actual)

    def _fnpag_levels(self):
        a = self.cfg.fnpag_alpha
        return self._signed([(a, self.sigma_limits[0]), (a, self.sigma_limits[1])])

    def _constant_residual(self, est: SimState, alpha: float, sigma_mag: float) -> float:
        return self.pred.residual(est, (), self._signed([(alpha, sigma_mag)]),
                                  self.state.density_ratio, self._actual)

    def _modeled_drag(self, est: SimState, alpha: float) -> float:
        _, D, _ = _kernels.lift_drag(est.as_array(), float(alpha), self.pred._planet,
                                     self.pred._atm, 1.0, self.pred._aero, self.pred._s2m)
        return float(D)

    # -- main entry --------------------------------------------------------

    def step(self, t: float, est: SimState, sensed: tuple[float, float],
             actual: tuple[float, float]) -> tuple[float, float]:
        """Return the (alpha, signed sigma) command for time ``t``.

        ``sensed`` is the measured (lift, drag) acceleration and ``actual`` the
        flown (alpha, signed sigma).
        """
        gs = self.state
        cfg = self.cfg
        self._actual = (float(actual[0]), float(actual[1]))
        L_s, D_s = sensed
        accel = math.hypot(L_s, D_s)
        gs.density_ratio = density_ratio_filter(
            D_s, self._modeled_drag(est, actual[0]), gs.density_ratio,
            cfg.density_filter_gain, cfg.density_ratio_bounds)

        was_triggered = gs.triggered
        gs.triggered = self.trigger.update(t, accel)
        if not gs.triggered:
            self._log(t, "pre-trigger", math.nan, True)
            return gs.alpha_cmd, gs.sigma_cmd
        if not was_triggered:
            self._on_trigger(t)

        if gs.ended or (est.gamma > 0 and accel < self.trigger.threshold):
            if not gs.ended:
                gs.ended = True
                gs.t_end = t
            self._log(t, "end", math.nan, True)
            return gs.alpha_cmd, gs.sigma_cmd

        algo = cfg.algorithm
        if algo == "fnpag":
            v_pred, ok = self._fnpag(t, est)
        elif algo == "casm_only":
            v_pred, ok = self._casm(est)
        else:
            v_pred, ok = self._abam(t, est)
        self._log(t, gs.phase, v_pred, ok)
        return gs.alpha_cmd, gs.sigma_cmd

    def _on_trigger(self, t: float) -> None:
        gs = self.state
        gs.t_trigger = t
        if self.cfg.algorithm == "fnpag":
            gs.ts = np.array([t + self.cfg.fnpag_switch_offset])
            gs.phase = 1
        elif self.cfg.algorithm == "casm_only":
            gs.phase = 4
        else:
            gs.ts = t + np.asarray(self.cfg.initial_switch_offsets, dtype=float)
            gs.phase = 1
        log.debug("load trigger at t=%.2f s", t)

    def _set_command(self, alpha: float, sigma_mag: float) -> None:
        self.state.alpha_cmd = float(alpha)
        self.state.sigma_cmd = self.cfg.sigma_sign * float(sigma_mag)

    def _switch_horizon(self, t: float) -> float:
        # Commands are held until the next call, so a switch due before then
        # is executed now rather than up to one guidance period late.
        return t + 1.0 / self.cfg.rate_hz - 1e-9

    def _phase_from_times(self, t: float) -> int:
        ts = self.state.ts
        return 1 + int(np.searchsorted(ts, self._switch_horizon(t), side="right"))

    # -- ABAMGuid / ABAMGuid+ -----------------------------------------------

    def _abam(self, t: float, est: SimState) -> tuple[float, bool]:
        gs = self.state
        cfg = self.cfg
        # The initial guess is only a starting point: the first call after the
        # trigger always solves the full three-time problem.
        if self.solutions:
            gs.phase = max(gs.phase, self._phase_from_times(t))
        ok = True
        if gs.phase == 1:
            ok = self._solve_nm(t, est, free=slice(0, 3))
        elif gs.phase == 2:
            ok = self._solve_nm(t, est, free=slice(1, 3))
        elif gs.phase == 3:
            ok = self._solve_ts3(t, est)
        if gs.phase <= 3:
            gs.phase = max(gs.phase, self._phase_from_times(t))
        if gs.phase <= 3:
            self._set_command(*self.levels4[gs.phase - 1])
            z = self._bang_bang_residual(est, gs.ts)
            gs.f_prev = z
            return z + self.pred.v_target, ok

        if cfg.algorithm == "abamguid_plus":
            return self._casm(est)
        alpha = self.levels4[3][0]
        sigma, z, ok = constant_bank_solve(
            lambda s: self._constant_residual(est, alpha, s), self.sigma_limits,
            cfg.brent_tol, cfg.brent_max_iters)
        self._set_command(alpha, sigma)
        gs.f_prev = z
        return z + self.pred.v_target, ok

    def _within_flight(self, t: float, est: SimState, ts: np.ndarray) -> np.ndarray:
        """Pull switching times scheduled after the predicted end of flight back to it.

        Past that point the residual no longer depends on a switching time, so
        a warm start there sits on a plateau the solvers cannot leave.
        """
        self._bang_bang_residual(est, ts)
        t_end = self.pred.last_end
        if not math.isfinite(t_end):
            return ts
        return np.minimum(ts, max(t_end, t))

    def _solve_nm(self, t: float, est: SimState, free: slice) -> bool:
        gs = self.state
        base = self._within_flight(t, est, gs.ts.copy())

        def objective(x):
            # Switching times still to come must also lie in the future.
            if x[0] < t:
                return self.cfg.nm.penalty_value
            ts = base.copy()
            ts[free] = x
            if not is_ordered(ts):
                return self.cfg.nm.penalty_value
            z = self._bang_bang_residual(est, ts)
            return 0.5 * z * z

        res = nelder_mead(objective, base[free], self.cfg.nm, ordering_constraint=True)
        if res.fun >= self.cfg.nm.eps_NM:
            # The warm start can stall where the residual barely depends on
            # the free times; retry once from a fresh guess anchored at t.
            fresh = t + np.asarray(self.cfg.initial_switch_offsets, dtype=float)[free]
            retry = nelder_mead(objective, fresh, self.cfg.nm, ordering_constraint=True)
            if retry.fun < res.fun:
                res = retry
        new = base.copy()
        new[free] = res.x
        if res.converged and is_ordered(new):
            gs.ts = new
        else:
            log.info("t=%.1f s: switching-time solve did not converge; keeping previous times", t)
        self.solutions.append(SwitchSolution(t, gs.phase, tuple(gs.ts), res.converged))
        return res.converged

    def _solve_switch_time(self, z: Callable[[float], float], x_prev: float, t: float) -> tuple[float, bool]:
        """Root of a single switching-time residual on [t, t + horizon].

        The secant iteration starts from the previous solution. A switch
        scheduled after the predicted exit has no effect, so the residual is
        flat there and the secant can stall; Brent on the whole window then
        takes over. Without a sign change the switch saturates at the better
        end of the window.
        """
        cfg = self.cfg
        t_hi = t + cfg.predictor.horizon
        x0 = min(max(x_prev, t), t_hi)
        z(x0)
        if math.isfinite(self.pred.last_end):
            x0 = min(x0, max(self.pred.last_end, t))
        try:
            res = newton_secant(z, x0, x0 + cfg.secant_step, cfg.eps_NR, cfg.secant_max_iters)
            if res.converged and math.isfinite(res.root) and t <= res.root <= t_hi:
                return float(res.root), True
        except StallError:
            pass
        z_lo, z_hi = z(t), z(t_hi)
        try:
            res = brent(z, t, t_hi, cfg.brent_tol, cfg.brent_max_iters, xtol=1e-3, fa=z_lo, fb=z_hi)
            return float(res.root), res.converged
        except BracketError:
            return (t if abs(z_lo) <= abs(z_hi) else t_hi), False

    def _solve_ts3(self, t: float, est: SimState) -> bool:
        gs = self.state
        ts1, ts2, ts3 = gs.ts

        def z(x):
            return self._bang_bang_residual(est, (ts1, ts2, max(x, t)))

        root, ok = self._solve_switch_time(z, ts3, t)
        gs.ts = np.array([ts1, ts2, root])
        if not ok:
            log.info("t=%.1f s: no third switching time meets the target; saturating", t)
        self.solutions.append(SwitchSolution(t, gs.phase, tuple(gs.ts), ok))
        return ok

    # -- CASM ------------------------------------------------------------------

    def _casm(self, est: SimState) -> tuple[float, bool]:
        gs = self.state
        gs.phase = 4
        cfg = self.cfg
        a_prev = gs.alpha_cmd
        s_prev = abs(gs.sigma_cmd)

        def f(s, a):
            return self._constant_residual(est, a, s)

        f_prev = f(s_prev, a_prev)
        res = casm_solve(f, (a_prev, s_prev, f_prev), self.alpha_limits, self.sigma_limits,
                         cfg.brent_tol, cfg.brent_max_iters, cfg.casm_sixth_point)
        self._set_command(res.alpha, res.sigma)
        gs.f_prev = res.value
        return res.value + self.pred.v_target, res.bracketed

    # -- FNPAG -----------------------------------------------------------------

    def _fnpag(self, t: float, est: SimState) -> tuple[float, bool]:
        gs = self.state
        cfg = self.cfg
        a = cfg.fnpag_alpha
        if gs.phase == 1 and self._switch_horizon(t) >= gs.ts[0]:
            gs.phase = 2
        if gs.phase == 1:
            levels = self._fnpag_levels()
            rho = gs.density_ratio

            def z(x):
                return self.pred.residual(est, (max(x, t),), levels, rho, self._actual)

            root, ok = self._solve_switch_time(z, gs.ts[0], t)
            gs.ts = np.array([root])
            if not ok:
                log.info("t=%.1f s: no bank switching time meets the target; saturating", t)
            self.solutions.append(SwitchSolution(t, 1, tuple(gs.ts), ok))
            if self._switch_horizon(t) >= gs.ts[0]:
                gs.phase = 2
            else:
                self._set_command(a, self.sigma_limits[0])
                zv = z(gs.ts[0])
                gs.f_prev = zv
                return zv + self.pred.v_target, ok
        sigma, zv, ok = constant_bank_solve(
            lambda s: self._constant_residual(est, a, s), self.sigma_limits,
            cfg.brent_tol, cfg.brent_max_iters)
        self._set_command(a, sigma)
        gs.f_prev = zv
        return zv + self.pred.v_target, ok

    # -- logging -----------------------------------------------------------------

    def _log(self, t: float, phase, v_pred: float, converged: bool) -> None:
        gs = self.state
        ts = list(gs.ts) + [math.nan] * (3 - len(gs.ts))
        ts = [v if math.isfinite(v) else math.nan for v in ts]
        self.log.append({
            "t": t, "phase": phase, "ts1": ts[0], "ts2": ts[1], "ts3": ts[2],
            "alpha_cmd": gs.alpha_cmd, "sigma_cmd": gs.sigma_cmd, "V_pred": v_pred,
            "residual": v_pred - self.pred.v_target if math.isfinite(v_pred) else math.nan,
            "density_ratio_estimate": gs.density_ratio, "converged": int(bool(converged)),
        })


def write_guidance_log(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GUIDANCE_LOG_COLUMNS)
        for row in rows:
            w.writerow([f"{row[c]:.9g}" if isinstance(row[c], float) else row[c]
                        for c in GUIDANCE_LOG_COLUMNS])
