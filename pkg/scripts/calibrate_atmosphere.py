"""Open-loop theoretical corridor of an exponential atmosphere.

For a constant (alpha, |sigma|) pair the steep bound is the entry flight-path
angle whose exit speed gives the shortest admissible period, and the shallow
bound the one whose exit speed gives the longest. Bounds are found by
bisection on the entry angle. Used to pick the nominal rho0 and scale height
so that the alpha = -17 deg corridor has the desired width.

    python3 scripts/calibrate_atmosphere.py --rho0 1.1337e-3 --scale-height 55e3
"""

from __future__ import annotations

import argparse
import math
import time
from dataclasses import replace

from aerocap.dynamics import ModelBundle, propagate_to_exit
from aerocap.orbits import SUCCESS_WINDOW, exit_velocity_target, inertial_from_relative
from aerocap.planet import AtmosphereModel
from aerocap.simulation import Scenario


def window_speeds(r_exit: float, mu: float) -> tuple[float, float]:
    """Exit speeds giving the shortest and longest admissible periods."""
    def speed(T):
        a = (mu * (T / (2.0 * math.pi)) ** 2) ** (1.0 / 3.0)
        return math.sqrt(mu * (2.0 / r_exit - 1.0 / a))
    return speed(SUCCESS_WINDOW[0]), speed(SUCCESS_WINDOW[1])


def exit_speed(sc: Scenario, efpa: float, alpha: float, sigma: float, dt: float) -> float:
    entry = replace(sc.mission.entry, efpa_deg=efpa)
    bundle = ModelBundle(sc.planet, sc.aero, sc.vehicle)
    target = sc.mission.target(sc.planet)
    tr = propagate_to_exit(entry.to_sim_state(sc.planet), lambda s: (alpha, sigma), bundle,
                           dt=dt, r_exit=target.r_exit, policy_interval=10**9)
    if tr.status != "exited":
        return -math.inf
    return inertial_from_relative(tr.final, sc.planet)[0]


def bound(sc: Scenario, alpha: float, sigma: float, v_goal: float, dt: float,
          lo: float = -13.0, hi: float = -9.0, iters: int = 30) -> float:
    """EFPA at which the exit speed crosses ``v_goal`` (exit speed grows as the entry shallows)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if exit_speed(sc, mid, alpha, sigma, dt) > v_goal:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rho0", type=float, default=None, help="density at h = 0 [kg/m^3]")
    p.add_argument("--scale-height", type=float, default=None, help="[m]")
    p.add_argument("--dt", type=float, default=0.05, help="integration step [s]")
    args = p.parse_args()

    sc = Scenario()
    atm = sc.planet.atmosphere
    atm = AtmosphereModel(rho0=args.rho0 or atm.rho0, scale_height=args.scale_height or atm.scale_height)
    sc = replace(sc, planet=sc.planet.with_atmosphere(atm))
    target = sc.mission.target(sc.planet)
    v_lo, v_hi = window_speeds(target.r_exit, sc.planet.mu)
    print(f"rho0={atm.rho0:.6g} kg/m^3  H={atm.scale_height:.6g} m")
    print(f"V*={exit_velocity_target(target, sc.planet.mu):.2f} m/s, "
          f"admissible exit speeds [{v_lo:.2f}, {v_hi:.2f}] m/s")
    t0 = time.perf_counter()
    s_min, s_max = sc.vehicle.sigma_limits
    for label, alpha in (("alpha=-17 (fixed)", -17.0), ("alpha=-25 (max lift)", -25.0)):
        steep = bound(sc, alpha, s_min, v_lo, args.dt)
        shallow = bound(sc, alpha, s_max, v_hi, args.dt)
        print(f"{label:22s} steep {steep:8.3f}  shallow {shallow:8.3f}  "
              f"width {shallow - steep:6.3f} deg  centre {0.5 * (steep + shallow):8.3f}")
    print(f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
