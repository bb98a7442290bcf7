"""Compiled inner loops: density, aero coefficients, equations of motion, RK4.

Models reach this module as flat float64 arrays (see ``pack_*`` helpers in the
model modules). Layouts:

planet: [mu, R0, J2, Omega]
atmosphere: [kind, h_top, bias, n_waves, (amp, wavelength, phase) * n_waves, ...]
    kind 0 (exponential): ..., rho0, H
    kind 1 (piecewise log-polynomial): ..., n_seg, n_coef, knots[n_seg + 1],
        coeffs[n_seg * n_coef]; ln(rho) is a polynomial in (h - knot_i) [km]
aero: [kind, CD0, CDa, CDa2, CL0, CLa, CLa2, k_CL, k_CD, n_tab,
       alpha[n_tab], CL[n_tab], CD[n_tab]]; kind 0 linear, 1 quadratic, 2 table

State vector: [r, theta, phi, V, gamma, psi]. Angles of attack and bank are
in degrees at this boundary.
"""

import math

import numpy as np
from numba import njit

DEG = math.pi / 180.0

RUNNING = 0
EXITED = 1
CRASHED = 2
TIMEOUT = 3

# Grading of failed predictions [m/s per s before the horizon].
FAIL_TIME_WEIGHT = 10.0


@njit(cache=True)
def perturbation_factor(atm, h):
    bias = atm[2]
    n_waves = int(atm[3])
    s = 0.0
    for i in range(n_waves):
        amp = atm[4 + 3 * i]
        wl = atm[5 + 3 * i]
        ph = atm[6 + 3 * i]
        s += amp * math.sin(2.0 * math.pi * h / wl + ph)
    return bias * math.exp(s)


@njit(cache=True)
def density(atm, h):
    if h > atm[1]:
        return 0.0
    n_waves = int(atm[3])
    k = 4 + 3 * n_waves
    kind = int(atm[0])
    if kind == 0:
        rho = atm[k] * math.exp(-h / atm[k + 1])
    else:
        n_seg = int(atm[k])
        n_coef = int(atm[k + 1])
        knots = k + 2
        coeffs = knots + n_seg + 1
        seg = 0
        while seg < n_seg - 1 and h >= atm[knots + seg + 1]:
            seg += 1
        x = (h - atm[knots + seg]) / 1000.0
        c0 = coeffs + seg * n_coef
        ln_rho = 0.0
        for j in range(n_coef - 1, -1, -1):
            ln_rho = ln_rho * x + atm[c0 + j]
        rho = math.exp(ln_rho)
    if n_waves > 0 or atm[2] != 1.0:
        rho *= perturbation_factor(atm, h)
    return rho


@njit(cache=True)
def aero_coefficients(aero, alpha):
    kind = int(aero[0])
    if kind == 2:
        n = int(aero[9])
        a0 = 10
        if alpha <= aero[a0]:
            i = 0
        elif alpha >= aero[a0 + n - 1]:
            i = n - 2
        else:
            i = 0
            while aero[a0 + i + 1] < alpha:
                i += 1
        x0 = aero[a0 + i]
        x1 = aero[a0 + i + 1]
        w = (alpha - x0) / (x1 - x0)
        cl = aero[a0 + n + i] * (1.0 - w) + aero[a0 + n + i + 1] * w
        cd = aero[a0 + 2 * n + i] * (1.0 - w) + aero[a0 + 2 * n + i + 1] * w
    else:
        cd = aero[1] + aero[2] * alpha
        cl = aero[4] + aero[5] * alpha
        if kind == 1:
            cd += aero[3] * alpha * alpha
            cl += aero[6] * alpha * alpha
    return cl * aero[7], cd * aero[8]


@njit(cache=True)
def gravity(planet, r, phi):
    mu = planet[0]
    R0 = planet[1]
    J2 = planet[2]
    base = mu / (r * r)
    q = J2 * (R0 / r) ** 2
    s = math.sin(phi)
    g_r = base * (1.0 + q * (1.5 - 4.5 * s * s))
    g_phi = base * q * 3.0 * s * math.cos(phi)
    return g_r, g_phi


@njit(cache=True)
def potential(planet, r, phi):
    """Gravitational potential (negative) including the J2 term."""
    mu = planet[0]
    s = math.sin(phi)
    return -mu / r + mu * planet[2] * planet[1] ** 2 * (3.0 * s * s - 1.0) / (2.0 * r ** 3)


@njit(cache=True)
def lift_drag(x, alpha, planet, atm, rho_scale, aero, s2m):
    h = x[0] - planet[1]
    rho = density(atm, h) * rho_scale
    cl, cd = aero_coefficients(aero, alpha)
    q = rho * x[3] * x[3] * s2m
    return q * cl, q * cd, rho


@njit(cache=True)
def full_rhs(x, alpha, sigma, planet, atm, rho_scale, aero, s2m, out):
    r = x[0]
    phi = x[2]
    V = x[3]
    gam = x[4]
    psi = x[5]
    Om = planet[3]
    L, D, rho = lift_drag(x, alpha, planet, atm, rho_scale, aero, s2m)
    g_r, g_phi = gravity(planet, r, phi)
    sg = math.sin(gam)
    cg = math.cos(gam)
    sp = math.sin(phi)
    cp = math.cos(phi)
    sps = math.sin(psi)
    cps = math.cos(psi)
    sb = math.sin(sigma * DEG)
    cb = math.cos(sigma * DEG)
    out[0] = V * sg
    out[1] = V * cg * sps / (r * cp)
    out[2] = V * cg * cps / r
    out[3] = (-D - g_r * sg - g_phi * cg * cps
              + Om * Om * r * cp * (sg * cp - cg * sp * cps))
    out[4] = (L * cb + (V * V / r - g_r) * cg + g_phi * sg * cps
              + 2.0 * Om * V * cp * sps
              + Om * Om * r * cp * (cg * cp + sg * cps * sp)) / V
    out[5] = (L * sb / cg + V * V / r * cg * sps * math.tan(phi)
              + g_phi * sps / cg
              - 2.0 * Om * V * (math.tan(gam) * cps * cp - sp)
              + Om * Om * r / cg * sps * sp * cp) / V
    return L, D, rho


@njit(cache=True)
def lon_rhs(x, alpha, u1, planet, atm, rho_scale, aero, s2m, out):
    r = x[0]
    V = x[1]
    gam = x[2]
    mu = planet[0]
    h = r - planet[1]
    rho = density(atm, h) * rho_scale
    cl, cd = aero_coefficients(aero, alpha)
    q = rho * V * V * s2m
    L = q * cl
    D = q * cd
    out[0] = V * math.sin(gam)
    out[1] = -D - mu * math.sin(gam) / (r * r)
    out[2] = (L * u1 + (V * V - mu / r) * math.cos(gam) / r) / V
    return L, D, rho


@njit(cache=True)
def rk4_full(x, dt, alpha, sigma, planet, atm, rho_scale, aero, s2m, k1, k2, k3, k4, tmp):
    n = x.shape[0]
    full_rhs(x, alpha, sigma, planet, atm, rho_scale, aero, s2m, k1)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * dt * k1[i]
    full_rhs(tmp, alpha, sigma, planet, atm, rho_scale, aero, s2m, k2)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * dt * k2[i]
    full_rhs(tmp, alpha, sigma, planet, atm, rho_scale, aero, s2m, k3)
    for i in range(n):
        tmp[i] = x[i] + dt * k3[i]
    full_rhs(tmp, alpha, sigma, planet, atm, rho_scale, aero, s2m, k4)
    for i in range(n):
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def rk4_lon(x, dt, alpha, u1, planet, atm, rho_scale, aero, s2m, k1, k2, k3, k4, tmp):
    lon_rhs(x, alpha, u1, planet, atm, rho_scale, aero, s2m, k1)
    for i in range(3):
        tmp[i] = x[i] + 0.5 * dt * k1[i]
    lon_rhs(tmp, alpha, u1, planet, atm, rho_scale, aero, s2m, k2)
    for i in range(3):
        tmp[i] = x[i] + 0.5 * dt * k2[i]
    lon_rhs(tmp, alpha, u1, planet, atm, rho_scale, aero, s2m, k3)
    for i in range(3):
        tmp[i] = x[i] + dt * k3[i]
    lon_rhs(tmp, alpha, u1, planet, atm, rho_scale, aero, s2m, k4)
    for i in range(3):
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def rate_limit(actual, command, max_step):
    d = command - actual
    if d > max_step:
        d = max_step
    elif d < -max_step:
        d = -max_step
    return actual + d


@njit(cache=True)
def plant_advance(x, state_t, act, cmd, rates, dt, n_steps, planet, atm, aero, s2m,
                  r_exit, r_floor, t_max):
    """Advance the truth plant ``n_steps`` RK4 steps in place.

    ``state_t`` is a length-1 array holding time; ``act`` the actual (alpha,
    sigma) which is rate limited toward ``cmd`` before each step.
    Returns a status code.
    """
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    tmp = np.empty(6)
    for _ in range(n_steps):
        act[0] = rate_limit(act[0], cmd[0], rates[0] * dt)
        act[1] = rate_limit(act[1], cmd[1], rates[1] * dt)
        rk4_full(x, dt, act[0], act[1], planet, atm, 1.0, aero, s2m, k1, k2, k3, k4, tmp)
        state_t[0] += dt
        if x[0] <= r_floor:
            return CRASHED
        if x[0] >= r_exit and x[4] > 0.0:
            return EXITED
        if state_t[0] >= t_max:
            return TIMEOUT
    return RUNNING


@njit(cache=True)
def inertial_speed_gamma(r, phi, V, gam, psi, Om):
    up = V * math.sin(gam)
    horiz = V * math.cos(gam)
    north = horiz * math.cos(psi)
    east = horiz * math.sin(psi) + Om * r * math.cos(phi)
    hi = math.sqrt(north * north + east * east)
    vi = math.sqrt(hi * hi + up * up)
    return vi, math.atan2(up, hi)


@njit(cache=True)
def _schedule_level(t, switch_times, levels):
    k = 0
    n = switch_times.shape[0]
    while k < n and t >= switch_times[k]:
        k += 1
    return k


@njit(cache=True)
def predict_exit(x0, t0, mode, switch_times, levels, act0, rates, lat_psi, planet, atm,
                 rho_scale, aero, s2m, dt, r_exit, r_floor, t_max, drag_cutoff,
                 coast_accel, coast_factor):
    """Predict inertial speed at the exit radius for a piecewise-constant schedule.

    ``switch_times`` (ascending) split time into len + 1 intervals with
    (alpha, sigma) rows in ``levels``. Integration steps are cut at switch
    times so the result varies continuously with them. ``mode`` 0 integrates
    the full 3-DoF equations; mode 1 integrates the longitudinal equations
    with latitude/heading frozen at ``lat_psi`` for the inertial conversion.

    The flown (alpha, sigma) start at ``act0`` and slew toward the scheduled
    level at ``rates`` [deg/s], held at their mid-step value over each step.
    A non-positive rate makes that channel follow the schedule instantly.

    While ascending with drag below ``coast_accel`` the step grows by
    ``coast_factor``. Once ascending with drag below ``drag_cutoff`` the
    remaining coast is closed in form by conserving inertial energy.

    Returns (status, v, t_end), ``t_end`` being the time propagation stopped;
    the schedule has no effect after it. On exit v is the inertial exit speed. Otherwise v is
    a non-positive "depleted" score: minus the speed deficit
    ``sqrt(2 (U(r_exit) - E))`` of the final inertial energy E, less
    FAIL_TIME_WEIGHT for every second the failure comes before the horizon.
    Barely trapped trajectories score near zero; early crashes score lowest.
    """
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    tmp = np.empty(6)
    Om = planet[3]
    if mode == 0:
        x = x0.copy()
    else:
        x = np.empty(3)
        x[0] = x0[0]
        x[1] = x0[3]
        x[2] = x0[4]
    t = t0
    n_sw = switch_times.shape[0]
    k = _schedule_level(t, switch_times, levels)
    a_act = act0[0]
    s_act = act0[1]
    h_nom = dt
    if x0[4] > 0.0 and x0[0] >= r_exit:
        # Already out and climbing: nothing left to fly.
        v2 = _exit_v2(x0[0], x0[2], x0[3], x0[4], x0[5], mode, planet, r_exit)
        if v2 > 0.0:
            return EXITED, math.sqrt(v2), t
    while True:
        h_step = h_nom
        if k < n_sw:
            to_switch = switch_times[k] - t
            if to_switch < h_step:
                h_step = to_switch
        if rates[0] > 0.0:
            alpha = rate_limit(a_act, levels[k, 0], 0.5 * rates[0] * h_step)
            a_act = rate_limit(a_act, levels[k, 0], rates[0] * h_step)
        else:
            alpha = levels[k, 0]
        if rates[1] > 0.0:
            sigma = rate_limit(s_act, levels[k, 1], 0.5 * rates[1] * h_step)
            s_act = rate_limit(s_act, levels[k, 1], rates[1] * h_step)
        else:
            sigma = levels[k, 1]
        if h_step > 1e-9:
            if mode == 0:
                rk4_full(x, h_step, alpha, sigma, planet, atm, rho_scale, aero, s2m,
                         k1, k2, k3, k4, tmp)
            else:
                rk4_lon(x, h_step, alpha, math.cos(sigma * DEG), planet, atm, rho_scale,
                        aero, s2m, k1, k2, k3, k4, tmp)
            t += h_step
        while k < n_sw and t >= switch_times[k] - 1e-9:
            k += 1
        if mode == 0:
            r = x[0]
            phi = x[2]
            V = x[3]
            gam = x[4]
            psi = x[5]
        else:
            r = x[0]
            phi = lat_psi[0]
            V = x[1]
            gam = x[2]
            psi = lat_psi[1]
        if r <= r_floor:
            return CRASHED, (_deficit(r, phi, V, gam, psi, mode, planet, r_exit)
                             - FAIL_TIME_WEIGHT * (t_max - (t - t0))), t
        if t - t0 >= t_max:
            return TIMEOUT, _deficit(r, phi, V, gam, psi, mode, planet, r_exit), t
        h_nom = dt
        if gam > 0.0:
            L, D, rho = lift_drag_lon(r, V, alpha, planet, atm, rho_scale, aero, s2m)
            if D < coast_accel:
                h_nom = dt * coast_factor
            if r >= r_exit or D < drag_cutoff:
                v2 = _exit_v2(r, phi, V, gam, psi, mode, planet, r_exit)
                if v2 <= 0.0:
                    return CRASHED, -math.sqrt(-v2), t
                return EXITED, math.sqrt(v2), t


@njit(cache=True)
def _exit_v2(r, phi, V, gam, psi, mode, planet, r_exit):
    """Squared inertial speed at r_exit implied by conserving the current inertial energy."""
    vi, gi = inertial_speed_gamma(r, phi, V, gam, psi, planet[3])
    if mode == 0:
        e = 0.5 * vi * vi + potential(planet, r, phi)
        u_exit = potential(planet, r_exit, phi)
    else:
        e = 0.5 * vi * vi - planet[0] / r
        u_exit = -planet[0] / r_exit
    return 2.0 * (e - u_exit)


@njit(cache=True)
def _deficit(r, phi, V, gam, psi, mode, planet, r_exit):
    v2 = _exit_v2(r, phi, V, gam, psi, mode, planet, r_exit)
    if v2 >= 0.0:
        return 0.0
    return -math.sqrt(-v2)


@njit(cache=True)
def lift_drag_lon(r, V, alpha, planet, atm, rho_scale, aero, s2m):
    rho = density(atm, r - planet[1]) * rho_scale
    cl, cd = aero_coefficients(aero, alpha)
    q = rho * V * V * s2m
    return q * cl, q * cd, rho
