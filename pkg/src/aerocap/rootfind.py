"""Derivative-free solvers used by the guidance corrector.

Nelder-Mead with an ordering penalty, a secant Newton iteration, and Brent's
bracketing root finder. Objectives are plain callables; nothing here knows
about trajectories.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps


class BracketError(ValueError):
    """f(a) and f(b) do not differ in sign."""


class StallError(ArithmeticError):
    """Secant iteration hit equal residuals at consecutive iterates."""


@dataclass(frozen=True)
class NMConfig:
    initial_simplex_offset: float = 10.0
    eps_NM: float = 1.0
    max_iters: int = 100
    penalty_value: float = 1e12

    def __post_init__(self):
        if not (self.initial_simplex_offset > 0 and self.eps_NM > 0):
            raise ValueError("simplex offset and eps_NM must be positive")


@dataclass(frozen=True)
class NMResult:
    x: np.ndarray
    fun: float
    converged: bool
    iterations: int
    evaluations: int


@dataclass(frozen=True)
class RootResult:
    root: float
    value: float
    converged: bool
    iterations: int
    evaluations: int


def is_ordered(x: Sequence[float]) -> bool:
    return all(a <= b for a, b in zip(x[:-1], x[1:]))


def nelder_mead(f: Callable[[np.ndarray], float], x0, cfg: NMConfig = NMConfig(),
                ordering_constraint: bool = False) -> NMResult:
    """Minimise ``f`` from ``x0``.

    The starting simplex is ``x0`` plus ``x0 + offset * e_i``. Iteration stops
    when the population standard deviation of the simplex values drops below
    ``eps_NM``. With ``ordering_constraint`` any point whose components are not
    non-decreasing scores ``penalty_value`` without calling ``f``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    n_evals = 0

    def fun(x):
        nonlocal n_evals
        if ordering_constraint and not is_ordered(x):
            return cfg.penalty_value
        n_evals += 1
        return float(f(x))

    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        sim[i + 1] = x0
        sim[i + 1, i] += cfg.initial_simplex_offset
    fs = np.array([fun(p) for p in sim])

    it = 0
    converged = False
    while True:
        order = np.argsort(fs, kind="stable")
        sim = sim[order]
        fs = fs[order]
        if np.std(fs) < cfg.eps_NM:
            converged = True
            break
        if it >= cfg.max_iters:
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = fun(xr)
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = fun(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = fun(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (sim[-1] - centroid)
            fc = fun(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
            fs[i] = fun(sim[i])

    if not converged:
        log.debug("nelder_mead: no convergence after %d iterations (std=%.3g)", it, np.std(fs))
    return NMResult(sim[0].copy(), float(fs[0]), converged, it, n_evals)


def newton_secant(z: Callable[[float], float], x0: float, x1: float, eps_NR: float = 1e-2,
                  max_iters: int = 20) -> RootResult:
    """Secant-approximated Newton iteration for z(x) = 0.

    Stops when |z * dz/dx| <= eps_NR with the derivative taken from the last
    two iterates. Raises :class:`StallError` when consecutive residuals match.
    """
    z0 = float(z(x0))
    z1 = float(z(x1))
    n_evals = 2
    for k in range(max_iters + 1):
        if z1 == 0.0 or (k > 0 and x1 == x0):
            # Exact root, or the secant step no longer moves the iterate.
            return RootResult(x1, z1, True, k, n_evals)
        if z1 == z0:
            raise StallError(f"secant stalled: z({x0})=z({x1})={z1}")
        slope = (z1 - z0) / (x1 - x0)
        if abs(z1 * slope) <= eps_NR:
            return RootResult(x1, z1, True, k, n_evals)
        if k == max_iters:
            break
        x2 = x1 - z1 / slope
        x0, z0 = x1, z1
        x1 = x2
        z1 = float(z(x1))
        n_evals += 1
    return RootResult(x1, z1, False, max_iters, n_evals)


def brent(f: Callable[[float], float], a: float, b: float, tol: float = 1e-3,
          max_iters: int = 60, xtol: float = 1e-12, fa: float | None = None,
          fb: float | None = None) -> RootResult:
    """Brent's bracketing root finder.

    Returns once |f(x)| <= tol or the bracket half-width falls below
    ``2 eps |x| + xtol / 2``. Every iterate stays inside the initial bracket.
    Known end values may be passed as ``fa``/``fb`` to save evaluations.
    """
    n_evals = 0

    def fun(x):
        nonlocal n_evals
        n_evals += 1
        return float(f(x))

    fa = fun(a) if fa is None else float(fa)
    fb = fun(b) if fb is None else float(fb)
    if fa == 0.0:
        return RootResult(a, fa, True, 0, n_evals)
    if fb == 0.0:
        return RootResult(b, fb, True, 0, n_evals)
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise BracketError(f"no sign change: f({a})={fa}, f({b})={fb}")

    c, fc = a, fa
    d = e = b - a
    for it in range(1, max_iters + 1):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * EPS * abs(b) + 0.5 * xtol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or abs(fb) <= tol:
            return RootResult(b, fb, True, it, n_evals)
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        b = b + d if abs(d) > tol1 else b + math.copysign(tol1, xm)
        fb = fun(b)
    return RootResult(b, fb, abs(fb) <= tol, max_iters, n_evals)
