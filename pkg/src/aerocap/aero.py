"""Aerodynamic coefficient models (linear, quadratic, table) and lift/drag accelerations.

Angle of attack is in degrees throughout: the published fit slopes are per degree.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from aerocap import _kernels


class AeroEnvelopeError(ValueError):
    """Requested angle of attack lies outside a lookup table."""


@dataclass(frozen=True)
class AeroModel:
    kind: str = "quadratic"
    CD0: float = 0.0
    CDa: float = 0.0
    CDa2: float = 0.0
    CL0: float = 0.0
    CLa: float = 0.0
    CLa2: float = 0.0
    table: tuple[tuple[float, float, float], ...] = ()
    k_CL: float = 1.0
    k_CD: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic", "table"):
            raise ValueError(f"unknown aero model kind {self.kind!r}")
        if self.kind == "table":
            if len(self.table) < 2:
                raise ValueError("table aero model needs at least two rows")
            alphas = [row[0] for row in self.table]
            if any(b <= a for a, b in zip(alphas, alphas[1:])):
                raise ValueError("table alpha column must be strictly ascending")
        if not (self.k_CL > 0 and self.k_CD > 0):
            raise ValueError("dispersion factors must be positive")

    @property
    def alpha_range(self) -> tuple[float, float]:
        if self.kind == "table":
            return self.table[0][0], self.table[-1][0]
        return -math.inf, math.inf

    def dispersed(self, k_CL: float, k_CD: float) -> "AeroModel":
        return replace(self, k_CL=k_CL, k_CD=k_CD)

    @property
    def nominal(self) -> "AeroModel":
        if self.k_CL == 1.0 and self.k_CD == 1.0:
            return self
        return replace(self, k_CL=1.0, k_CD=1.0)

    @cached_property
    def packed(self) -> np.ndarray:
        kind = {"linear": 0.0, "quadratic": 1.0, "table": 2.0}[self.kind]
        out = [kind, self.CD0, self.CDa, self.CDa2, self.CL0, self.CLa, self.CLa2,
               self.k_CL, self.k_CD, float(len(self.table))]
        if self.table:
            tab = np.asarray(self.table, dtype=float)
            out.extend(tab[:, 0])
            out.extend(tab[:, 1])
            out.extend(tab[:, 2])
        return np.asarray(out, dtype=np.float64)


# Fits of the CFD database (per-degree slopes).
LINEAR_FIT = AeroModel(kind="linear", CD0=1.72, CDa=1.87e-2, CL0=7.07e-2, CLa=-1.62e-2)
QUADRATIC_FIT = AeroModel(
    kind="quadratic", CD0=1.59, CDa=3.83e-3, CDa2=-4.25e-4,
    CL0=-2.71e-2, CLa=-2.82e-2, CLa2=-3.43e-4,
)


@dataclass(frozen=True)
class VehicleModel:
    mass: float = 4063.0
    S: float = 15.9
    alpha_limits: tuple[float, float] = (-25.0, -10.0)
    sigma_limits: tuple[float, float] = (15.0, 165.0)
    alpha_rate_limit: float = 5.0
    sigma_rate_limit: float = 15.0

    def __post_init__(self):
        a_min, a_max = self.alpha_limits
        s_min, s_max = self.sigma_limits
        if not (a_min < a_max <= 0):
            raise ValueError(f"need alpha_min < alpha_max <= 0, got {self.alpha_limits}")
        if not (0 < s_min < s_max <= 180):
            raise ValueError(f"need 0 < sigma_min < sigma_max <= 180, got {self.sigma_limits}")
        if not (self.alpha_rate_limit > 0 and self.sigma_rate_limit > 0):
            raise ValueError("rate limits must be positive")
        if not (self.mass > 0 and self.S > 0):
            raise ValueError("mass and reference area must be positive")

    @property
    def s_over_2m(self) -> float:
        return self.S / (2.0 * self.mass)


def coefficients(model: AeroModel, alpha: float) -> tuple[float, float]:
    """(C_L, C_D) at ``alpha`` [deg], dispersion factors applied."""
    lo, hi = model.alpha_range
    if not lo <= alpha <= hi:
        raise AeroEnvelopeError(f"alpha={alpha} deg outside table range [{lo}, {hi}]")
    cl, cd = _kernels.aero_coefficients(model.packed, float(alpha))
    return float(cl), float(cd)


def lift_drag(model: AeroModel, vehicle: VehicleModel, rho: float, V: float,
              alpha: float) -> tuple[float, float]:
    """Lift and drag accelerations [m/s^2]."""
    if rho == 0.0:
        return 0.0, 0.0
    cl, cd = coefficients(model, alpha)
    q = rho * V * V * vehicle.s_over_2m
    return q * cl, q * cd


def table_from_model(model: AeroModel, alphas) -> AeroModel:
    """Sample an analytic model into a lookup-table model."""
    rows = tuple((float(a), *coefficients(model.nominal, float(a))) for a in alphas)
    return AeroModel(kind="table", table=rows)


def load_table_csv(path: str | Path, cd_path: str | Path | None = None) -> AeroModel:
    """Read a lookup table.

    One file with columns ``alpha_deg, C_L, C_D``, or two files
    ``(alpha_deg, C_L)`` and ``(alpha_deg, C_D)`` sharing the alpha grid.
    A header row is optional.
    """

    def read(p):
        rows = []
        with open(p, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].strip().startswith("#"):
                    continue
                try:
                    rows.append([float(v) for v in rec])
                except ValueError:
                    if rows:
                        raise
        return rows

    rows = read(path)
    if cd_path is None:
        if any(len(r) != 3 for r in rows):
            raise ValueError(f"{path}: expected three columns alpha_deg, C_L, C_D")
        table = [tuple(r) for r in rows]
    else:
        cd_rows = read(cd_path)
        if [r[0] for r in rows] != [r[0] for r in cd_rows]:
            raise ValueError("C_L and C_D tables must share the alpha grid")
        table = [(a[0], a[1], d[1]) for a, d in zip(rows, cd_rows)]
    return AeroModel(kind="table", table=tuple(sorted(table)))
