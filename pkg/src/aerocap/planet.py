"""Planet constants, J2 gravity, and analytic atmosphere with seeded perturbations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from aerocap import _kernels

# Standard Uranus values; the guidance literature we follow does not publish them.
URANUS_MU = 5.7939e15
URANUS_R0 = 25_559e3
URANUS_J2 = 3.34343e-3
URANUS_OMEGA = 1.012e-4

# Exponential fit tuned so the alpha = -17 deg open-loop corridor matches the
# published baseline corridor width (see scripts/calibrate_atmosphere.py).
NOMINAL_RHO0 = 1.1337e-3
NOMINAL_SCALE_HEIGHT = 55e3


@dataclass(frozen=True)
class AtmoPerturbation:
    """Multiplicative density dispersion: ``bias * exp(sum a_i sin(2 pi h / l_i + p_i))``.

    ``waves`` holds (amplitude [-], vertical wavelength [m], phase [rad]).
    The exponential form keeps the factor strictly positive for any amplitude.
    """

    seed: int | None = None
    bias: float = 1.0
    waves: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if not self.bias > 0:
            raise ValueError(f"density bias must be positive, got {self.bias}")
        for amp, wl, _ in self.waves:
            if wl <= 0 or not math.isfinite(amp):
                raise ValueError(f"bad wave component amplitude={amp} wavelength={wl}")

    @property
    def is_identity(self) -> bool:
        return self.bias == 1.0 and not self.waves

    def factor(self, h: float) -> float:
        s = sum(a * math.sin(2.0 * math.pi * h / wl + p) for a, wl, p in self.waves)
        return self.bias * math.exp(s)

    @classmethod
    def sample(
        cls,
        rng: np.random.Generator,
        bias_3sigma: float,
        amp_3sigma: float,
        n_waves: int,
        wavelength_range: tuple[float, float],
        seed: int | None = None,
    ) -> "AtmoPerturbation":
        """Draw a perturbation. The bias is log-normal with ``bias_3sigma`` in log space."""
        bias = math.exp(rng.normal(0.0, bias_3sigma / 3.0)) if bias_3sigma > 0 else 1.0
        waves = []
        for _ in range(n_waves if amp_3sigma > 0 else 0):
            amp = float(rng.normal(0.0, amp_3sigma / 3.0))
            wl = float(rng.uniform(*wavelength_range))
            phase = float(rng.uniform(0.0, 2.0 * math.pi))
            waves.append((amp, wl, phase))
        return cls(seed=seed, bias=bias, waves=tuple(waves))


@dataclass(frozen=True)
class AtmosphereModel:
    """Nominal density profile plus an optional perturbation.

    kind ``exponential`` uses ``rho0`` [kg/m^3] at h = 0 and ``scale_height`` [m].
    kind ``piecewise-log-polynomial`` uses ``knots`` [m] (n_seg + 1 ascending
    altitudes) and ``coeffs`` (n_seg rows of ascending-power coefficients of
    ln(rho) in (h - knot_i) expressed in km). Above ``h_top`` density is zero.
    """

    kind: str = "exponential"
    rho0: float = 0.0
    scale_height: float = 0.0
    knots: tuple[float, ...] = ()
    coeffs: tuple[tuple[float, ...], ...] = ()
    h_top: float = 1000e3
    perturbation: AtmoPerturbation = field(default_factory=AtmoPerturbation)

    def __post_init__(self):
        if self.kind == "exponential":
            if not (self.rho0 > 0 and self.scale_height > 0):
                raise ValueError("exponential atmosphere needs rho0 > 0 and scale_height > 0")
        elif self.kind == "piecewise-log-polynomial":
            if len(self.knots) < 2 or len(self.coeffs) != len(self.knots) - 1:
                raise ValueError("piecewise atmosphere needs n_seg + 1 knots and n_seg coefficient rows")
            if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
                raise ValueError("atmosphere knots must be strictly ascending")
            if len({len(c) for c in self.coeffs}) != 1:
                raise ValueError("all coefficient rows must have the same length")
        else:
            raise ValueError(f"unknown atmosphere kind {self.kind!r}")

    def with_perturbation(self, perturbation: AtmoPerturbation) -> "AtmosphereModel":
        return replace(self, perturbation=perturbation)

    @property
    def nominal(self) -> "AtmosphereModel":
        if self.perturbation.is_identity:
            return self
        return replace(self, perturbation=AtmoPerturbation())

    @cached_property
    def packed(self) -> np.ndarray:
        p = self.perturbation
        head = [0.0 if self.kind == "exponential" else 1.0, self.h_top, p.bias, len(p.waves)]
        for wave in p.waves:
            head.extend(wave)
        if self.kind == "exponential":
            head.extend([self.rho0, self.scale_height])
        else:
            n_seg = len(self.coeffs)
            head.extend([n_seg, len(self.coeffs[0])])
            head.extend(self.knots)
            for row in self.coeffs:
                head.extend(row)
        return np.asarray(head, dtype=np.float64)

    def __call__(self, h: float) -> float:
        return float(_kernels.density(self.packed, float(h)))


@dataclass(frozen=True)
class PlanetModel:
    mu: float = URANUS_MU
    R0: float = URANUS_R0
    J2: float = URANUS_J2
    Omega: float = URANUS_OMEGA
    atmosphere: AtmosphereModel = field(
        default_factory=lambda: AtmosphereModel(rho0=NOMINAL_RHO0, scale_height=NOMINAL_SCALE_HEIGHT)
    )

    def __post_init__(self):
        if not (self.mu > 0 and self.R0 > 0):
            raise ValueError("mu and R0 must be positive")

    def radius(self, h: float) -> float:
        return self.R0 + h

    def altitude(self, r: float) -> float:
        return r - self.R0

    def with_atmosphere(self, atmosphere: AtmosphereModel) -> "PlanetModel":
        return replace(self, atmosphere=atmosphere)

    @cached_property
    def packed(self) -> np.ndarray:
        return np.array([self.mu, self.R0, self.J2, self.Omega], dtype=np.float64)


def gravity(planet: PlanetModel, r: float, phi: float) -> tuple[float, float]:
    """Radial and latitudinal gravity components [m/s^2] with the J2 term."""
    if r <= 0:
        raise ValueError("radius must be positive")
    g_r, g_phi = _kernels.gravity(planet.packed, float(r), float(phi))
    return float(g_r), float(g_phi)


def density(planet: PlanetModel, h: float, perturbed: bool = False) -> float:
    """Density [kg/m^3] at altitude ``h``; zero above the atmosphere ceiling."""
    atm = planet.atmosphere if perturbed else planet.atmosphere.nominal
    return atm(h)
