"""Dispersion sampling, batch execution, statistics and persistence for campaigns.

Every run draws its random inputs from a stream keyed by ``(master_seed,
run_index)``, so a run's inputs never depend on scheduling or on how many
other runs are in the campaign. Runs sharing an index see the same dispersed
entry, atmosphere and aerodynamics whatever guidance algorithm flies them.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from aerocap.planet import AtmoPerturbation
from aerocap.rootfind import is_ordered
from aerocap.simulation import Scenario, StateNoise, simulate

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# EFPA 3-sigma [deg] of the two entry sets.
ENTRY_SETS = {"baseline": 0.189, "conservative": 0.622}


@dataclass(frozen=True)
class DispersionSpec:
    """Campaign dispersions. Every spread is stored as a 3-sigma value.

    The density dispersion multiplies the nominal profile by a log-normal
    bias and a sum of ``n_waves`` sinusoids in log-density with Gaussian
    amplitudes, uniform vertical wavelengths and uniform phases.
    """

    efpa_mean_deg: float = -10.79
    efpa_3sigma_deg: float = ENTRY_SETS["conservative"]
    k_CL_3sigma: float = 0.02
    k_CD_3sigma: float = 0.03
    density_bias_3sigma: float = 0.3
    wave_amp_3sigma: float = 0.06
    n_waves: int = 3
    wavelength_range: tuple[float, float] = (30e3, 150e3)
    state_noise: StateNoise = field(default_factory=StateNoise)
    master_seed: int = 0

    def __post_init__(self):
        spreads = (self.efpa_3sigma_deg, self.k_CL_3sigma, self.k_CD_3sigma,
                   self.density_bias_3sigma, self.wave_amp_3sigma)
        if any(s < 0 for s in spreads):
            raise ValueError("3-sigma values must be non-negative")
        lo, hi = self.wavelength_range
        if not 0 < lo <= hi:
            raise ValueError("wavelength range must satisfy 0 < lo <= hi")
        if self.n_waves < 0:
            raise ValueError("n_waves must be non-negative")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")

    @classmethod
    def for_entry_set(cls, name: str, **overrides) -> "DispersionSpec":
        if name not in ENTRY_SETS:
            raise ValueError(f"unknown entry set {name!r}; expected one of {sorted(ENTRY_SETS)}")
        return cls(efpa_3sigma_deg=ENTRY_SETS[name], **overrides)

    @classmethod
    def none(cls, **overrides) -> "DispersionSpec":
        """All spreads zero: every run flies the nominal inputs."""
        base = dict(efpa_3sigma_deg=0.0, k_CL_3sigma=0.0, k_CD_3sigma=0.0,
                    density_bias_3sigma=0.0, wave_amp_3sigma=0.0)
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class DispersedInputs:
    run_id: int
    seed: int
    efpa_deg: float
    k_CL: float
    k_CD: float
    atmo_seed: int
    atmosphere: AtmoPerturbation
    noise_seed: int


def _gauss(rng: np.random.Generator, mean: float, three_sigma: float) -> float:
    # Draw even when the spread is zero so the stream layout never changes.
    z = float(rng.standard_normal())
    return mean + z * three_sigma / 3.0


def sample_run(spec: DispersionSpec, run_index: int) -> DispersedInputs:
    """Dispersed inputs of run ``run_index``; a pure function of (master_seed, run_index)."""
    root = np.random.SeedSequence(entropy=spec.master_seed, spawn_key=(run_index,))
    seed = int(root.generate_state(1, np.uint64)[0])
    entry_ss, atmo_ss, noise_ss = root.spawn(3)
    rng = np.random.default_rng(entry_ss)
    efpa = _gauss(rng, spec.efpa_mean_deg, spec.efpa_3sigma_deg)
    k_CL = _gauss(rng, 1.0, spec.k_CL_3sigma)
    k_CD = _gauss(rng, 1.0, spec.k_CD_3sigma)
    atmo_seed = int(atmo_ss.generate_state(1, np.uint64)[0])
    atmo = AtmoPerturbation.sample(np.random.default_rng(atmo_ss), spec.density_bias_3sigma,
                                   spec.wave_amp_3sigma, spec.n_waves, spec.wavelength_range,
                                   seed=atmo_seed)
    noise_seed = int(noise_ss.generate_state(1, np.uint64)[0])
    return DispersedInputs(run_index, seed, efpa, k_CL, k_CD, atmo_seed, atmo, noise_seed)


def dispersed_scenario(base: Scenario, inputs: DispersedInputs, spec: DispersionSpec) -> Scenario:
    entry = replace(base.mission.entry, efpa_deg=inputs.efpa_deg)
    planet = base.planet.with_atmosphere(base.planet.atmosphere.with_perturbation(inputs.atmosphere))
    aero = base.aero.dispersed(inputs.k_CL, inputs.k_CD)
    onboard = base.onboard_aero if base.onboard_aero is not None else base.aero.nominal
    return replace(base, planet=planet, aero=aero, onboard_aero=onboard,
                   mission=replace(base.mission, entry=entry),
                   noise=spec.state_noise, noise_seed=inputs.noise_seed)


@dataclass(frozen=True)
class MonteCarloRecord:
    run_id: int
    seed: int
    algorithm: str
    efpa_deg: float
    k_CL: float
    k_CD: float
    atmo_seed: int
    outcome: str
    passed: bool
    v_exit: float
    gamma_exit_deg: float
    exit_error: float
    apoapsis: float
    delta_v: float
    period: float
    eccentricity: float
    n_solutions: int
    n_converged: int
    n_order_violations: int
    predictor_calls: int
    error: str = ""

    def __post_init__(self):
        if self.passed and self.outcome != "exited":
            raise ValueError("a passing run must have exited the atmosphere")


RECORD_COLUMNS = tuple(f.name for f in fields(MonteCarloRecord))


def _count_violations(solutions) -> tuple[int, int, int]:
    converged = [s for s in solutions if s.converged]
    bad = sum(1 for s in converged if not is_ordered(s.times))
    return len(solutions), len(converged), bad


def run_one(base: Scenario, spec: DispersionSpec, run_index: int) -> MonteCarloRecord:
    """Fly one dispersed run; any exception becomes an ``error`` record."""
    inputs = sample_run(spec, run_index)
    common = dict(run_id=run_index, seed=inputs.seed, algorithm=base.guidance.algorithm,
                  efpa_deg=inputs.efpa_deg, k_CL=inputs.k_CL, k_CD=inputs.k_CD,
                  atmo_seed=inputs.atmo_seed)
    try:
        res = simulate(dispersed_scenario(base, inputs, spec))
    except Exception as exc:  # noqa: BLE001 - a failed run must not sink the campaign
        last = traceback.extract_tb(exc.__traceback__)[-1]
        diag = f"{type(exc).__name__}: {exc} ({Path(last.filename).name}:{last.lineno})"
        log.warning("run %d raised %s", run_index, diag)
        nan = math.nan
        return MonteCarloRecord(**common, outcome="error", passed=False, v_exit=nan,
                                gamma_exit_deg=nan, exit_error=nan, apoapsis=nan, delta_v=nan,
                                period=nan, eccentricity=nan, n_solutions=0, n_converged=0,
                                n_order_violations=0, predictor_calls=0, error=diag)
    n_sol, n_conv, n_bad = _count_violations(res.solutions)
    return MonteCarloRecord(
        **common, outcome=res.status, passed=bool(res.passed), v_exit=res.v_exit,
        gamma_exit_deg=math.degrees(res.gamma_exit), exit_error=res.exit_error,
        apoapsis=res.apoapsis, delta_v=res.delta_v, period=res.period,
        eccentricity=res.eccentricity, n_solutions=n_sol, n_converged=n_conv,
        n_order_violations=n_bad, predictor_calls=res.predictor_calls,
    )


def _run_star(args):
    return run_one(*args)


def run_campaign(spec: DispersionSpec, base: Scenario, n_runs: int, jobs: int = 1,
                 start: int = 0) -> list[MonteCarloRecord]:
    """Fly runs ``start .. start + n_runs - 1``; records come back sorted by run id."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    tasks = [(base, spec, i) for i in range(start, start + n_runs)]
    if jobs == 1:
        records = [_run_star(t) for t in tasks]
    else:
        chunk = max(1, n_runs // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_star, tasks, chunksize=chunk))
    return sorted(records, key=lambda r: r.run_id)


@dataclass(frozen=True)
class CampaignStats:
    """Pass rate, Delta-V statistics over passing runs, and the entry corridor."""

    n_runs: int
    n_pass: int
    n_fail: int
    n_error: int
    pass_pct: float
    defined: bool
    dv_mean: float
    dv_3sigma: float
    dv_p99: float
    corridor_lo: float
    corridor_hi: float
    corridor_width: float


def nearest_rank(values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile of ``values``."""
    xs = sorted(values)
    if not xs:
        raise ValueError("percentile of an empty sample")
    k = max(1, math.ceil(pct / 100.0 * len(xs)))
    return float(xs[k - 1])


def compute_stats(records: Sequence[MonteCarloRecord]) -> CampaignStats:
    if not records:
        raise ValueError("compute_stats needs at least one record")
    n = len(records)
    n_err = sum(1 for r in records if r.outcome == "error")
    passing = [r for r in records if r.passed]
    n_pass = len(passing)
    n_fail = n - n_pass - n_err
    pct = 100.0 * n_pass / n
    nan = math.nan
    if not passing:
        return CampaignStats(n, 0, n_fail, n_err, 0.0, False, nan, nan, nan, nan, nan, nan)
    dv = np.sort(np.array([r.delta_v for r in passing], dtype=float))
    efpa = np.sort(np.array([r.efpa_deg for r in passing], dtype=float))
    sd = float(np.std(dv, ddof=1)) if n_pass > 1 else 0.0
    lo, hi = (float(v) for v in np.percentile(efpa, [0.15, 99.85]))
    return CampaignStats(n, n_pass, n_fail, n_err, pct, True, float(np.mean(dv)), 3.0 * sd,
                         nearest_rank(dv, 99.0), lo, hi, hi - lo)


# -- persistence ---------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def write_records_csv(records: Sequence[MonteCarloRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in RECORD_COLUMNS])


def read_records_csv(path) -> list[MonteCarloRecord]:
    types = {f.name: f.type for f in fields(MonteCarloRecord)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for name, raw in row.items():
                typ = types[name]
                if typ in ("bool", bool):
                    kw[name] = raw == "1"
                elif typ in ("int", int):
                    kw[name] = int(raw)
                elif typ in ("float", float):
                    kw[name] = float(raw)
                else:
                    kw[name] = raw
            out.append(MonteCarloRecord(**kw))
    return out


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def stats_document(stats: CampaignStats, algorithm: str, spec: DispersionSpec,
                   entry_set: str | None = None) -> dict:
    """Stats JSON body. Delta-V in m/s, corridor in degrees."""
    return _json_safe({
        "schema_version": SCHEMA_VERSION,
        "algorithm": algorithm,
        "entry_set": entry_set,
        "n_runs": stats.n_runs,
        "failures": stats.n_fail,
        "errors": stats.n_error,
        "pass_pct": stats.pass_pct,
        "defined": stats.defined,
        "delta_v": {"mean": stats.dv_mean, "three_sigma": stats.dv_3sigma, "p99": stats.dv_p99},
        "corridor": {"lo": stats.corridor_lo, "hi": stats.corridor_hi,
                     "width": stats.corridor_width},
        "dispersion": asdict(spec),
    })


def write_stats_json(stats: CampaignStats, path, algorithm: str, spec: DispersionSpec,
                     entry_set: str | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(stats_document(stats, algorithm, spec, entry_set), fh, indent=2, sort_keys=True)
        fh.write("\n")
