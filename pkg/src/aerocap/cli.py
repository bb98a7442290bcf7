"""Command-line front end.

``aerocap single``            one closed-loop run: trace CSV, guidance log CSV, summary JSON
``aerocap campaign``          Monte Carlo campaign: records CSV, stats JSON
``aerocap verify-switching``  switching functions along a state/costate CSV

Exit codes: 0 success (captured, for ``single``), 2 not captured, 1 usage or
configuration error. ``AEROCAP_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from aerocap.aero import LINEAR_FIT, QUADRATIC_FIT
from aerocap.config import ConfigError, load_config
from aerocap.dynamics import write_trace_csv
from aerocap.guidance import ALGORITHMS, write_guidance_log
from aerocap.montecarlo import (ENTRY_SETS, compute_stats, dispersed_scenario, run_campaign,
                                sample_run, write_records_csv, write_stats_json)
from aerocap.optimal_control import SwitchingAnalysis, analyze_switching
from aerocap.orbits import DAY
from aerocap.simulation import simulate

log = logging.getLogger("aerocap")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CAPTURED = 2

# Costate CSV schema: required and optional columns.
COSTATE_REQUIRED = ("t", "V", "lambda_V", "lambda_gamma")
COSTATE_OPTIONAL = ("lambda_r",)


class UsageError(Exception):
    """Bad command-line input or unreadable input file."""


@dataclass(frozen=True)
class RunManifest:
    """What a command reads and where it writes."""

    mode: str
    config_dir: Path | None
    out_dir: Path

    def __post_init__(self):
        if self.mode not in ("single", "campaign", "verify-switching"):
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.config_dir is not None and not self.config_dir.is_dir():
            raise UsageError(f"configuration directory {self.config_dir} does not exist")


def _setup_logging() -> None:
    level = os.environ.get("AEROCAP_LOG", "WARNING").upper()
    if level not in ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    return v


def _write_json(doc: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(_json_safe(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- single ---------------------------------------------------------------------

def cmd_single(manifest: RunManifest, algo: str | None = None, efpa: float | None = None,
               replay: int | None = None, seed: int | None = None,
               record_every: int = 100) -> int:
    cfg = load_config(manifest.config_dir)
    sc = cfg.scenario
    if algo is not None:
        sc = replace(sc, guidance=replace(sc.guidance, algorithm=algo))
    if replay is not None:
        spec = cfg.dispersion if seed is None else replace(cfg.dispersion, master_seed=seed)
        sc = dispersed_scenario(sc, sample_run(spec, replay), spec)
    if efpa is not None:
        sc = replace(sc, mission=replace(sc.mission, entry=replace(sc.mission.entry, efpa_deg=efpa)))

    res = simulate(sc, record_every=record_every)
    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(res.trace, out / "trace.csv")
    write_guidance_log(res.guidance_log, out / "guidance_log.csv")
    summary = {
        "algorithm": sc.guidance.algorithm,
        "efpa_deg": sc.mission.entry.efpa_deg,
        "replay_run": replay,
        "status": res.status,
        "passed": bool(res.passed),
        "v_exit": res.v_exit,
        "v_target": res.v_target,
        "exit_error": res.exit_error,
        "gamma_exit_deg": math.degrees(res.gamma_exit),
        "apoapsis": res.apoapsis,
        "delta_v": res.delta_v,
        "period": res.period,
        "period_days": res.period / DAY if math.isfinite(res.period) else math.nan,
        "eccentricity": res.eccentricity,
        "t_trigger": res.t_trigger,
        "t_guidance_end": res.t_guidance_end,
        "t_final": res.final.t,
        "predictor_calls": res.predictor_calls,
        "wall_time": res.wall_time,
    }
    _write_json(summary, out / "summary.json")
    print(f"{sc.guidance.algorithm}: {res.status}, pass={res.passed}, "
          f"exit error {res.exit_error:+.2f} m/s, delta-V {res.delta_v:.2f} m/s, "
          f"period {summary['period_days']:.2f} d")
    return EXIT_OK if res.passed else EXIT_NOT_CAPTURED


# -- campaign -------------------------------------------------------------------

def cmd_campaign(manifest: RunManifest, n: int, jobs: int = 1, algo: str | None = None,
                 seed: int | None = None, entry_set: str | None = None, start: int = 0) -> int:
    if n < 1:
        raise UsageError("--n must be at least 1")
    if jobs < 1:
        raise UsageError("--jobs must be at least 1")
    cfg = load_config(manifest.config_dir)
    sc = cfg.scenario
    if algo is not None:
        sc = replace(sc, guidance=replace(sc.guidance, algorithm=algo))
    spec = cfg.dispersion
    entry = cfg.entry_set
    if entry_set is not None:
        spec = replace(spec, efpa_3sigma_deg=ENTRY_SETS[entry_set])
        entry = entry_set
    if seed is not None:
        spec = replace(spec, master_seed=seed)

    t0 = time.perf_counter()
    records = run_campaign(spec, sc, n, jobs=jobs, start=start)
    stats = compute_stats(records)
    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_records_csv(records, out / "records.csv")
    write_stats_json(stats, out / "stats.json", sc.guidance.algorithm, spec, entry)
    print(f"{sc.guidance.algorithm} {entry}: {stats.n_pass}/{stats.n_runs} passed "
          f"({stats.pass_pct:.1f}%), mean delta-V {stats.dv_mean:.2f} m/s, "
          f"corridor width {stats.corridor_width:.3f} deg, {time.perf_counter() - t0:.1f} s")
    return EXIT_OK


# -- verify-switching -------------------------------------------------------------

def read_costate_csv(path: Path) -> dict[str, np.ndarray]:
    """Columns ``t, V, lambda_V, lambda_gamma`` and optional ``lambda_r``; SI units."""
    if not path.is_file():
        raise UsageError(f"costate file {path} does not exist")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in COSTATE_REQUIRED if c not in header]
        if missing:
            raise UsageError(f"{path}: missing columns {missing}; need {list(COSTATE_REQUIRED)}")
        cols = [c for c in COSTATE_REQUIRED + COSTATE_OPTIONAL if c in header]
        data = {c: [] for c in cols}
        for i, row in enumerate(reader, start=2):
            try:
                for c in cols:
                    data[c].append(float(row[c]))
            except (TypeError, ValueError):
                raise UsageError(f"{path}:{i}: non-numeric value") from None
    if not data["t"]:
        raise UsageError(f"{path}: no data rows")
    arrays = {c: np.asarray(v) for c, v in data.items()}
    if np.any(np.diff(arrays["t"]) <= 0):
        raise UsageError(f"{path}: t must be strictly increasing")
    if np.any(arrays["V"] <= 0):
        raise UsageError(f"{path}: V must be positive")
    return arrays


def write_switching_csv(an: SwitchingAnalysis, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(an.COLUMNS)
        for row in an.rows():
            w.writerow([f"{float(v):.9g}" for v in row])


def cmd_verify_switching(manifest: RunManifest, costate_csv: Path) -> int:
    cfg = load_config(manifest.config_dir)
    data = read_costate_csv(costate_csv)
    aero = cfg.scenario.aero
    linear = aero if aero.kind == "linear" else LINEAR_FIT
    quadratic = aero if aero.kind == "quadratic" else QUADRATIC_FIT
    veh = cfg.scenario.vehicle
    an = analyze_switching(data["t"], data["V"], data["lambda_V"], data["lambda_gamma"],
                           linear, quadratic, veh.alpha_limits, veh.sigma_limits,
                           lambda_r=data.get("lambda_r"))
    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_switching_csv(an, out / "switching.csv")
    summary = {
        "sigma_switch_times": an.sigma_switch_times,
        "alpha_switch_times": an.alpha_switch_times,
        "A_relative_gap_at_sigma_switch": an.A_gap_at_sigma_switch,
    }
    with open(out / "switching_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=lambda v: None)
        fh.write("\n")
    print(f"sigma switches at {[round(t, 3) for t in an.sigma_switch_times]} s, "
          f"alpha switches at {[round(t, 3) for t in an.alpha_switch_times]} s")
    return EXIT_OK


# -- entry point ------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aerocap", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="configuration directory (defaults: packaged configuration)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("single", parents=[common], help="fly one closed-loop trajectory")
    s.add_argument("--algo", choices=ALGORITHMS)
    s.add_argument("--efpa", type=float, help="entry flight-path angle override [deg]")
    s.add_argument("--replay", type=int, metavar="RUN",
                   help="fly the dispersed inputs of campaign run RUN")
    s.add_argument("--seed", type=int, help="master seed for --replay")
    s.add_argument("--record-every", type=int, default=100,
                   help="trace sampling interval in integration steps")

    c = sub.add_parser("campaign", parents=[common], help="run a Monte Carlo campaign")
    c.add_argument("--algo", choices=ALGORITHMS)
    c.add_argument("--n", type=int, required=True, help="number of runs")
    c.add_argument("--seed", type=int, help="master seed (u64)")
    c.add_argument("--jobs", type=int, default=1, help="worker processes")
    c.add_argument("--entry-set", choices=sorted(ENTRY_SETS))
    c.add_argument("--start", type=int, default=0, help="index of the first run")

    v = sub.add_parser("verify-switching", parents=[common],
                       help="evaluate switching functions along a costate trajectory")
    v.add_argument("costate_csv", type=Path)
    return p


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if getattr(args, "seed", None) is not None and args.seed < 0:
            raise UsageError("--seed must be non-negative")
        manifest = RunManifest(args.command, args.config, args.out)
        if args.command == "single":
            return cmd_single(manifest, args.algo, args.efpa, args.replay, args.seed,
                              args.record_every)
        if args.command == "campaign":
            return cmd_campaign(manifest, args.n, args.jobs, args.algo, args.seed,
                                args.entry_set, args.start)
        return cmd_verify_switching(manifest, args.costate_csv)
    except (UsageError, ConfigError) as exc:
        print(f"aerocap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
