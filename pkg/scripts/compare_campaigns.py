"""Run the same dispersed campaign with each guidance algorithm and tabulate.

Every algorithm flies identical dispersed inputs (common random numbers).
Records and stats land in ``<out>/<entry_set>/<algorithm>/``.

    python3 scripts/compare_campaigns.py --n 500 --entry-set conservative --jobs 8
"""

from __future__ import annotations

import argparse
import time
from dataclasses import replace
from pathlib import Path

from aerocap.config import load_config
from aerocap.montecarlo import (ENTRY_SETS, compute_stats, run_campaign, write_records_csv,
                                write_stats_json)

ALGOS = ("abamguid_plus", "abamguid", "fnpag")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--entry-set", choices=sorted(ENTRY_SETS), default="conservative")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, default=Path("out/campaigns"))
    p.add_argument("--algos", nargs="+", choices=ALGOS, default=list(ALGOS))
    args = p.parse_args()

    cfg = load_config(args.config)
    spec = replace(cfg.dispersion, efpa_3sigma_deg=ENTRY_SETS[args.entry_set],
                   master_seed=args.seed)
    rows = []
    for algo in args.algos:
        sc = replace(cfg.scenario, guidance=replace(cfg.scenario.guidance, algorithm=algo))
        t0 = time.perf_counter()
        records = run_campaign(spec, sc, args.n, jobs=args.jobs)
        wall = time.perf_counter() - t0
        stats = compute_stats(records)
        out = args.out / args.entry_set / algo
        out.mkdir(parents=True, exist_ok=True)
        write_records_csv(records, out / "records.csv")
        write_stats_json(stats, out / "stats.json", algo, spec, args.entry_set)
        rows.append((algo, stats, wall))
        print(f"{algo} done in {wall:.0f} s", flush=True)

    print(f"\n{args.entry_set}, n={args.n}, seed={args.seed}")
    print(f"{'algorithm':14s} {'pass %':>7s} {'fail':>5s} {'mean dV':>8s} {'3sig dV':>8s} "
          f"{'p99 dV':>8s} {'ECW deg':>8s}")
    for algo, s, _ in rows:
        print(f"{algo:14s} {s.pass_pct:7.1f} {s.n_fail + s.n_error:5d} {s.dv_mean:8.2f} "
              f"{s.dv_3sigma:8.2f} {s.dv_p99:8.2f} {s.corridor_width:8.3f}")


if __name__ == "__main__":
    main()
