"""Fly the nominal and steep single-run scenarios with every algorithm.

Writes one output directory per (scenario, algorithm) with the trace,
guidance log and summary, and prints a comparison table.

    python3 scripts/run_scenarios.py --out out/scenarios
"""

from __future__ import annotations

import argparse
from pathlib import Path

from aerocap.cli import RunManifest, cmd_single

SCENARIOS = {"nominal": -10.79, "steep": -11.12}
ALGOS = ("abamguid_plus", "abamguid", "fnpag")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("out/scenarios"))
    p.add_argument("--config", type=Path, default=None)
    args = p.parse_args()
    for name, efpa in SCENARIOS.items():
        for algo in ALGOS:
            out = args.out / f"{name}_{algo}"
            print(f"{name:8s} efpa={efpa:7.2f}  ", end="", flush=True)
            cmd_single(RunManifest("single", args.config, out), algo=algo, efpa=efpa)


if __name__ == "__main__":
    main()
