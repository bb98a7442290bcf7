import csv
import json
import time

import numpy as np
import pytest

from aerocap.aero import QUADRATIC_FIT
from aerocap.cli import EXIT_NOT_CAPTURED, EXIT_OK, EXIT_USAGE, main
from aerocap.dynamics import TRACE_COLUMNS
from aerocap.montecarlo import RECORD_COLUMNS


def test_single_nominal(tmp_path):
    assert main(["single", "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] and summary["status"] == "exited"
    assert abs(summary["exit_error"]) < 5.0
    with open(tmp_path / "trace.csv") as fh:
        assert next(csv.reader(fh)) == list(TRACE_COLUMNS)
    assert (tmp_path / "guidance_log.csv").stat().st_size > 0


def test_single_not_captured_exit_code(tmp_path):
    rc = main(["single", "--algo", "fnpag", "--efpa", "-11.12", "--out", str(tmp_path)])
    assert rc == EXIT_NOT_CAPTURED
    assert not json.loads((tmp_path / "summary.json").read_text())["passed"]


def test_replay_reproduces_campaign_run(tmp_path):
    assert main(["campaign", "--n", "1", "--start", "4", "--out", str(tmp_path / "c")]) == EXIT_OK
    with open(tmp_path / "c" / "records.csv") as fh:
        rec = next(csv.DictReader(fh))
    main(["single", "--replay", "4", "--out", str(tmp_path / "s")])
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert rec["run_id"] == "4"
    assert float(rec["v_exit"]) == pytest.approx(summary["v_exit"], rel=1e-8)


def test_campaign_outputs_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["campaign", "--n", "2", "--seed", "9", "--out", str(tmp_path / d)]) == EXIT_OK
    a, b = (tmp_path / "a" / "records.csv").read_bytes(), (tmp_path / "b" / "records.csv").read_bytes()
    assert a == b
    assert a.decode().splitlines()[0] == ",".join(RECORD_COLUMNS)
    stats = json.loads((tmp_path / "a" / "stats.json").read_text())
    assert stats["n_runs"] == 2 and stats["dispersion"]["master_seed"] == 9
    assert {"failures", "pass_pct", "delta_v", "corridor"} <= set(stats)
    assert set(stats["delta_v"]) == {"mean", "three_sigma", "p99"}
    assert set(stats["corridor"]) == {"lo", "hi", "width"}


def test_campaign_smoke_run_under_a_minute(tmp_path):
    t0 = time.perf_counter()
    assert main(["campaign", "--n", "10", "--out", str(tmp_path)]) == EXIT_OK
    assert time.perf_counter() - t0 < 60.0


def _costate_csv(path, t, V, lV, lg):
    with open(path, "w") as fh:
        fh.write("t,V,lambda_V,lambda_gamma\n")
        for row in zip(t, V, lV, lg):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def test_verify_switching(tmp_path):
    t = np.linspace(0.0, 100.0, 101)
    _costate_csv(tmp_path / "cs.csv", t, np.full_like(t, 2e4), np.full_like(t, 0.3),
                 500.0 * (50.0 - t))
    assert main(["verify-switching", str(tmp_path / "cs.csv"), "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads((tmp_path / "switching_summary.json").read_text())
    assert summary["sigma_switch_times"] == pytest.approx([50.0])
    with open(tmp_path / "switching.csv") as fh:
        assert len(list(csv.reader(fh))) == t.size + 1


def test_verify_switching_without_velocity_costate(tmp_path):
    t = np.linspace(0.0, 10.0, 11)
    _costate_csv(tmp_path / "cs.csv", t, np.full_like(t, 2e4), np.zeros_like(t), 100.0 + t)
    assert main(["verify-switching", str(tmp_path / "cs.csv"), "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "switching.csv") as fh:
        A = [float(row["A_up"]) for row in csv.DictReader(fh)]
    expected = -QUADRATIC_FIT.CLa / (2 * QUADRATIC_FIT.CLa2)
    assert A == pytest.approx([expected] * t.size, rel=1e-8)


@pytest.mark.parametrize("body", [
    "t,V,lambda_V,lambda_gamma\n",
    "t,V,lambda_V\n0,1,2\n",
    "t,V,lambda_V,lambda_gamma\n1,2e4,1,1\n0,2e4,1,1\n",
    "t,V,lambda_V,lambda_gamma\n0,-5,1,1\n",
    "t,V,lambda_V,lambda_gamma\n0,x,1,1\n",
])
def test_verify_switching_rejects_bad_input(tmp_path, body):
    (tmp_path / "cs.csv").write_text(body)
    assert main(["verify-switching", str(tmp_path / "cs.csv"), "--out", str(tmp_path)]) \
        == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["single", "--config", "/nonexistent/dir"],
    ["single", "--algo", "bam"],
    ["campaign", "--n", "0"],
    ["campaign", "--n", "2", "--seed", "-1"],
    ["campaign"],
    ["verify-switching", "/nonexistent.csv"],
    [],
])
def test_usage_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)] if argv else argv) == EXIT_USAGE


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "campaign" in capsys.readouterr().out
