import subprocess
import sys

import pytest

from confine_sim.cli import EXIT_CONFIG, EXIT_OK, main
from confine_sim.io import read_table, read_trajectory


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--out", str(out), "--t-end", "3e-4", "--snapshot-stride", "5"])
    assert code == EXIT_OK
    assert "completed" in capsys.readouterr().out
    traj = read_trajectory(out / "trajectory.jsonl")
    assert traj.completed and traj.final.t == pytest.approx(3e-4)
    assert len(read_table(out / "summary.csv")) == len(traj.snapshots)
    (row,) = read_table(out / "metrics.csv")
    assert row["status"] == "completed" and row["moved"] == "false"
    # metrics recomputed from the file agree with the run
    assert main(["metrics", str(out / "trajectory.jsonl"), "--out", str(tmp_path / "m.csv")]) == EXIT_OK
    (again,) = read_table(tmp_path / "m.csv")
    assert {k: v for k, v in again.items() if k != "wall_time"} == {k: v for k, v in row.items() if k != "wall_time"}


def test_validate_config(tmp_path, capsys):
    assert main(["validate-config"]) == EXIT_OK
    assert "k_b" in capsys.readouterr().out
    bad = tmp_path / "bad.yaml"
    bad.write_text("channel:\n  f_beta: 0.5\n  f_width: 0.4\n")
    assert main(["validate-config", "--config", str(bad)]) == EXIT_CONFIG
    assert "f_beta" in capsys.readouterr().err
    typo = tmp_path / "typo.yaml"
    typo.write_text("nucleus:\n  kb: 1.0\n")
    assert main(["run", "--config", str(typo), "--out", str(tmp_path / "x")]) == EXIT_CONFIG


def test_usage_errors(capsys):
    assert main(["run", "--no-such-flag"]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG
    assert main(["run", "--t-end", "-1"]) == EXIT_CONFIG
    assert main(["metrics", "/nonexistent/file.jsonl"]) == EXIT_CONFIG


def test_sweep_table(tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--out", str(out), "--t-end", "2e-4", "--axis", "nucleus.k_b=logspace(-2.5,-0.5,5)"])
    assert code == EXIT_OK
    rows = read_table(out / "sweep.csv")
    assert len(rows) == 5
    assert [float(r["nucleus.k_b"]) for r in rows] == pytest.approx([10 ** (-2.5 + 0.5 * k) for k in range(5)])
    assert all(r["status"] == "completed" for r in rows)
    assert main(["sweep", "--out", str(out)]) == EXIT_CONFIG


def test_console_module_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "confine_sim.cli", "validate-config"], capture_output=True, text=True)
    assert res.returncode == 0 and "numerics" in res.stdout
