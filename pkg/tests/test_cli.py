import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from frwflow.cli import main, parse_values
from frwflow.trajectory import COLUMNS


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


DESITTER = {"spec_version": 1, "model": "friedmann", "kappa": 0, "Lambda": 3.0, "span": [0, 2], "initial": {"a": 1.0}}
INTRINSIC = {"spec_version": 1, "model": "flow", "kappa": 1.0, "span": [0.0, 1.0], "initial": {"a": 1.0}, "formulation": {"kind": "intrinsic"}}
DUST = {"spec_version": 1, "model": "friedmann", "span": [0, 5], "fluids": [{"w": 0, "rho0": 1.0}], "initial": {"a": 1.0}}


def test_simulate_desitter(tmp_path):
    out = tmp_path / "ds.csv"
    assert main(["simulate", "--config", str(write(tmp_path, "ds.json", DESITTER)), "--out", str(out)]) == 0
    rows = read_csv(out)
    t = np.array([float(r["t"]) for r in rows])
    a = np.array([float(r["a"]) for r in rows])
    assert np.max(np.abs(a / np.exp(t) - 1)) <= 1e-6
    assert all(r["phi"] == "" for r in rows)  # missing quantities are empty, never 0
    summary = json.loads((tmp_path / "ds.summary.json").read_text())
    assert summary["max_residuals"]["constraint_residual"] <= 1e-8
    assert (tmp_path / "ds_plot.py").exists()
    compile((tmp_path / "ds_plot.py").read_text(), "plot", "exec")


def test_simulate_intrinsic_crunch_event(tmp_path):
    out = tmp_path / "i.csv"
    assert main(["simulate", "--config", str(write(tmp_path, "i.json", INTRINSIC)), "--out", str(out)]) == 0
    summary = json.loads((tmp_path / "i.summary.json").read_text())
    assert summary["terminal_event"] == "singularity-floor"
    assert abs(summary["events"][-1]["t_event"] - 0.25) < 1e-6


def test_simulate_empty_span_single_row(tmp_path):
    cfg = dict(INTRINSIC, span=[0.0, 0.0])
    out = tmp_path / "z.csv"
    assert main(["simulate", "--config", str(write(tmp_path, "z.json", cfg)), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 1 and float(rows[0]["a"]) == 1.0 and float(rows[0]["t"]) == 0.0


def test_simulate_flow_summary_reports_sigma(tmp_path):
    cfg = {"spec_version": 1, "model": "flow", "kappa": 0.0, "span": [0, 0.5], "initial": {"a": 1.0, "a_dot": 1.0}}
    out = tmp_path / "f.csv"
    assert main(["simulate", "--config", str(write(tmp_path, "f.json", cfg)), "--out", str(out)]) == 0
    diag = json.loads((tmp_path / "f.summary.json").read_text())["flow_diagnostics"]
    assert diag["sigma"] == -1 and "INCONSISTENT" in diag["sigma_report"]
    assert diag["residual_chi_form"] <= 1e-6


def test_simulate_is_byte_reproducible(tmp_path):
    cfg = write(tmp_path, "d.json", DUST)
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "one.csv")])
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "two.csv")])
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()
    assert b"\r\n" not in (tmp_path / "one.csv").read_bytes()


def test_simulate_bad_config_exit_1(tmp_path, capsys):
    bad = write(tmp_path, "b.json", dict(DUST, fluids=[{"w": 0}]))
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "b.csv")]) == 1
    assert "fluids[0].rho0" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "b.csv")]) == 1


def test_simulate_inconsistent_initial_data(tmp_path, capsys):
    cfg = {"spec_version": 1, "model": "bransdicke", "kappa": -1.0, "span": [0, 1], "fluids": [{"w": 0, "rho0": 1}],
           "brans_dicke": {"w_bd": 10.0}, "initial": {"a": 1.0, "H": 0.0, "phi": 1.0}}
    assert main(["simulate", "--config", str(write(tmp_path, "c.json", cfg)), "--out", str(tmp_path / "c.csv")]) == 1
    assert "residual" in capsys.readouterr().err


def test_simulate_budget_failure_exit_2(tmp_path):
    cfg = dict(DUST, integrator={"max_steps": 3, "h_max": 0.001, "h_init": 0.001})
    assert main(["simulate", "--config", str(write(tmp_path, "n.json", cfg)), "--out", str(tmp_path / "n.csv")]) == 2


def test_sweep_kappa_intrinsic(tmp_path):
    out = tmp_path / "s.csv"
    cfg = write(tmp_path, "i.json", INTRINSIC)
    assert main(["sweep", "--config", str(cfg), "--param", "kappa", "--values", "-1", "0", "1", "--out", str(out), "--jobs", "2"]) == 0
    rows = read_csv(out)
    assert [r["value"] for r in rows] == ["-1", "0", "1"]
    assert [r["event"] for r in rows] == ["", "", "singularity-floor"]
    assert (tmp_path / "s_plot.py").exists()


def test_sweep_equation_of_state_exponents(tmp_path):
    out = tmp_path / "w.csv"
    cfg = write(tmp_path, "d.json", DUST)
    assert main(["sweep", "--config", str(cfg), "--param", "w", "--values=-1,0,1/3", "--out", str(out)]) == 0
    exps = [float(r["rho_exponent"]) for r in read_csv(out)]
    assert exps == pytest.approx([0.0, -3.0, -4.0], abs=1e-6)


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = write(tmp_path, "d.json", DUST)
    main(["sweep", "--config", str(cfg), "--param", "kappa", "--values", "-1", "0", "0.5", "--out", str(tmp_path / "a.csv")])
    main(["sweep", "--config", str(cfg), "--param", "kappa", "--values", "-1", "0", "0.5", "--out", str(tmp_path / "b.csv"), "--jobs", "3"])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sweep_records_failures_and_continues(tmp_path):
    out = tmp_path / "f.csv"
    cfg = write(tmp_path, "d.json", DUST)
    assert main(["sweep", "--config", str(cfg), "--param", "rho0", "--values", "1", "-1", "2", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r["status"] for r in rows] == ["ok", "error", "ok"]
    assert "rho0" in rows[1]["message"]


def test_sweep_c0_alias(tmp_path):
    cfg = {"spec_version": 1, "model": "flow", "kappa": 0.0, "span": [0, 0.2], "initial": {"a": 2.0, "a_dot": 0.0}}
    out = tmp_path / "c.csv"
    assert main(["sweep", "--config", str(write(tmp_path, "c.json", cfg)), "--param", "c0", "--values", "0", "0.4", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert float(rows[0]["a_final"]) == 2.0 and float(rows[1]["a_final"]) > 2.0


def test_sweep_empty_range(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["sweep", "--config", str(write(tmp_path, "d.json", DUST)), "--param", "kappa", "--values", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 0


def test_parse_values():
    assert parse_values(["-1,0", "1/3", "2.5", "x"]) == [-1, 0, 1 / 3, 2.5, "x"]
    assert parse_values([]) == []


def test_classify(capsys):
    H = 0.5
    crit = 3 * H * H / (8 * math.pi)
    assert main(["classify", "--rho", str(2 * crit), "--H", str(H), "--a", "1", "--kappa", str(H * H)]) == 0
    out = capsys.readouterr().out
    assert "closed" in out and "Omega = 2" in out
    assert main(["classify", "--rho", "1", "--H", "0", "--a", "1", "--kappa", "0"]) == 1
    assert "nonzero Hubble" in capsys.readouterr().err


def test_verify_wdw_and_exit_codes(capsys):
    assert main(["verify", "--suite", "wdw"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["verify", "--suite", "wdw", "--tol-scale", "1e-20"]) == 3


def test_verify_flow_reports_sigma(capsys):
    assert main(["verify", "--suite", "flow"]) == 0
    out = capsys.readouterr().out
    assert "calibrated sigma = -1" in out and "INFO" in out and "printed form first integral" in out


def test_help_documents_columns(capsys):
    with pytest.raises(SystemExit):
        from frwflow.cli import build_parser

        build_parser().parse_args(["simulate", "--help"])
    out = capsys.readouterr().out
    for col in COLUMNS:
        assert col in out


def test_usage_error_exit_1():
    assert main(["simulate"]) == 1


def test_module_entry_point_and_log_env(tmp_path):
    cmd = [sys.executable, "-m", "frwflow", "verify", "--suite", "odekit"]
    loud = subprocess.run(cmd, capture_output=True, text=True, env={"FRW_LOG": "debug", "PATH": "/usr/bin:/bin"})
    quiet = subprocess.run(cmd, capture_output=True, text=True, env={"PATH": "/usr/bin:/bin"})
    assert loud.returncode == quiet.returncode == 0
    assert "PASS" in loud.stdout
    assert "running suite odekit" in loud.stderr
    assert "running suite odekit" not in quiet.stderr
