"""Command line interface, exercised in-process through main(argv).

Covers:
  - simulate: exit codes, trace.csv schema and byte-stability, SVG plots,
    --out override, --json summary, region-exit reporting
  - verify: seven-row report, --json records, failure exit on a broken check
  - region: formula/scan/interval printout and EmptyRegion handling
  - counterexample: residual report plus checker soundness line
  - config errors exit 2
"""
import json

import numpy as np
import pytest

from ripsim.cli import main

ROBOT = "robot: {p: [2.0, 1.0, 1.0, 2.0, 1.0]}\n"
SHORT_SIM = ("controller: {kappa: 0.5, kv: 2.0}\n"
             "simulation: {q0: [0.1, 0.2], dt: 0.001, t_end: 0.05}\n")
ROBUST = (ROBOT +
          "controller: {kappa: 0.5, kv: 2.0}\n"
          "simulation: {mode: disturbed_robust, q0: [0.1, 0.2], dt: 0.001, t_end: 0.05}\n"
          "disturbance: {f: ['1', 'q1', 'sin(q2)*cos(p1)'], theta: [0.1, 0.1, -0.3]}\n"
          "adaptive: {gamma: 1.0}\n")

BASE_COLUMNS = "t,q1,q2,p1,p2,u,d,d_hat,H,Hd,V_lyap,ptilde1"


def cfg_file(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


def test_simulate_writes_trace(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT + SHORT_SIM + f"output: {{dir: '{tmp_path}/out'}}\n")
    assert main(["simulate", "--config", cfg]) == 0
    header, rows = read_csv(tmp_path / "out" / "trace.csv")
    assert header == BASE_COLUMNS
    assert len(rows) == 51
    widths = {len(r) for r in rows}
    assert widths == {len(BASE_COLUMNS.split(","))}
    ts = [float(r[0]) for r in rows]
    assert ts[0] == 0.0 and ts[-1] == pytest.approx(0.05)
    out = capsys.readouterr().out
    assert "status: ok" in out


def test_simulate_csv_byte_identical(tmp_path):
    cfg = cfg_file(tmp_path, ROBOT + SHORT_SIM)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trace.csv").read_bytes()
    b = (tmp_path / "b" / "trace.csv").read_bytes()
    assert a == b
    assert a.endswith(b"\n")


def test_simulate_robust_theta_columns(tmp_path):
    cfg = cfg_file(tmp_path, ROBUST)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    header, rows = read_csv(tmp_path / "out" / "trace.csv")
    assert header == BASE_COLUMNS + ",theta_hat_1,theta_hat_2,theta_hat_3"
    assert all(len(r) == 15 for r in rows)
    d_col = np.array([float(r[6]) for r in rows])
    assert d_col[0] == pytest.approx(0.1 + 0.1 * 0.1 - 0.3 * np.sin(0.2), abs=1e-9)


def test_simulate_json_summary(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT + SHORT_SIM)
    assert main(["simulate", "--config", cfg, "--json",
                 "--out", str(tmp_path / "out")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["status"] == "ok"
    assert summary["steps"] == 50
    assert summary["t_final"] == pytest.approx(0.05)
    assert "hd_slope_max" in summary and "final_q_inf" in summary


def test_simulate_region_exit_is_failure(tmp_path, capsys):
    text = ROBOT + "simulation: {q0: [0.0, 0.6], dt: 0.001, t_end: 0.01}\n"
    cfg = cfg_file(tmp_path, text)
    with pytest.warns(UserWarning):
        code = main(["simulate", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 1
    assert "region_exit" in capsys.readouterr().out
    header, rows = read_csv(tmp_path / "out" / "trace.csv")
    assert header == BASE_COLUMNS and rows == []


def test_plots_emitted(tmp_path):
    cfg = cfg_file(tmp_path, ROBUST)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    for name in ("q.svg", "u.svg", "d_est.svg"):
        body = (tmp_path / "out" / name).read_text()
        assert "<svg" in body and "</svg>" in body


def test_plots_suppressed(tmp_path):
    cfg = cfg_file(tmp_path, ROBOT + SHORT_SIM + "output: {plots: false}\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    assert not (tmp_path / "out" / "q.svg").exists()
    assert (tmp_path / "out" / "trace.csv").exists()


def test_nominal_has_no_d_est_plot(tmp_path):
    cfg = cfg_file(tmp_path, ROBOT + SHORT_SIM)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "q.svg").exists()
    assert not (tmp_path / "out" / "d_est.svg").exists()


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.yaml")]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["simulate"]) == 2


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT + "controller: {k1: 0.6}\n")
    assert main(["simulate", "--config", cfg]) == 2
    assert "d4(0)" in capsys.readouterr().err


def test_config_flag_position_flexible(tmp_path):
    cfg = cfg_file(tmp_path, ROBOT + SHORT_SIM)
    assert main(["--config", cfg, "simulate", "--out", str(tmp_path / "o1")]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o2")]) == 0


def test_verify_text_report(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT + "verify: {scan_cells: 100000, md_scan_points: 10000}\n")
    assert main(["verify", "--config", cfg]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 8
    names = [line.split()[0] for line in lines[1:]]
    assert names == ["kinetic_matching", "potential_matching", "region_rho",
                     "md_definiteness", "hessian_vd", "closed_loop_equivalence",
                     "remark2_counterexample"]
    assert all(line.endswith("pass") for line in lines[1:])


def test_verify_json_records(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT + "verify: {scan_cells: 100000, md_scan_points: 10000}\n")
    assert main(["verify", "--config", cfg, "--json"]) == 0
    records = json.loads(capsys.readouterr().out)
    assert len(records) == 7
    for rec in records:
        assert {"name", "max_abs_residual", "tol", "kind", "pass"} <= set(rec)
        assert rec["pass"] is True


def test_verify_detects_broken_identity(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT +
                   "verify: {psi3_offset: 0.01, scan_cells: 100000, md_scan_points: 10000}\n")
    assert main(["verify", "--config", cfg]) == 1
    out = capsys.readouterr().out
    line = next(s for s in out.splitlines() if s.startswith("kinetic_matching"))
    assert line.endswith("FAIL")


def test_region_text(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT + "verify: {scan_cells: 100000, md_scan_points: 10000}\n")
    assert main(["region", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "rho (formula): 0.542639102" in out
    assert "rho (d4 sign scan):" in out
    assert "det Md > 0 interval endpoint:" in out


def test_region_json(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT + "verify: {scan_cells: 100000, md_scan_points: 10000}\n")
    assert main(["region", "--config", cfg, "--json"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["rho_formula"] == pytest.approx(0.5426391022496526, abs=1e-12)
    assert abs(rec["rho_scan"] - rec["rho_formula"]) < 1e-4
    assert rec["md_pd_interval_endpoint"] <= rec["rho_formula"] + 1e-4


def test_region_empty_exits_1(tmp_path, capsys, monkeypatch):
    # load_config already rejects d4(0) <= 0, so force the defensive branch
    import ripsim.cli as cli_mod
    from ripsim.controller import EmptyRegion

    def boom(params, gains):
        raise EmptyRegion("d4(0) = -0.1 <= 0")

    monkeypatch.setattr(cli_mod, "region_rho", boom)
    cfg = cfg_file(tmp_path, ROBOT)
    assert main(["region", "--config", cfg]) == 1
    assert "empty region" in capsys.readouterr().err


def test_counterexample_report(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT)
    assert main(["counterexample", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "remark2_counterexample" in out
    assert "checker soundness" in out and "pass" in out


def test_counterexample_json(tmp_path, capsys):
    cfg = cfg_file(tmp_path, ROBOT +
                   "verify: {counterexample: {frak_k1: 2.0, frak_k2: 0.7, b: 1.3}}\n")
    assert main(["counterexample", "--config", cfg, "--json"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["pass"] is True and rec["checker_sound"] is True
    assert rec["max_abs_residual"] > 1e-2
