"""Command line entry point.

Subcommands: simulate (run a scenario, emit trace.csv + SVG plots),
verify (the seven-check identity suite), region (Md positive
definiteness interval), counterexample (prior-work ODE residual).
Exit codes: 0 success, 1 model/verification failure, 2 config error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import verify as verify_mod
from .config import Config, ConfigError, load_config
from .controller import EmptyRegion, region_rho
from .simulate import NonFiniteState, Trace, run


def write_trace_csv(trace: Trace, path: str):
    """Fixed-schema CSV, 9 significant digits, byte-stable across runs."""
    ell = trace.theta_hat.shape[1]
    header = "t,q1,q2,p1,p2,u,d,d_hat,H,Hd,V_lyap,ptilde1"
    header += "".join(f",theta_hat_{i + 1}" for i in range(ell))
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for i in range(trace.t.shape[0]):
            row = [trace.t[i], trace.q[i, 0], trace.q[i, 1], trace.p[i, 0],
                   trace.p[i, 1], trace.u[i], trace.d[i], trace.d_hat[i],
                   trace.H[i], trace.Hd[i], trace.V_lyap[i], trace.ptilde1[i]]
            row.extend(trace.theta_hat[i])
            fh.write(",".join(f"{v:.9g}" for v in row) + "\n")


def trace_summary(trace: Trace) -> dict:
    out = {"status": trace.status, "steps": max(int(trace.t.shape[0]) - 1, 0)}
    if trace.t.shape[0] > 0:
        out["t_final"] = float(trace.t[-1])
        out["final_q_inf"] = float(np.max(np.abs(trace.q[-1])))
        out["final_dhat_minus_d"] = float(abs(trace.d_hat[-1] - trace.d[-1]))
    if trace.t.shape[0] > 1:
        dt = float(trace.t[1] - trace.t[0])
        slopes = np.diff(trace.Hd) / dt
        out["hd_slope_min"] = float(slopes.min())
        out["hd_slope_max"] = float(slopes.max())
        vslopes = np.diff(trace.V_lyap) / dt
        out["v_slope_max"] = float(vslopes.max())
    if trace.status != "ok":
        out["exit_reason"] = trace.exit_reason
    return out


def _emit_plots(trace: Trace, cfg: Config, out_dir: str):
    from .svgplot import line_plot

    line_plot(os.path.join(out_dir, "q.svg"), trace.t,
              [("q1", trace.q[:, 0]), ("q2", trace.q[:, 1])],
              title="configuration variables", xlabel="t [s]", ylabel="q [rad]")
    line_plot(os.path.join(out_dir, "u.svg"), trace.t, [("u", trace.u)],
              title="control torque", xlabel="t [s]", ylabel="u")
    if cfg.mode != "nominal":
        line_plot(os.path.join(out_dir, "d_est.svg"), trace.t,
                  [("d", trace.d), ("d_hat", trace.d_hat)],
                  title="disturbance and estimate", xlabel="t [s]", ylabel="d")


def cmd_simulate(cfg: Config, out_dir: str, as_json: bool) -> int:
    scenario = cfg.scenario()
    try:
        trace = run(scenario)
    except NonFiniteState as e:
        print(f"simulation failed: {e}", file=sys.stderr)
        return 1
    os.makedirs(out_dir, exist_ok=True)
    write_trace_csv(trace, os.path.join(out_dir, "trace.csv"))
    if cfg.plots and trace.t.shape[0] > 0:
        _emit_plots(trace, cfg, out_dir)
    summary = trace_summary(trace)
    if as_json:
        print(json.dumps(summary, indent=2))
    else:
        for key, value in summary.items():
            print(f"{key}: {value}")
    return 0 if trace.status == "ok" else 1


def _report_lines(reports) -> list[str]:
    lines = [f"{'check':<26} {'value':>13} {'tol':>10} {'kind':<10} result"]
    for r in reports:
        lines.append(f"{r.name:<26} {r.max_abs_residual:>13.4e} {r.tol:>10.1e} "
                     f"{r.kind:<10} {'pass' if r.passed else 'FAIL'}")
    return lines


def cmd_verify(cfg: Config, as_json: bool) -> int:
    reports = verify_mod.verify_all(cfg.params, cfg.gains, cfg.verify)
    if as_json:
        print(json.dumps([r.to_record() for r in reports], indent=2))
    else:
        print("\n".join(_report_lines(reports)))
    return 0 if all(r.passed for r in reports) else 1


def cmd_region(cfg: Config, as_json: bool) -> int:
    try:
        rho = region_rho(cfg.params, cfg.gains)
    except EmptyRegion as e:
        print(f"empty region: {e}", file=sys.stderr)
        return 1
    scan = verify_mod.region_scan(cfg.params, cfg.gains, cfg.verify.scan_cells)
    md = verify_mod.md_definiteness_scan(cfg.params, cfg.gains,
                                         cfg.verify.md_scan_points)
    record = {
        "rho_formula": rho,
        "rho_scan": scan,
        "md_pd_interval_endpoint": md.details["pd_endpoint"],
    }
    if as_json:
        print(json.dumps(record, indent=2))
    else:
        print(f"rho (formula): {rho:.9g}")
        print(f"rho (d4 sign scan): {scan:.9g}")
        print(f"det Md > 0 interval endpoint: {md.details['pd_endpoint']:.9g}")
    return 0


def cmd_counterexample(cfg: Config, as_json: bool) -> int:
    report = verify_mod.remark2_residual(cfg.verify.counterexample,
                                         cfg.verify.grid_points)
    sound = (report.details["integrated_solution_max_residual"]
             <= report.details["soundness_tol"])
    if as_json:
        record = report.to_record()
        record["checker_sound"] = sound
        print(json.dumps(record, indent=2))
    else:
        print("\n".join(_report_lines([report])))
        print(f"checker soundness on integrated solution: "
              f"{report.details['integrated_solution_max_residual']:.3e} "
              f"({'pass' if sound else 'FAIL'})")
    return 0 if report.passed and sound else 1


def _add_common(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, metavar="PATH",
                        help="YAML configuration file")
    parser.add_argument("--out", default=default, metavar="DIR",
                        help="output directory (overrides output.dir)")
    if suppress:
        parser.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                            help="machine-readable output")
    else:
        parser.add_argument("--json", action="store_true", default=False,
                            help="machine-readable output")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ripsim",
        description="Rotary inverted pendulum: energy-shaping control, "
                    "simulation, verification")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "verify", "region", "counterexample"):
        p = sub.add_parser(name)
        _add_common(p, suppress=True)
    args = parser.parse_args(argv)

    if args.config is None:
        print("error: --config PATH is required", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    out_dir = args.out if args.out is not None else cfg.out_dir

    if args.command == "simulate":
        return cmd_simulate(cfg, out_dir, args.json)
    if args.command == "verify":
        return cmd_verify(cfg, args.json)
    if args.command == "region":
        return cmd_region(cfg, args.json)
    return cmd_counterexample(cfg, args.json)


if __name__ == "__main__":
    sys.exit(main())
