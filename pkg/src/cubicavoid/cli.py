"""Command-line front end: scenario runs, optimality checks, parameter sweeps.

    cubicavoid run   --config scenario.json --out results/
    cubicavoid sweep --config scenario.json --param potential.params.tau \
                     --values 0,0.5,1,2 --out results/

Outputs are machine-readable: trajectory.csv, scan.csv (check/sweep),
sweep.csv, and report.json.  Floats are written with 17 significant digits
so identical configs reproduce identical files byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .conjugacy import detect_biconjugate, fundamental_scan, verdict
from .cubics import integrate_cubic, shoot_bvp
from .errors import ConfigInvalid, CubicAvoidError, LogNearCutLocus
from .scenario import load_scenario, set_config_path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(x):
    return f"{float(x):.17g}"


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) if not isinstance(v, str) else v for v in row)
                 for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _config_hash(resolved):
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _group_columns(model):
    if model.is_matrix_group:
        return [f"g{i}{j}" for i in range(3) for j in range(3)]
    return [f"x{i}" for i in range(model.n)]


def _trajectory_rows(scenario, traj):
    model, pot = scenario.model, scenario.potential
    rows = []
    for k, t in enumerate(traj.times):
        g = traj.gs[k]
        gcols = g.reshape(-1) if model.is_matrix_group else np.atleast_1d(g)
        try:
            dist = float(model.bi_norm(model.log(traj.hs[k])))
        except LogNearCutLocus:
            dist = float("nan")
        row = [t, *gcols, *traj.xis[k, 0], *traj.xis[k, 1], *traj.xis[k, 2],
               pot.value(traj.hs[k]), dist]
        rows.append(row)
    return rows


def _trajectory_header(model):
    n = model.n
    cols = ["t", *_group_columns(model)]
    for j in range(3):
        cols.extend(f"xi{j}_{i}" for i in range(n))
    cols.extend(["V", "dist"])
    return cols


def _solve_base(scenario, seed=0, guess=None):
    """Base trajectory for any mode; returns (trajectory, bvp_residual|None)."""
    model, pot = scenario.model, scenario.potential
    if scenario.initial is not None:
        traj = integrate_cubic(model, pot, scenario.initial, scenario.span, scenario.steps)
        return traj, None
    n = model.n
    if guess is None:
        guess = (np.zeros(n), np.zeros(n))
    state = shoot_bvp(
        model, pot, scenario.boundary, guess, scenario.span, scenario.steps,
        tol=scenario.tolerances["bvp_tol"],
        max_iters=scenario.tolerances["bvp_max_iters"],
        seed=seed,
    )
    traj = integrate_cubic(model, pot, state, scenario.span, scenario.steps)
    gap = model.log(model.compose(model.inverse(traj.gs[-1]), scenario.boundary[2]))
    residual = float(np.linalg.norm(
        np.concatenate([gap, traj.xis[-1, 0] - scenario.boundary[3]])))
    return traj, residual


def _run_scenario(scenario, out_dir, seed=0, guess=None):
    """Execute one scenario into out_dir; returns the report dict."""
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    report = {
        "tool": {"name": "cubicavoid", "version": __version__},
        "config": scenario.resolved,
        "config_hash": _config_hash(scenario.resolved),
        "mode": scenario.mode,
        "status": "ok",
        "outputs": {"trajectory_csv": "trajectory.csv"},
    }
    try:
        traj, residual = _solve_base(scenario, seed=seed, guess=guess)
        _write_csv(out_dir / "trajectory.csv", _trajectory_header(scenario.model),
                   _trajectory_rows(scenario, traj))
        if residual is not None:
            report["boundary_residual"] = residual
        if scenario.mode in ("check", "sweep"):
            scan = fundamental_scan(scenario.model, scenario.potential, traj)
            detections = detect_biconjugate(
                scan,
                rel_tol=scenario.tolerances["rel_tol"],
                burn_in=scenario.tolerances["burn_in"],
            )
            result = verdict(scan, detections)
            _write_csv(out_dir / "scan.csv", ["t", "det", "sv_ratio"],
                       list(zip(scan.times, scan.det_values, scan.sv_ratios)))
            report["outputs"]["scan_csv"] = "scan.csv"
            report["verdict"] = result
            report["biconjugate_times"] = [float(t) for t in detections]
            report["inconclusive_times"] = [float(t) for t in scan.inconclusive_times]
            burn = scenario.tolerances["burn_in"]
            report["min_sv_ratio"] = float(np.min(scan.sv_ratios[burn:]))
            report["_solution"] = traj
    except CubicAvoidError as exc:
        report["status"] = "error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    report["timing_seconds"] = time.perf_counter() - started
    return report


def _write_report(out_dir, report):
    report = {k: v for k, v in report.items() if not k.startswith("_")}
    (out_dir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def cmd_run(args):
    try:
        scenario = load_scenario(args.config, mode_override=args.mode,
                                 tol_scale=args.tol_scale)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    report = _run_scenario(scenario, out_dir, seed=args.seed)
    _write_report(out_dir, report)
    if report["status"] != "ok":
        print(f"numerical failure: {report['error']['message']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_sweep(args):
    out_dir = Path(args.out)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigInvalid("<root>", "top-level config must be an object")
        parameter = args.param or raw.get("sweep", {}).get("parameter")
        if parameter is None:
            raise ConfigInvalid("sweep.parameter", "missing parameter path")
        if args.values is not None:
            values = [float(v) for v in args.values.split(",") if v.strip() != ""]
        else:
            values = raw.get("sweep", {}).get("values")
        if not values:
            raise ConfigInvalid("sweep.values", "no sweep values given")
        # validate the path once against the untouched config
        probe = json.loads(json.dumps(raw))
        set_config_path(probe, parameter, values[0])
    except (ConfigInvalid, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rows = []
    reports = []
    guess = None
    for idx, value in enumerate(values):
        cfg = json.loads(json.dumps(raw))
        set_config_path(cfg, parameter, value)
        cfg["mode"] = "check"
        try:
            scenario = load_scenario(cfg, tol_scale=args.tol_scale)
        except ConfigInvalid as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sub = out_dir / f"value_{idx:03d}"
        report = _run_scenario(scenario, sub, seed=args.seed, guess=guess)
        _write_report(sub, report)
        if report["status"] == "ok":
            solution = report.pop("_solution", None)
            if scenario.boundary is not None and solution is not None:
                guess = (solution.xis[0, 1].copy(), solution.xis[0, 2].copy())
            first = report["biconjugate_times"][0] if report["biconjugate_times"] else ""
            rows.append([value, report["verdict"], first, report["min_sv_ratio"]])
        else:
            rows.append([value, "error", "", ""])
        reports.append({"value": value, "status": report["status"],
                        "dir": sub.name,
                        **({"verdict": report["verdict"]} if "verdict" in report else {}),
                        **({"error": report["error"]} if "error" in report else {})})

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "sweep.csv",
               ["value", "verdict", "first_biconjugate_t", "min_sv_ratio"], rows)
    summary = {
        "tool": {"name": "cubicavoid", "version": __version__},
        "mode": "sweep",
        "parameter": parameter,
        "values": values,
        "runs": reports,
        "status": "ok",
    }
    (out_dir / "report.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="cubicavoid",
                                     description="obstacle-avoiding cubics on Lie "
                                                 "groups with optimality checks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--mode", choices=("ivp", "bvp", "check"), default=None,
                     help="override the config mode")
    run.add_argument("--seed", type=int, default=0,
                     help="seed for randomized restarts (pipeline is deterministic)")
    run.add_argument("--tol-scale", type=float, default=1.0,
                     help="multiply all tolerance defaults")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="sweep a scalar config parameter")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--param", default=None,
                       help="dotted config path, e.g. potential.params.tau")
    sweep.add_argument("--values", default=None, help="comma-separated values")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--tol-scale", type=float, default=1.0)
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
