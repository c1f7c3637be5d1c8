"""Command-line orchestration: run, analyze, report.

    mcflab run <config.json>            integrate a configured scenario
    mcflab analyze <dir> <analysis.json>   density / blow-up analysis of a run
    mcflab report <dir>                 print a human-readable run summary

Relative output directories resolve against $MCF_OUTPUT_DIR (default: cwd).
Exit codes: 0 success (audit flags print warnings), 1 module error,
2 audit flags under strict mode.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .calibration import eta_monitor, lagrangian_residuals, ratio_monitor
from .config import FORMAT_VERSION, RunConfig, build_scenario, parse_config
from .density import SpacetimePoint, monotonicity_audit, parabolic_rescale, regularity_report
from .errors import InsufficientData, McflabError, ValidationError
from .flow import FlowTrajectory, Termination, run_flow
from .snapio import (
    read_json,
    read_snapshot,
    snapshot_to_immersion,
    write_json,
    write_series_csv,
    write_snapshot,
)

FIXED_COLUMNS = ("t", "area", "sup_A2", "sup_H",
                 "min_eta1", "min_eta2", "min_mu", "min_costheta")


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _flags_json(flags):
    return [[f.t_prev, f.t_next, f.delta] for f in flags]


def resolve_output_dir(output_dir: str, base_dir: str | None = None) -> Path:
    p = Path(output_dir)
    if p.is_absolute():
        return p
    base = base_dir if base_dir is not None else os.environ.get("MCF_OUTPUT_DIR", ".")
    return Path(base) / p


def cmd_run(config: RunConfig, base_dir: str | None = None) -> int:
    """Run the configured scenario and write the trajectory artifacts."""
    scenario = build_scenario(config.scenario)
    imm = scenario.immersion
    traj = run_flow(imm, config.policy, snapshot_cadence=config.snapshot_cadence)
    out = resolve_output_dir(config.output_dir, base_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "snapshots").mkdir(exist_ok=True)

    ticks = len(traj.times)
    nan = np.full(ticks, np.nan)
    columns = {name: nan.copy() for name in FIXED_COLUMNS}
    columns["t"] = traj.times
    columns["area"] = traj.series["area"]
    columns["sup_A2"] = traj.series["sup_A2"]
    columns["sup_H"] = traj.series["sup_H"]

    audits: dict = {}
    warn_count = 0

    if config.monitor("eta"):
        if imm.graph_dims is None:
            raise ValidationError("monitors.eta", "scenario is not graphical")
        eta = eta_monitor(traj)
        columns["min_eta1"] = eta.min_eta1.values
        columns["min_eta2"] = eta.min_eta2.values
        columns["min_mu"] = eta.min_mu.values
        audits["eta"] = {
            "slack": eta.slack,
            "flag_count": eta.flag_count,
            "flags": {k: _flags_json(v) for k, v in eta.flags.items()},
        }
        warn_count += eta.flag_count

    residual_columns: list[tuple[str, np.ndarray]] = []
    if config.monitor("area_decay"):
        residual_columns.append(("resid_area_decay", traj.series["resid_area_decay"]))

    if config.monitor("lagrangian"):
        if not imm.lagrangian:
            raise ValidationError("monitors.lagrangian", "scenario is not a gradient graph")
        lag = lagrangian_residuals(traj)
        columns["min_costheta"] = lag.min_cos.values
        pad = lambda s: np.concatenate(([np.nan], s.values, [np.nan]))
        residual_columns.append(("resid_theta_heat", pad(lag.theta_heat)))
        residual_columns.append(("resid_h_jgrad", lag.h_vs_jgrad.values))
        residual_columns.append(("resid_cos_evolution", pad(lag.cos_evolution)))
        audits["lagrangian"] = {
            "slack": lag.slack,
            "flag_count": len(lag.flags),
            "flags": _flags_json(lag.flags),
            "max_symmetry_defect": float(np.max(lag.symmetry_defect.values)),
        }
        warn_count += len(lag.flags)

    ratio_cfg = config.monitor("ratio")
    if ratio_cfg:
        if imm.graph_dims is None:
            raise ValidationError("monitors.ratio", "scenario is not graphical")
        rat = ratio_monitor(traj, ratio_cfg["k"])
        residual_columns.append(("ratio_max", rat.ratio_max.values))
        audits["ratio"] = {
            "k": rat.k, "bounded": rat.bounded,
            "tail_start": rat.tail_start, "tail_sup": rat.tail_sup,
        }
        if not rat.bounded:
            warn_count += 1

    density_cfg = config.monitor("density")
    if density_cfg:
        audits["density"] = []
        for point in density_cfg["points"]:
            t0 = point["t0"]
            if t0 == "t0_est":
                if traj.singularity is None or not math.isfinite(traj.singularity.t0_est):
                    raise InsufficientData("t0_est requested but no blow-up estimate available")
                t0 = traj.singularity.t0_est
            pt = SpacetimePoint(np.asarray(point["x0"], dtype=float), float(t0))
            dens = monotonicity_audit(traj, pt)
            audits["density"].append({
                "x0": point["x0"], "t0": float(t0),
                "slack": dens.slack,
                "flag_count": len(dens.violations),
                "flags": _flags_json(dens.violations),
                "first": float(dens.values[0]), "last": float(dens.values[-1]),
            })
            warn_count += len(dens.violations)

    ordered = [(name, columns[name]) for name in FIXED_COLUMNS] + residual_columns
    write_series_csv(out / "series.csv", ordered)
    for k, snap in enumerate(traj.snapshots):
        write_snapshot(out / "snapshots" / f"snap_{k:06d}.mcfs", snap)
    write_json(out / "config.echo.json", config.echo())

    sing = None
    if traj.singularity is not None:
        sing = {
            "kind": traj.singularity.kind,
            "t0_est": _finite_or_none(traj.singularity.t0_est),
            "C_est": _finite_or_none(traj.singularity.C_est),
            "fit_residual": _finite_or_none(traj.singularity.fit_residual),
            "fit_window": list(traj.singularity.fit_window),
        }
    report = {
        "format_version": FORMAT_VERSION,
        "termination": {
            "kind": traj.termination.kind,
            "t0_est": _finite_or_none(traj.termination.t0_est)
            if traj.termination.t0_est is not None else None,
            "message": traj.termination.message,
        },
        "singularity": sing,
        "audits": audits,
        "terminal": {
            "t": float(traj.times[-1]),
            "area": float(traj.series["area"][-1]),
            "sup_A2": float(traj.series["sup_A2"][-1]),
            "sup_H": float(traj.series["sup_H"][-1]),
        },
        "meta": {
            "steps": traj.meta["steps"], "cadence": traj.meta["cadence"],
            "dt_base": traj.meta["dt_base"], "dt_max": traj.meta["dt_max"],
            "h_max": traj.meta["h_max"],
            "mono_slack_coeff": traj.meta["mono_slack_coeff"],
        },
    }
    write_json(out / "report.json", report)

    if warn_count:
        print(f"warning: {warn_count} audit flag(s); see report.json", file=sys.stderr)
        if config.strict:
            return 2
    return 0


ANALYSIS_FIELDS = ("point", "lambdas", "epsilon", "max_gap")


def _load_analysis(path) -> dict:
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise ValidationError("", "analysis document must be an object")
    for key in doc:
        if key not in ANALYSIS_FIELDS:
            raise ValidationError(key, "unknown key")
    if "point" not in doc or not isinstance(doc["point"], dict):
        raise ValidationError("point", "missing required object")
    pt = doc["point"]
    for key in pt:
        if key not in ("x0", "t0"):
            raise ValidationError(f"point.{key}", "unknown key")
    if "x0" not in pt or "t0" not in pt:
        raise ValidationError("point", "need x0 and t0")
    lams = doc.get("lambdas", [])
    if not isinstance(lams, list) or any(not isinstance(v, (int, float)) or v < 1 for v in lams):
        raise ValidationError("lambdas", "expected a list of factors >= 1")
    eps = doc.get("epsilon", 0.05)
    if not isinstance(eps, (int, float)) or eps <= 0:
        raise ValidationError("epsilon", "expected a positive number")
    gap = doc.get("max_gap")
    if gap is not None and (not isinstance(gap, (int, float)) or gap <= 0):
        raise ValidationError("max_gap", "expected a positive number")
    return {"point": pt, "lambdas": [float(v) for v in lams],
            "epsilon": float(eps), "max_gap": gap}


def load_trajectory(traj_dir) -> tuple[FlowTrajectory, RunConfig, dict]:
    """Rebuild a read-only trajectory from a run directory."""
    traj_dir = Path(traj_dir)
    cfg = parse_config((traj_dir / "config.echo.json").read_text(encoding="utf-8"))
    report = read_json(traj_dir / "report.json")
    if report.get("format_version") != FORMAT_VERSION:
        from .errors import VersionMismatch

        raise VersionMismatch(f"report format_version {report.get('format_version')}")
    template = build_scenario(cfg.scenario).immersion
    snaps = []
    for path in sorted((traj_dir / "snapshots").glob("snap_*.mcfs")):
        snaps.append(snapshot_to_immersion(read_snapshot(path), template))
    if not snaps:
        raise InsufficientData(f"no snapshots in {traj_dir}")
    times = np.array([s.t for s in snaps])
    term = report["termination"]
    traj = FlowTrajectory(
        times=times, snapshots=snaps, series={}, step_series={},
        termination=Termination(term["kind"], term.get("t0_est"), term.get("message", "")),
        singularity=None,
        meta=report["meta"],
    )
    return traj, cfg, report


def cmd_analyze(traj_dir, analysis_path) -> int:
    """Density, rescaling, and regularity analysis of a recorded run."""
    spec = _load_analysis(analysis_path)
    traj, _cfg, report = load_trajectory(traj_dir)
    traj_dir = Path(traj_dir)

    t0 = spec["point"]["t0"]
    if t0 == "t0_est":
        sing = report.get("singularity")
        if not sing or sing.get("t0_est") is None:
            raise InsufficientData("t0_est requested but the run reports no blow-up estimate")
        t0 = sing["t0_est"]
    pt = SpacetimePoint(np.asarray(spec["point"]["x0"], dtype=float), float(t0))

    dens = monotonicity_audit(traj, pt)
    write_series_csv(traj_dir / "density.csv", [("t", dens.times), ("density", dens.values)])
    rep = regularity_report(dens, epsilon=spec["epsilon"], max_gap=spec["max_gap"])
    write_json(traj_dir / "regularity_report.json", {
        "verdict": rep.verdict,
        "last_density": rep.last_density,
        "extrapolated_density": rep.extrapolated_density,
        "epsilon": rep.epsilon,
        "gap": rep.gap,
        "point": {"x0": spec["point"]["x0"], "t0": float(t0)},
        "slack": dens.slack,
        "flag_count": len(dens.violations),
        "flags": _flags_json(dens.violations),
    })
    for lam in spec["lambdas"]:
        sub = traj_dir / f"rescaled_lam{lam:g}"
        sub.mkdir(exist_ok=True)
        for k, (s, imm) in enumerate(parabolic_rescale(traj, pt, lam)):
            write_snapshot(sub / f"snap_{k:06d}.mcfs", imm)
    if dens.violations:
        print(f"warning: {len(dens.violations)} density audit flag(s)", file=sys.stderr)
    return 0


def cmd_report(traj_dir) -> int:
    """Print a run summary."""
    traj_dir = Path(traj_dir)
    report = read_json(traj_dir / "report.json")
    term = report["termination"]
    print(f"termination: {term['kind']}"
          + (f" (t0_est = {term['t0_est']:.6g})" if term.get("t0_est") is not None else ""))
    sing = report.get("singularity")
    if sing:
        c = sing.get("C_est")
        print(f"singularity: {sing['kind']}"
              + (f", C_est = {c:.6g}" if c is not None else "")
              + (f", fit residual = {sing['fit_residual']:.3g}"
                 if sing.get("fit_residual") is not None else ""))
    terminal = report["terminal"]
    print(f"terminal: t = {terminal['t']:.6g}, area = {terminal['area']:.6g}, "
          f"sup|A|^2 = {terminal['sup_A2']:.3g}, sup|H| = {terminal['sup_H']:.3g}")
    for name, audit in report.get("audits", {}).items():
        if isinstance(audit, list):
            for entry in audit:
                print(f"audit {name} @ {entry['x0']}: {entry['flag_count']} flag(s)")
        elif "flag_count" in audit:
            print(f"audit {name}: {audit['flag_count']} flag(s)")
        elif name == "ratio":
            print(f"audit ratio: bounded = {audit['bounded']} (tail sup {audit['tail_sup']:.4g})")
    reg = traj_dir / "regularity_report.json"
    if reg.exists():
        rr = read_json(reg)
        print(f"regularity: {rr['verdict']} (density -> {rr['extrapolated_density']:.6g}, "
              f"epsilon = {rr['epsilon']})")
    print(f"steps: {report['meta']['steps']}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mcflab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a configured scenario")
    p_run.add_argument("config", help="path to a JSON run configuration")
    p_an = sub.add_parser("analyze", help="analyze a recorded trajectory")
    p_an.add_argument("dir", help="trajectory directory written by `run`")
    p_an.add_argument("analysis", help="path to a JSON analysis specification")
    p_rep = sub.add_parser("report", help="summarize a recorded trajectory")
    p_rep.add_argument("dir", help="trajectory directory written by `run`")
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            text = Path(args.config).read_text(encoding="utf-8")
            return cmd_run(parse_config(text))
        if args.command == "analyze":
            return cmd_analyze(args.dir, args.analysis)
        return cmd_report(args.dir)
    except McflabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
