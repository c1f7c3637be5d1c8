"""Run configuration: JSON parsing, strict validation, defaults.

Unknown keys are rejected with their dotted path; every accepted document
round-trips losslessly through the echoed effective configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .flow import StepPolicy
from .scenarios import (
    PotentialTerm,
    Scenario,
    make_circle,
    make_ellipse,
    make_gradient_graph,
    make_shear_composition,
    make_torus_graph,
)

FORMAT_VERSION = 1

MONITOR_KINDS = ("eta", "lagrangian", "area_decay", "ratio", "density")


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise ValidationError(path, msg)


def _num(v, path, *, positive=False, nonnegative=False) -> float:
    _require(isinstance(v, (int, float)) and not isinstance(v, bool), path, "expected a number")
    v = float(v)
    _require(math.isfinite(v), path, "must be finite")
    if positive:
        _require(v > 0, path, "must be positive")
    if nonnegative:
        _require(v >= 0, path, "must be nonnegative")
    return v


def _int(v, path, *, minimum=None) -> int:
    _require(isinstance(v, int) and not isinstance(v, bool), path, "expected an integer")
    if minimum is not None:
        _require(v >= minimum, path, f"must be >= {minimum}")
    return v


def _check_keys(doc: dict, allowed: dict, path: str):
    for key in doc:
        _require(key in allowed, f"{path}.{key}" if path else key, "unknown key")


SCENARIO_FIELDS = {
    "circle": {"kind", "r0", "N", "res"},
    "ellipse": {"kind", "a", "b", "N", "res"},
    "torus_graph": {"kind", "linear", "amp", "freq", "res", "domain_period", "margin"},
    "shear_composition": {"kind", "eps", "freq", "res", "margin"},
    "gradient_graph": {"kind", "terms", "res", "phase_margin"},
}


def _validate_scenario(doc, path="scenario") -> dict:
    _require(isinstance(doc, dict), path, "expected an object")
    _require("kind" in doc, f"{path}.kind", "missing required key")
    kind = doc["kind"]
    _require(kind in SCENARIO_FIELDS, f"{path}.kind", f"unknown scenario kind {kind!r}")
    _check_keys(doc, {k: None for k in SCENARIO_FIELDS[kind]}, path)
    out = {"kind": kind}
    if kind == "circle":
        out["r0"] = _num(doc.get("r0", 1.0), f"{path}.r0", positive=True)
        out["N"] = _int(doc.get("N", 3), f"{path}.N", minimum=2)
        out["res"] = _int(doc.get("res", 256), f"{path}.res", minimum=64)
    elif kind == "ellipse":
        out["a"] = _num(doc.get("a", 2.0), f"{path}.a", positive=True)
        out["b"] = _num(doc.get("b", 1.0), f"{path}.b", positive=True)
        out["N"] = _int(doc.get("N", 2), f"{path}.N", minimum=2)
        out["res"] = _int(doc.get("res", 256), f"{path}.res", minimum=64)
    elif kind == "torus_graph":
        lin = doc.get("linear", [[1, 0], [0, 1]])
        _require(
            isinstance(lin, list) and len(lin) == 2
            and all(isinstance(r, list) and len(r) == 2 for r in lin),
            f"{path}.linear", "expected a 2x2 matrix")
        out["linear"] = [[_int(v, f"{path}.linear[{i}][{j}]") for j, v in enumerate(r)]
                         for i, r in enumerate(lin)]
        out["amp"] = _num(doc.get("amp", 0.0), f"{path}.amp", nonnegative=True)
        out["freq"] = _freq(doc.get("freq", [1, 1]), f"{path}.freq")
        out["res"] = _int(doc.get("res", 64), f"{path}.res", minimum=8)
        out["domain_period"] = _num(doc.get("domain_period", 1.0), f"{path}.domain_period", positive=True)
        out["margin"] = _num(doc.get("margin", 0.01), f"{path}.margin", nonnegative=True)
    elif kind == "shear_composition":
        eps = doc.get("eps", [0.05, 0.05])
        _require(isinstance(eps, list) and len(eps) == 2, f"{path}.eps", "expected [e1, e2]")
        out["eps"] = [_num(v, f"{path}.eps[{i}]") for i, v in enumerate(eps)]
        out["freq"] = _freq(doc.get("freq", [1, 1]), f"{path}.freq")
        out["res"] = _int(doc.get("res", 64), f"{path}.res", minimum=8)
        out["margin"] = _num(doc.get("margin", 0.01), f"{path}.margin", nonnegative=True)
    else:  # gradient_graph
        terms = doc.get("terms", [{"amp": 0.01}])
        _require(isinstance(terms, list) and terms, f"{path}.terms", "expected a nonempty list")
        out_terms = []
        for i, term in enumerate(terms):
            tp = f"{path}.terms[{i}]"
            _require(isinstance(term, dict), tp, "expected an object")
            _check_keys(term, {"amp": None, "freq": None, "phase": None}, tp)
            amp = _num(term.get("amp", 0.0), f"{tp}.amp")
            freq = _freq(term.get("freq", [1, 1]), f"{tp}.freq")
            phase = term.get("phase", [0.0, 0.0])
            _require(isinstance(phase, list) and len(phase) == 2, f"{tp}.phase", "expected [p1, p2]")
            phase = [_num(v, f"{tp}.phase[{i}]") for i, v in enumerate(phase)]
            out_terms.append({"amp": amp, "freq": freq, "phase": phase})
        out["terms"] = out_terms
        out["res"] = _int(doc.get("res", 64), f"{path}.res", minimum=8)
        out["phase_margin"] = _num(doc.get("phase_margin", 0.0), f"{path}.phase_margin")
    return out


def _freq(v, path) -> list[int]:
    _require(isinstance(v, list) and len(v) == 2, path, "expected [k1, k2]")
    return [_int(k, f"{path}[{i}]", minimum=1) for i, k in enumerate(v)]


POLICY_FIELDS = {
    "safety": dict(positive=True),
    "t_max": dict(positive=True),
    "convergence_tol": dict(),
    "blowup_cap": dict(positive=True),
    "resolution_margin": dict(positive=True),
    "mono_slack_coeff": dict(nonnegative=True),
    "eps_deg": dict(positive=True),
}


def _validate_policy(doc, path="policy") -> StepPolicy:
    _require(isinstance(doc, dict), path, "expected an object")
    _check_keys(doc, POLICY_FIELDS, path)
    kwargs = {}
    for key, constraints in POLICY_FIELDS.items():
        if key in doc:
            kwargs[key] = _num(doc[key], f"{path}.{key}", **constraints)
    try:
        return StepPolicy(**kwargs)
    except ValueError as exc:
        raise ValidationError(path, str(exc)) from exc


def _validate_monitors(doc, path="monitors") -> list[dict]:
    _require(isinstance(doc, list), path, "expected a list")
    out = []
    for i, entry in enumerate(doc):
        ep = f"{path}[{i}]"
        if isinstance(entry, str):
            _require(entry in ("eta", "lagrangian", "area_decay"), ep,
                     f"unknown monitor {entry!r}")
            out.append({"kind": entry})
            continue
        _require(isinstance(entry, dict) and len(entry) == 1, ep,
                 "expected a monitor name or single-key object")
        kind, body = next(iter(entry.items()))
        _require(kind in MONITOR_KINDS, ep, f"unknown monitor {kind!r}")
        _require(isinstance(body, dict), f"{ep}.{kind}", "expected an object")
        if kind == "ratio":
            _check_keys(body, {"k": None}, f"{ep}.ratio")
            _require("k" in body, f"{ep}.ratio.k", "missing required key")
            out.append({"kind": "ratio", "k": _num(body["k"], f"{ep}.ratio.k")})
        elif kind == "density":
            _check_keys(body, {"points": None}, f"{ep}.density")
            pts = body.get("points", [])
            _require(isinstance(pts, list) and pts, f"{ep}.density.points", "expected a nonempty list")
            norm_pts = []
            for j, p in enumerate(pts):
                pp = f"{ep}.density.points[{j}]"
                _require(isinstance(p, dict), pp, "expected an object")
                _check_keys(p, {"x0": None, "t0": None}, pp)
                _require("x0" in p and "t0" in p, pp, "need x0 and t0")
                x0 = p["x0"]
                _require(isinstance(x0, list) and x0, f"{pp}.x0", "expected a coordinate list")
                x0 = [_num(v, f"{pp}.x0[{idx}]") for idx, v in enumerate(x0)]
                t0 = p["t0"]
                if t0 != "t0_est":
                    t0 = _num(t0, f"{pp}.t0")
                norm_pts.append({"x0": x0, "t0": t0})
            out.append({"kind": "density", "points": norm_pts})
        else:
            out.append({"kind": kind})
    return out


TOP_FIELDS = ("scenario", "policy", "monitors", "output_dir", "snapshot_cadence",
              "seed", "format_version", "strict")


@dataclass
class RunConfig:
    """Validated effective configuration of one flow run."""

    scenario: dict
    policy: StepPolicy
    monitors: list[dict] = field(default_factory=list)
    output_dir: str = "run"
    snapshot_cadence: int | None = None
    seed: int = 0
    format_version: int = FORMAT_VERSION
    strict: bool = False

    def monitor(self, kind: str) -> dict | None:
        for entry in self.monitors:
            if entry["kind"] == kind:
                return entry
        return None

    def echo(self) -> dict:
        from dataclasses import asdict

        monitors = []
        for entry in self.monitors:
            kind = entry["kind"]
            if kind == "ratio":
                monitors.append({"ratio": {"k": entry["k"]}})
            elif kind == "density":
                monitors.append({"density": {"points": entry["points"]}})
            else:
                monitors.append(kind)
        return {
            "scenario": self.scenario,
            "policy": asdict(self.policy),
            "monitors": monitors,
            "output_dir": self.output_dir,
            "snapshot_cadence": self.snapshot_cadence,
            "seed": self.seed,
            "format_version": self.format_version,
            "strict": self.strict,
        }


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.msg) from exc
    _require(isinstance(doc, dict), "", "top level must be an object")
    _check_keys(doc, {k: None for k in TOP_FIELDS}, "")
    _require("scenario" in doc, "scenario", "missing required key")
    scenario = _validate_scenario(doc["scenario"])
    policy = _validate_policy(doc.get("policy", {}))
    monitors = _validate_monitors(doc.get("monitors", []))
    output_dir = doc.get("output_dir", "run")
    _require(isinstance(output_dir, str) and output_dir, "output_dir", "expected a nonempty string")
    cadence = doc.get("snapshot_cadence")
    if cadence is not None:
        cadence = _int(cadence, "snapshot_cadence", minimum=1)
    seed = _int(doc.get("seed", 0), "seed", minimum=0)
    fmt = _int(doc.get("format_version", FORMAT_VERSION), "format_version")
    _require(fmt == FORMAT_VERSION, "format_version", f"unsupported version {fmt}")
    strict = doc.get("strict", False)
    _require(isinstance(strict, bool), "strict", "expected a boolean")
    return RunConfig(scenario=scenario, policy=policy, monitors=monitors,
                     output_dir=output_dir, snapshot_cadence=cadence, seed=seed,
                     format_version=fmt, strict=strict)


def build_scenario(scenario_cfg: dict) -> Scenario:
    """Instantiate the configured scenario."""
    kind = scenario_cfg["kind"]
    if kind == "circle":
        return make_circle(scenario_cfg["r0"], scenario_cfg["N"], scenario_cfg["res"])
    if kind == "ellipse":
        return make_ellipse(scenario_cfg["a"], scenario_cfg["b"], scenario_cfg["N"],
                            scenario_cfg["res"])
    if kind == "torus_graph":
        return make_torus_graph(
            np.asarray(scenario_cfg["linear"], dtype=float),
            perturbation=scenario_cfg["amp"],
            frequencies=tuple(scenario_cfg["freq"]),
            resolution=scenario_cfg["res"],
            domain_period=scenario_cfg["domain_period"],
            margin=scenario_cfg["margin"],
        )
    if kind == "shear_composition":
        return make_shear_composition(
            amplitudes=tuple(scenario_cfg["eps"]),
            frequencies=tuple(scenario_cfg["freq"]),
            resolution=scenario_cfg["res"],
            margin=scenario_cfg["margin"],
        )
    terms = [PotentialTerm(t["amp"], tuple(t["freq"]), tuple(t["phase"]))
             for t in scenario_cfg["terms"]]
    return make_gradient_graph(terms, resolution=scenario_cfg["res"],
                               phase_margin=scenario_cfg["phase_margin"])
