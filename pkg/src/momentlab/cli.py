"""Command-line front end.

Every subcommand reads one flat JSON config whose keys map one-to-one onto
its flags (``c_lo`` is ``--c-lo``).  Values are merged as preset, then
``--config`` file, then explicit flags.  Results go to stdout as JSON and to
``--out`` as JSON/CSV artifacts plus ``manifest.json``.  Failures print a
JSON error record to stderr and exit nonzero (2 for config errors, 3 for
errors raised by the numerical modules).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import boolean as bl
from . import distributional as dist
from . import implicants as imp
from .critical import (
    BracketError,
    first_moment_critical,
    first_moment_root,
    ratio_critical,
    second_moment_critical,
)
from .framework import ConstraintError, FirstMomentPoint, ModelSpec, SecondMomentPoint, orbit_values
from .lab import experiments as lab
from .lagrange import BoundaryError, InfeasibleError, MaximizeOptions, SecondMomentLandscape, maximize_t2
from .parallel import resolve_jobs
from .rates import independence_point, t1_log_rate, t2_log_rate

SCHEMA_VERSION = 1
EXIT_SCHEMA = 2
EXIT_DOMAIN = 3


class SchemaError(ValueError):
    def __init__(self, message: str, keys=(), constraint: str | None = None):
        super().__init__(message)
        self.keys = list(keys)
        self.constraint = constraint


# ---------------------------------------------------------------------------
# option tables
# ---------------------------------------------------------------------------

def _json_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not valid JSON: {exc.msg}") from None


def parse_seeds(value) -> list[int]:
    """Seeds as ``"a..b"`` (inclusive), ``"1,2,5"``, an int, or a list of ints."""
    if isinstance(value, bool):
        raise ValueError("seeds must be integers")
    if isinstance(value, int):
        return [value]
    if isinstance(value, list):
        if not all(isinstance(s, int) and not isinstance(s, bool) for s in value):
            raise ValueError("seed list must hold integers")
        return list(value)
    if isinstance(value, str):
        text = value.strip()
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError(f"empty seed range {text!r}")
            return list(range(lo, hi + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    raise ValueError(f"cannot read seeds from {value!r}")


@dataclass(frozen=True)
class Option:
    kind: str  # float, int, str, bool, json, floats, seeds
    help: str
    default: Any = None
    choices: tuple | None = None


def _coerce(key: str, opt: Option, value):
    if value is None:
        return None
    try:
        if opt.kind == "float":
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
        elif opt.kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            out = int(value)
        elif opt.kind == "str":
            if not isinstance(value, str):
                raise TypeError
            out = value
        elif opt.kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            out = value
        elif opt.kind == "floats":
            if not isinstance(value, list):
                raise TypeError
            out = [float(v) for v in value]
        elif opt.kind == "seeds":
            out = parse_seeds(value)
        else:
            out = value
    except (TypeError, ValueError):
        raise SchemaError(f"key {key!r} expects {opt.kind}, got {value!r}", [key]) from None
    if opt.choices is not None and out not in opt.choices:
        raise SchemaError(f"key {key!r} must be one of {list(opt.choices)}, got {out!r}", [key])
    return out


COMMON = {
    "jobs": Option("int", "worker processes (default: MOMENTLAB_JOBS, else all cores)"),
    "seed": Option("int", "base random seed", 0),
    "tolerance": Option("float", "tolerance on the critical ratio (critical) or optimizer tolerance (maximize)"),
}

POINT = {
    "k": Option("int", "clause width", 3),
    "c": Option("float", "clause-to-variable ratio"),
    "delta": Option("json", "value distribution: list in domain order or mapping, e.g. {\"0\": 0.5, \"1\": 0.5}"),
    "rho": Option("json", "sign distribution: list [+, -] or mapping", [0.5, 0.5]),
    "beta": Option("json", "clause-type distribution: list or mapping keyed by type name"),
    "beta_orbits": Option("json", "per-type values for each symmetric orbit, e.g. {\"TFF\": 0.19, ...}"),
    "beta_ttt": Option("float", "boolean shortcut: balanced symmetric beta given by its TTT value"),
    "alpha": Option("float", "implicant shortcut: fraction of variables set to *"),
    "beta_free": Option("floats", "implicant shortcut: per-type [TFF, TTF, T**] values"),
}

SCHEMAS: dict[str, dict[str, Option]] = {
    "rate": {
        "model": Option("str", "clause-type model", "boolean", ("boolean", "implicant", "nae")),
        **POINT,
        "mu": Option("json", "overlap matrix (default: independence point)"),
        "gamma": Option("json", "pair clause-type matrix (default: independence point)"),
        **COMMON,
    },
    "maximize": {
        "model": Option("str", "clause-type model", "boolean", ("boolean", "implicant", "nae")),
        **POINT,
        "grid": Option("int", "grid points for one free overlap variable", 200),
        "grid_nd": Option("int", "grid points per axis for several free overlap variables", 12),
        "max_iter": Option("int", "iteration cap of the inner fitting", 100_000),
        **COMMON,
    },
    "critical": {
        "model": Option("str", "pipeline", "boolean", ("boolean", "implicant", "distributional")),
        "moment": Option("str", "which certificate to locate", "second", ("first", "second")),
        "c_lo": Option("float", "lower end of the bisection bracket"),
        "c_hi": Option("float", "upper end of the bisection bracket"),
        "delta": Option("float", "boolean: fraction of variables set to 1", 0.5),
        "rho": Option("float", "fraction of positive literals", 0.5),
        "beta_ttt": Option("float", "boolean/distributional: TTT value of the balanced beta family"),
        "optimize_beta": Option("bool", "also search the free beta parameter and report local optimality", False),
        "alpha": Option("float", "implicant: fraction of * variables"),
        "beta_free": Option("floats", "implicant: starting [TFF, TTF, T**] values"),
        "truncation": Option("float", "distributional: tail mass dropped from the Poisson profile", 1e-12),
        "grid": Option("int", "grid points for one free overlap variable", 200),
        **COMMON,
    },
    "scan": {
        "kind": Option("str", "scan family", "delta-rho", ("delta-rho", "omega")),
        "rule": Option("str", "delta-rho: beta rule", "balanced_half", bl.BETA_RULES),
        "c": Option("float", "clause-to-variable ratio", 0.1),
        "k": Option("int", "clause width", 3),
        "delta_axis": Option("floats", "delta-rho: [lo, hi, points] of the delta axis", [0.05, 0.95, 21]),
        "rho_axis": Option("floats", "delta-rho: [lo, hi, points] of the rho axis", [0.05, 0.95, 21]),
        "omegas": Option("floats", "omega: list of omega values"),
        "grid": Option("int", "grid points for one free overlap variable", 200),
        "truncation": Option("float", "omega: tail mass dropped from the Poisson profile", 1e-12),
        **COMMON,
    },
    "table1": {
        "alphas": Option("floats", "alpha values (default: all tabulated rows)"),
        "rho": Option("float", "fraction of positive literals", 0.5),
        **COMMON,
    },
    "lab": {
        "experiment": Option("str", "statistic to collect", "hamming", lab.EXPERIMENTS),
        "model": Option("str", "semantics", "sat", ("sat", "nae")),
        "n": Option("int", "variables per formula", 24),
        "c": Option("float", "clause-to-variable ratio"),
        "k": Option("int", "clause width", 3),
        "seeds": Option("seeds", "instance seeds, e.g. 1..50 (default: seed..seed+49)"),
        "ns": Option("floats", "moments: variable counts", [8, 10, 12]),
        "cs": Option("floats", "moments: ratios", [1.0, 2.0, 3.0]),
        "samples": Option("int", "moments: Monte-Carlo formulas per point", 200),
        **COMMON,
    },
}


def resolve_config(command: str, *layers: dict) -> dict:
    """Merge layers (later wins), reject unknown keys and coerce types."""
    schema = SCHEMAS[command]
    merged: dict[str, Any] = {}
    for layer in layers:
        unknown = sorted(set(layer) - set(schema))
        if unknown:
            raise SchemaError(f"unknown keys for {command!r}: {unknown}", unknown)
        merged.update({k: v for k, v in layer.items() if v is not None})
    return {key: _coerce(key, opt, merged.get(key, opt.default)) for key, opt in schema.items()}


def load_document(text: str, source: str, command: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{source} must hold a JSON object")
    bad = sorted(set(doc) - {"schema_version", "command", "description", "config"})
    if bad:
        raise SchemaError(f"{source} has unknown top-level keys {bad}", bad)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{source} has schema_version {doc.get('schema_version')!r}, expected {SCHEMA_VERSION}",
                          ["schema_version"])
    if doc.get("command", command) != command:
        raise SchemaError(f"{source} is for command {doc['command']!r}, not {command!r}", ["command"])
    cfg = doc.get("config", {})
    if not isinstance(cfg, dict):
        raise SchemaError(f"{source}: 'config' must be an object", ["config"])
    return cfg


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("momentlab.presets").iterdir() if p.name.endswith(".json"))


def load_preset(name: str, command: str) -> dict:
    if name not in preset_names():
        raise SchemaError(f"unknown preset {name!r}; available: {preset_names()}", ["preset"])
    text = resources.files("momentlab.presets").joinpath(f"{name}.json").read_text()
    return load_document(text, f"preset {name!r}", command)


# ---------------------------------------------------------------------------
# point construction
# ---------------------------------------------------------------------------

def _required(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise SchemaError(f"missing required keys {missing}", missing)


def build_first_moment(cfg: dict) -> tuple[ModelSpec, FirstMomentPoint]:
    """First-moment point from the generic or shortcut keys; simplex violations are schema errors."""
    model = ModelSpec.of_kind(cfg["model"], cfg["k"])
    given = [k for k in ("beta", "beta_orbits", "beta_ttt", "beta_free") if cfg.get(k) is not None]
    if len(given) != 1:
        raise SchemaError(f"exactly one of beta, beta_orbits, beta_ttt, beta_free is required (got {given})", given)
    try:
        if cfg.get("beta_free") is not None:
            if cfg["model"] != "implicant":
                raise SchemaError("beta_free applies to the implicant model", ["beta_free", "model"])
            _required(cfg, "alpha")
            if len(cfg["beta_free"]) != 3:
                raise SchemaError("beta_free needs three values [TFF, TTF, T**]", ["beta_free"])
            rho = cfg["rho"][0] if isinstance(cfg["rho"], list) else float(cfg["rho"]["+"])
            return model, imp.implicant_fm(cfg["alpha"], cfg["beta_free"], rho)
        if cfg.get("beta_ttt") is not None:
            if cfg["model"] != "boolean" or cfg["k"] != 3:
                raise SchemaError("beta_ttt applies to the boolean model with k = 3", ["beta_ttt", "model"])
            beta = bl.beta_from_ttt(cfg["beta_ttt"])
        elif cfg.get("beta_orbits") is not None:
            if not isinstance(cfg["beta_orbits"], dict):
                raise SchemaError("beta_orbits must be an object", ["beta_orbits"])
            beta = bl.beta_from_orbits(model, cfg["beta_orbits"])
        else:
            beta = cfg["beta"]
        delta = cfg.get("delta")
        if delta is None:
            delta = {"0": 0.5, "1": 0.5}
        return model, FirstMomentPoint.create(model, delta, cfg["rho"], beta)
    except ConstraintError as exc:
        raise SchemaError(str(exc), _constraint_keys(str(exc)), constraint=str(exc)) from None


def _constraint_keys(message: str) -> list[str]:
    return [k for k in ("delta", "rho", "beta", "mu", "gamma") if message.startswith(k)]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_rate(cfg: dict, out: Path) -> dict:
    _required(cfg, "c")
    model, fm = build_first_moment(cfg)
    if (cfg.get("mu") is None) != (cfg.get("gamma") is None):
        raise SchemaError("mu and gamma must be given together", ["mu", "gamma"])
    if cfg.get("mu") is None:
        sm = independence_point(fm)
        where = "independence"
    else:
        try:
            sm = SecondMomentPoint.create(model, cfg["mu"], cfg["gamma"], fm)
        except ConstraintError as exc:
            raise SchemaError(str(exc), _constraint_keys(str(exc)), constraint=str(exc)) from None
        where = "given"
    t1 = t1_log_rate(model, fm, cfg["c"])
    t2 = t2_log_rate(model, sm, fm.rho, cfg["c"])
    result = {"model": cfg["model"], "c": cfg["c"], "log_t1": t1, "log_t2": t2, "gap": t2 - 2 * t1,
              "second_moment_point": where, "first_moment": fm.to_dict(model)}
    _write_json(out / "rate.json", result)
    return result


def _options(cfg: dict) -> MaximizeOptions:
    kw = {"grid": cfg["grid"], "jobs": resolve_jobs(cfg["jobs"])}
    if cfg.get("grid_nd") is not None:
        kw["grid_nd"] = cfg["grid_nd"]
    if cfg.get("max_iter") is not None:
        kw["max_iter"] = cfg["max_iter"]
    if cfg.get("tolerance") is not None:
        kw["tol"] = cfg["tolerance"]
    return MaximizeOptions(**kw)


def cmd_maximize(cfg: dict, out: Path) -> dict:
    _required(cfg, "c")
    model, fm = build_first_moment(cfg)
    rep = maximize_t2(model, fm, cfg["c"], _options(cfg))
    result = {"model": cfg["model"], "c": cfg["c"], "log_t1": t1_log_rate(model, fm, cfg["c"]),
              **rep.to_dict(model)}
    _write_json(out / "maximize.json", result)
    return result


def _bracket(cfg: dict, lo: float, hi: float) -> tuple[float, float]:
    return (lo if cfg["c_lo"] is None else cfg["c_lo"], hi if cfg["c_hi"] is None else cfg["c_hi"])


def cmd_critical(cfg: dict, out: Path) -> dict:
    tol_c = cfg["tolerance"] if cfg["tolerance"] is not None else 1e-3
    model_name, moment = cfg["model"], cfg["moment"]
    if moment == "first" and model_name != "boolean":
        raise SchemaError("the first-moment search is implemented for the boolean model", ["moment", "model"])
    if model_name == "boolean":
        result = _critical_boolean(cfg, moment, tol_c)
    elif model_name == "implicant":
        result = _critical_implicant(cfg, tol_c)
    else:
        result = _critical_distributional(cfg, tol_c)
    result["settings"] = cfg
    _write_json(out / "critical.json", result)
    return result


def _critical_boolean(cfg: dict, moment: str, tol_c: float) -> dict:
    model = ModelSpec.boolean()
    delta, rho = cfg["delta"], cfg["rho"]
    if moment == "first":
        b = cfg["beta_ttt"] if cfg["beta_ttt"] is not None else bl.first_moment_beta_ttt()
        fm = FirstMomentPoint.create(model, [1 - delta, delta], [rho, 1 - rho], bl.beta_from_ttt(b))
        lo, hi = _bracket(cfg, 3.5, 4.0)
        res = first_moment_critical(model, fm, lo, hi, tol_c)
        return {"model": "boolean", "moment": "first", "c_star": res.c_star,
                "c_star_closed_form": first_moment_root(model, fm), "beta_star": orbit_values(model, fm),
                "bisection": res.to_dict()}
    b = cfg["beta_ttt"] if cfg["beta_ttt"] is not None else bl.REFERENCE_BETA_TTT
    search = None
    if cfg["optimize_beta"]:
        search = bl.optimize_beta_ttt(start=b)
    fm = FirstMomentPoint.create(model, [1 - delta, delta], [rho, 1 - rho], bl.beta_from_ttt(b))
    land = SecondMomentLandscape(model, fm)
    lo, hi = _bracket(cfg, 2.6, 3.1)
    res = second_moment_critical(model, fm, lo, hi, tol_c, options=_options(cfg), landscape=land)
    ratio = ratio_critical(land, grid=cfg["grid"])
    out = {"model": "boolean", "moment": "second", "c_star": res.c_star, "beta_star": orbit_values(model, fm),
           "ratio_route_c_star": ratio.c_star, "bisection": res.to_dict()}
    if search is not None:
        out["beta_search"] = {"beta_ttt": search.beta_ttt, "c_star": search.c_star,
                              "neighbours": [list(p) for p in search.neighbours],
                              "is_local_optimum": search.is_local_optimum,
                              "start_within_search_tolerance": abs(search.beta_ttt - b) <= 2e-3}
    return out


def _critical_implicant(cfg: dict, tol_c: float) -> dict:
    _required(cfg, "alpha")
    found = imp.critical_ratio_implicants(cfg["alpha"], start=cfg["beta_free"], rho=cfg["rho"])
    model = ModelSpec.implicant()
    fm = imp.implicant_fm(cfg["alpha"], found.free, cfg["rho"])
    lo, hi = _bracket(cfg, found.c_star - 0.05, found.c_star + 0.05)
    res = second_moment_critical(model, fm, lo, hi, tol_c, options=_options(cfg))
    return {"model": "implicant", "moment": "second", "alpha": cfg["alpha"], "c_star": res.c_star,
            "ratio_route_c_star": found.c_star, "beta_star": dict(zip(imp.FREE_NAMES, found.free)),
            "bisection": res.to_dict()}


def _critical_distributional(cfg: dict, tol_c: float) -> dict:
    lo, hi = _bracket(cfg, 2.7, 2.95)
    res = dist.distributional_critical(lo, hi, tol_c, cfg["beta_ttt"], truncation=cfg["truncation"])
    return {"model": "distributional", "moment": "second", "c_star": res.c_star,
            "beta_star": {"TTT": res.extra["beta_ttt"]}, "bisection": res.to_dict()}


def _axis(spec: list[float], key: str) -> np.ndarray:
    if len(spec) != 3 or not spec[2].is_integer() or spec[2] < 2 or not 0 < spec[0] < spec[1] < 1:
        raise SchemaError(f"{key} must be [lo, hi, points] with 0 < lo < hi < 1 and points >= 2", [key])
    return bl.scan_axis(spec[0], spec[1], int(spec[2]))


def cmd_scan(cfg: dict, out: Path) -> dict:
    jobs = resolve_jobs(cfg["jobs"])
    if cfg["kind"] == "omega":
        _required(cfg, "omegas")
        if any(o <= 0 for o in cfg["omegas"]):
            raise SchemaError("omega values must be positive", ["omegas"])
        profile = dist.poisson_profile(cfg["k"], cfg["c"], cfg["truncation"])
        rows = dist.omega_scan(cfg["omegas"], cfg["c"], profile, cfg["k"], jobs)
        dist.write_omega_csv(rows, out / "omega_scan.csv")
        nonpos = [r.omega for r in rows if r.gap <= 1e-9]
        result = {"kind": "omega", "c": cfg["c"], "points": len(rows), "nonpositive_at": nonpos,
                  "csv": "omega_scan.csv"}
    else:
        deltas, rhos = _axis(cfg["delta_axis"], "delta_axis"), _axis(cfg["rho_axis"], "rho_axis")
        cells = bl.scan_delta_rho(cfg["rule"], cfg["c"], deltas, rhos, cfg["k"],
                                  MaximizeOptions(grid=cfg["grid"]), jobs)
        name = f"scan_{cfg['rule']}.csv"
        bl.write_scan_csv(cells, out / name)
        result = {"kind": "delta-rho", "rule": cfg["rule"], "c": cfg["c"], "cells": len(cells),
                  "nonpositive_deltas": sorted({x.delta for x in cells if x.status == "nonpositive"}),
                  "infeasible": sum(x.status == "infeasible" for x in cells), "csv": name}
    _write_json(out / "scan.json", result)
    return result


def cmd_table1(cfg: dict, out: Path) -> dict:
    results = imp.table1(cfg["alphas"], resolve_jobs(cfg["jobs"]), rho=cfg["rho"])
    imp.write_table1_csv(results, out / "table1.csv")
    result = {"rows": [r.row() for r in results], "csv": "table1.csv"}
    _write_json(out / "table1.json", result)
    return result


def cmd_lab(cfg: dict, out: Path) -> dict:
    exp, jobs = cfg["experiment"], resolve_jobs(cfg["jobs"])
    if exp == "moments":
        ns = [int(x) for x in cfg["ns"]]
        checks = lab.run_moments(ns, cfg["cs"], cfg["k"], cfg["samples"], cfg["seed"], out_dir=out)
        return {"experiment": exp, "all_within_band": all(r.first_ok and r.second_ok for r in checks),
                "csv": "moments.csv"}
    _required(cfg, "c")
    seeds = cfg["seeds"] if cfg["seeds"] is not None else list(range(cfg["seed"], cfg["seed"] + 50))
    args = (cfg["n"], cfg["c"], seeds)
    if exp in ("true_surface", "delta_pq") and cfg["model"] != "sat":
        raise SchemaError(f"experiment {exp!r} uses SAT semantics", ["model", "experiment"])
    if exp == "hamming":
        summary = lab.run_hamming(*args, model=cfg["model"], k=cfg["k"], jobs=jobs, out_dir=out)
    elif exp == "surface":
        summary = lab.run_surface(*args, model=cfg["model"], k=cfg["k"], jobs=jobs, out_dir=out)
    elif exp == "unisat":
        summary = lab.run_unisat(*args, model=cfg["model"], k=cfg["k"], jobs=jobs, out_dir=out)
    elif exp == "true_surface":
        summary = lab.run_true_surface(*args, k=cfg["k"], jobs=jobs, out_dir=out)
    else:
        summary, _ = lab.run_delta_pq(*args, k=cfg["k"], jobs=jobs, out_dir=out)
    return {"experiment": exp, **summary, "csv": f"{exp}.csv"}


COMMANDS: dict[str, Callable[[dict, Path], dict]] = {
    "rate": cmd_rate,
    "maximize": cmd_maximize,
    "critical": cmd_critical,
    "scan": cmd_scan,
    "table1": cmd_table1,
    "lab": cmd_lab,
}

HELP = {
    "rate": "evaluate log T1, log T2 and their gap at a point",
    "maximize": "maximize log T2 over overlaps at fixed first-moment settings",
    "critical": "locate a critical clause ratio by bisection",
    "scan": "delta-rho or omega scans of the maximized gap",
    "table1": "implicant critical ratios over a sweep of alpha",
    "lab": "solution-pair statistics on small random formulas",
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return _finite(x.item())
    if isinstance(x, np.ndarray):
        return _finite(x.tolist())
    return x


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(_finite(doc), indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="momentlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--preset", help=f"bundled config ({', '.join(preset_names())})")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default="momentlab-out", help="artifact directory (default: momentlab-out)")
        for key, opt in schema.items():
            kw: dict[str, Any] = {"dest": f"opt_{key}", "default": None}
            if opt.kind == "bool":
                kw["action"] = argparse.BooleanOptionalAction
            elif opt.kind in ("json", "floats"):
                kw["type"] = _json_value
                kw["metavar"] = "JSON"
            elif opt.kind == "seeds":
                kw["metavar"] = "A..B"
            else:
                kw["type"] = {"float": float, "int": int, "str": str}[opt.kind]
            if opt.choices:
                kw["choices"] = opt.choices
            default = "" if opt.default is None else f" (default: {json.dumps(opt.default)})"
            p.add_argument("--" + key.replace("_", "-"), help=opt.help + default, **kw)
    return parser


def _error(kind: str, message: str, code: int, **extra) -> int:
    record = {"status": "error", "kind": kind, "message": message, **extra}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    flags = {k[4:]: v for k, v in vars(args).items() if k.startswith("opt_") and v is not None}
    try:
        layers = []
        if args.preset:
            layers.append(load_preset(args.preset, command))
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise SchemaError(f"cannot read config: {exc}", ["config"]) from None
            layers.append(load_document(text, f"config {args.config!r}", command))
        layers.append(flags)
        cfg = resolve_config(command, *layers)
        if cfg["jobs"] is not None and cfg["jobs"] < 1:
            raise SchemaError("jobs must be positive", ["jobs"])
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[command](cfg, out)
    except SchemaError as exc:
        extra = {"keys": exc.keys}
        if exc.constraint:
            extra["constraint"] = exc.constraint
        return _error("schema", str(exc), EXIT_SCHEMA, **extra)
    except (ConstraintError, InfeasibleError, BoundaryError, BracketError, ValueError) as exc:
        return _error("domain", str(exc), EXIT_DOMAIN, error=type(exc).__name__)
    manifest = {"command": command, "schema_version": SCHEMA_VERSION, "preset": args.preset,
                "config": cfg, "version": lab.version_string()}
    _write_json(out / "manifest.json", manifest)
    print(json.dumps(_finite({"status": "ok", "command": command, "result": result}), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
