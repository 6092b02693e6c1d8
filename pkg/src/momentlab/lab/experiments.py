"""Desk-scale experiments over many random instances.

Every runner returns a summary dict and, when ``out_dir`` is given, writes a
CSV with the raw statistics plus a JSON manifest of the parameters.  Runs
are deterministic: instance i uses seed ``seeds[i]`` and aggregation
follows seed order, whatever the worker count.
"""

from __future__ import annotations

import csv
import json
import math
import subprocess
from functools import partial
from pathlib import Path

import numpy as np

from ..parallel import parallel_map
from .enumerate import SolutionSample, enumerate_solutions
from .formula import gen_uniform
from .moments import moment_check
from .stats import (
    delta_pq_statistics,
    hamming_similarity_histogram,
    pair_ratios,
    surface_independence_ratio,
    true_surface,
    unisat_independence_ratio,
)

EXPERIMENTS = ("hamming", "surface", "unisat", "true_surface", "delta_pq", "moments")

# Thresholds frozen after one pilot run (n = 24, seeds 0..49).
PILOT_THRESHOLDS = {
    "hamming_nae": (0.45, 0.55),
    "hamming_sat_min": 0.55,
    "surface_nae": (0.9, 1.1),
    "surface_sat_min": 1.1,
    "unisat_nae_min": 1.15,
    "unisat_sat_max": 0.9,
    "delta_pq_c2_max": 0.03,
    "true_surface": (0.54, 0.58),
}
MAX_PAIRS = 2000


def version_string() -> str:
    from .. import __version__

    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True,
                             timeout=5, cwd=Path(__file__).parent)
        desc = out.stdout.strip() if out.returncode == 0 else ""
    except (OSError, subprocess.SubprocessError):
        desc = ""
    return f"{__version__}+{desc}" if desc else __version__


def write_manifest(out_dir: Path, name: str, params: dict, summary: dict) -> Path:
    path = out_dir / f"{name}.manifest.json"
    doc = {"experiment": name, "version": version_string(), "parameters": params, "summary": summary}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x)}")


def _sample(n: int, c: float, k: int, model: str, seed: int) -> SolutionSample:
    return enumerate_solutions(gen_uniform(n, c, k, model, seed))


def samples_for(n: int, c: float, seeds, k: int = 3, model: str = "sat", jobs: int = 1) -> list[SolutionSample]:
    return parallel_map(partial(_sample, n, c, k, model), list(seeds), jobs)


def run_hamming(n: int, c: float, seeds, model: str = "sat", k: int = 3, jobs: int = 1,
                out_dir=None) -> dict:
    samples = samples_for(n, c, seeds, k, model, jobs)
    edges = (np.arange(n + 2) - 0.5) / n
    counts = np.zeros(n + 1, dtype=np.int64)
    means = []
    for s in samples:
        if s.count < 2:
            continue
        h = hamming_similarity_histogram(s, bins=edges)
        counts += h.counts
        means.append(h.mean)
    pairs = int(counts.sum())
    summary = {"instances": len(samples), "used": len(means), "pairs": pairs,
               "mean": float(np.mean(means)) if means else math.nan}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "hamming.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["similarity", "count"])
            for j, cnt in enumerate(counts):
                w.writerow([repr(j / n), int(cnt)])
        write_manifest(out, "hamming", {"n": n, "c": c, "k": k, "model": model, "seeds": list(seeds)}, summary)
    return summary


def _ratio_run(name: str, ratio, n: int, c: float, seeds, model: str, k: int, jobs: int, out_dir) -> dict:
    samples = samples_for(n, c, seeds, k, model, jobs)
    rows = []
    means, medians = [], []
    undefined = 0
    for seed, s in zip(seeds, samples):
        if s.count < 2:
            continue
        r = pair_ratios(s, ratio, MAX_PAIRS, seed)
        undefined += int(np.isnan(r).sum())
        r = r[~np.isnan(r)]
        if len(r) == 0:
            continue
        means.append(float(r.mean()))
        medians.append(float(np.median(r)))
        rows.append((seed, len(r), means[-1], medians[-1]))
    summary = {"instances": len(samples), "used": len(rows), "undefined_pairs": undefined,
               "mean": float(np.mean(means)) if means else math.nan,
               "median": float(np.median(medians)) if medians else math.nan}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "pairs", "mean_ratio", "median_ratio"])
            for row in rows:
                w.writerow([row[0], row[1], repr(row[2]), repr(row[3])])
        write_manifest(out, name, {"n": n, "c": c, "k": k, "model": model, "seeds": list(seeds),
                                   "max_pairs": MAX_PAIRS}, summary)
    return summary


def run_surface(n: int, c: float, seeds, model: str = "sat", k: int = 3, jobs: int = 1, out_dir=None) -> dict:
    return _ratio_run("surface", surface_independence_ratio, n, c, seeds, model, k, jobs, out_dir)


def run_unisat(n: int, c: float, seeds, model: str = "sat", k: int = 3, jobs: int = 1, out_dir=None) -> dict:
    return _ratio_run("unisat", unisat_independence_ratio, n, c, seeds, model, k, jobs, out_dir)


def run_true_surface(n: int, c: float, seeds, k: int = 3, jobs: int = 1, out_dir=None) -> dict:
    """Mean true surface per satisfiable instance, then averaged over instances."""
    samples = samples_for(n, c, seeds, k, "sat", jobs)
    rows = []
    for seed, s in zip(seeds, samples):
        if s.count == 0:
            continue
        rows.append((seed, s.count, float(np.mean([true_surface(s.formula, x) for x in s.solutions]))))
    summary = {"instances": len(samples), "satisfiable": len(rows),
               "mean": float(np.mean([r[2] for r in rows])) if rows else math.nan}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "true_surface.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "solutions", "mean_true_surface"])
            for row in rows:
                w.writerow([row[0], row[1], repr(row[2])])
        write_manifest(out, "true_surface", {"n": n, "c": c, "k": k, "seeds": list(seeds)}, summary)
    return summary


def run_delta_pq(n: int, c: float, seeds, k: int = 3, jobs: int = 1, out_dir=None) -> dict:
    samples = [s for s in samples_for(n, c, seeds, k, "sat", jobs) if s.count >= 2]
    cells = delta_pq_statistics(samples)
    weights = np.array([x.variables for x in cells], dtype=float)
    dev = float(np.average([abs(x.u - x.d_d) for x in cells], weights=weights)) if cells else math.nan
    summary = {"instances": len(list(seeds)), "used": len(samples), "cells": len(cells),
               "mean_abs_deviation": dev}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "delta_pq.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["T", "U", "variables", "d", "d_d", "u"])
            for x in cells:
                w.writerow([x.total, x.positive, x.variables, repr(x.d), repr(x.d_d), repr(x.u)])
        write_manifest(out, "delta_pq", {"n": n, "c": c, "k": k, "seeds": list(seeds)}, summary)
    return summary, cells


def run_moments(ns=(8, 10, 12), cs=(1.0, 2.0, 3.0), k: int = 3, samples: int = 200, seed: int = 0,
                out_dir=None) -> list:
    checks = [moment_check(n, c, k, samples, seed) for n in ns for c in cs]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "moments.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "m", "c", "exact_first", "rate_first", "exact_second", "rate_second", "band",
                        "mc_first", "mc_second"])
            for r in checks:
                w.writerow([r.n, r.m, repr(r.c), repr(r.exact_first), repr(r.rate_first), repr(r.exact_second),
                            repr(r.rate_second), repr(r.band), repr(r.mc_first), repr(r.mc_second)])
        write_manifest(out, "moments", {"ns": list(ns), "cs": list(cs), "k": k, "samples": samples, "seed": seed},
                       {"all_within_band": all(r.first_ok and r.second_ok for r in checks)})
    return checks
