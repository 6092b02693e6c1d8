"""Statistics of solution sets: similarities, surfaces and clause types."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .enumerate import SolutionSample
from .formula import Formula, literal_values


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    pairs: int
    mean: float

    @property
    def empty(self) -> bool:
        return self.pairs == 0


def _agreements(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a.astype(np.int32)
    b = b.astype(np.int32)
    return a @ b.T + (1 - a) @ (1 - b).T


def hamming_similarity_histogram(sample: SolutionSample, bins=None, chunk: int = 2048) -> Histogram:
    """Similarity of all unordered pairs of distinct solutions.

    Default bins are centred on the n + 1 attainable values j / n.
    """
    n = sample.formula.n
    edges = (np.arange(n + 2) - 0.5) / n if bins is None else (
        np.linspace(0.0, 1.0, bins + 1) if np.isscalar(bins) else np.asarray(bins, dtype=float))
    sols = sample.solutions
    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    total = 0.0
    pairs = 0
    for i0 in range(0, len(sols), chunk):
        block = sols[i0:i0 + chunk]
        agree = _agreements(block, sols)
        rows, cols = np.nonzero(np.arange(len(sols))[None, :] > (np.arange(len(block)) + i0)[:, None])
        sim = agree[rows, cols] / n
        counts += np.histogram(sim, bins=edges)[0]
        total += float(sim.sum())
        pairs += len(sim)
    return Histogram(edges, counts, pairs, total / pairs if pairs else math.nan)


def split_free_fixed(formula: Formula, solution) -> tuple[frozenset[int], frozenset[int]]:
    """(free, fixed) 1-based variable sets: free iff a single flip keeps the formula satisfied."""
    x = np.asarray(solution, dtype=bool)
    lits = formula.literals()
    if lits.size == 0:
        return frozenset(range(1, formula.n + 1)), frozenset()
    vals = literal_values(formula, x)
    nae = formula.model_kind == "nae"
    free, fixed = set(), set()
    for v in range(1, formula.n + 1):
        touched = np.abs(lits) == v
        flipped = np.where(touched, ~vals, vals)
        n_true = flipped.sum(axis=1)
        ok = np.all((n_true > 0) & (n_true < formula.k)) if nae else np.all(n_true > 0)
        (free if ok else fixed).add(v)
    return frozenset(free), frozenset(fixed)


def true_surface(formula: Formula, solution) -> float:
    """True literal occurrences divided by k m."""
    return float(literal_values(formula, solution).mean())


def surface_independence_ratio(formula: Formula, sol1, sol2) -> float:
    """Sigma_F(sol1) Sigma_T(sol2) / (k Xi_FT); nan when Xi_FT = 0."""
    v1 = literal_values(formula, sol1)
    v2 = literal_values(formula, sol2)
    f1 = int((~v1).sum())
    t2 = int(v2.sum())
    ft = int((~v1 & v2).sum())
    if ft == 0:
        return math.nan
    return f1 * t2 / (formula.k * formula.m * ft)


def unisat_independence_ratio(formula: Formula, sol1, sol2) -> float:
    """beta_1 b_1 / gamma_11 over uniquely satisfied clauses; nan when gamma_11 = 0."""
    u1 = literal_values(formula, sol1).sum(axis=1) == 1
    u2 = literal_values(formula, sol2).sum(axis=1) == 1
    both = int((u1 & u2).sum())
    if both == 0:
        return math.nan
    return float(u1.sum()) * float(u2.sum()) / (formula.m * both)


def pair_ratios(sample: SolutionSample, ratio, max_pairs: int | None = None, seed: int = 0) -> np.ndarray:
    """Ratio over unordered pairs of distinct solutions (a seeded subset if max_pairs is set)."""
    count = sample.count
    pairs = [(i, j) for i in range(count) for j in range(i + 1, count)]
    if max_pairs is not None and len(pairs) > max_pairs:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(len(pairs), size=max_pairs, replace=False))
        pairs = [pairs[i] for i in pick]
    return np.array([ratio(sample.formula, sample.solutions[i], sample.solutions[j]) for i, j in pairs])


@dataclass(frozen=True)
class DeltaCell:
    total: int
    positive: int
    variables: int
    d: float
    d_d: float
    u: float


def delta_pq_statistics(samples) -> list[DeltaCell]:
    """Per (occurrences T, positive occurrences U): d, d(1 - d) and u.

    For a variable set to 1 in a of N solutions, a fraction a (N - a) / (N (N - 1))
    of the ordered couples of distinct solutions assign it 1 then 0; u averages
    that over the variables of the cell, d averages a / N.
    """
    acc: dict[tuple[int, int], list[tuple[float, float]]] = {}
    for sample in samples:
        if not sample.exhaustive:
            raise ValueError("statistics require exhaustive samples")
        big_n = sample.count
        if big_n < 2:
            continue
        pos, neg = sample.formula.occurrences()
        ones = sample.solutions.sum(axis=0).astype(float)
        frac = ones / big_n
        cross = ones * (big_n - ones) / (big_n * (big_n - 1))
        for v in range(sample.formula.n):
            acc.setdefault((int(pos[v] + neg[v]), int(pos[v])), []).append((frac[v], cross[v]))
    out = []
    for (t, u), vals in sorted(acc.items()):
        arr = np.array(vals)
        d = float(arr[:, 0].mean())
        out.append(DeltaCell(t, u, len(vals), d, d * (1 - d), float(arr[:, 1].mean())))
    return out
