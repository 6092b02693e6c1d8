"""Exact first and second moments of the solution count at desk scale.

Clauses are i.i.d., so E X and E X^2 reduce to sums over assignments (and
pairs of assignments grouped by Hamming distance) of per-clause survival
probabilities raised to the clause count.  A Monte-Carlo estimator based
on brute-force counting over all 2^n assignments provides a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..rates import plain_first_moment_rate, plain_solutions_rate
from .formula import gen_uniform


def pair_survival(n: int, k: int, dist: int) -> float:
    """Probability that a uniform clause on k distinct variables satisfies two
    assignments at Hamming distance ``dist``."""
    both_false = math.comb(n - dist, k) / math.comb(n, k) * 2.0**-k
    return 1.0 - 2.0 * 2.0**-k + both_false


def log_first_moment(n: int, m: int, k: int = 3) -> float:
    return n * math.log(2.0) + m * math.log1p(-(2.0**-k))


def log_second_moment(n: int, m: int, k: int = 3) -> float:
    terms = [n * math.log(2.0) + math.log(math.comb(n, d)) + m * math.log(pair_survival(n, k, d))
             for d in range(n + 1)]
    return float(logsumexp(terms))


def count_solutions(formula) -> int:
    """Brute force over all 2^n assignments."""
    n = formula.n
    grid = ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    lits = formula.literals()
    ok = np.ones(2**n, dtype=bool)
    for cl in lits:
        vals = grid[:, np.abs(cl) - 1] == (cl > 0)
        ok &= vals.any(axis=1)
    return int(ok.sum())


@dataclass(frozen=True)
class MomentCheck:
    n: int
    m: int
    c: float
    exact_first: float
    exact_second: float
    rate_first: float
    rate_second: float
    mc_first: float
    mc_second: float
    band: float

    @property
    def first_ok(self) -> bool:
        return abs(self.exact_first - self.rate_first) <= self.band

    @property
    def second_ok(self) -> bool:
        return abs(self.exact_second - self.rate_second) <= self.band


def band(n: int, width_at_12: float = 0.25) -> float:
    """log(n)/n band scaled to ``width_at_12`` at n = 12."""
    return width_at_12 * (math.log(n) / n) / (math.log(12) / 12)


def moment_check(n: int, c: float, k: int = 3, samples: int = 200, seed: int = 0) -> MomentCheck:
    """Compare (1/n) log of exact moments with the rates maximized over the lattice mu = d/n."""
    m = max(1, int(round(c * n)))
    c_eff = m / n
    lattice = np.arange(n + 1) / n
    rate2 = float(np.max(plain_solutions_rate(lattice, c_eff, k)))
    counts = np.array([count_solutions(gen_uniform(n, c_eff, k, "sat", seed + i)) for i in range(samples)],
                      dtype=float)
    return MomentCheck(
        n=n, m=m, c=c_eff,
        exact_first=log_first_moment(n, m, k) / n,
        exact_second=log_second_moment(n, m, k) / n,
        rate_first=plain_first_moment_rate(c_eff, k),
        rate_second=rate2,
        mc_first=float(counts.mean()),
        mc_second=float((counts**2).mean()),
        band=band(n),
    )
