"""Implicants: partial assignments over the domain {0, 1, *}."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from .critical import ratio_critical
from .framework import ConstraintError, FirstMomentPoint, ModelSpec, beta_from_orbits
from .lagrange import SecondMomentLandscape, implicant_overlap
from .parallel import parallel_map

# alpha, c, beta_TFF, beta_TTF, beta_T** (per-type values)
TABLE1 = (
    (0.001, 2.81, 0.195, 0.10867, 3.33e-5),
    (0.01, 2.77, 0.1942, 0.098833, 3.33e-5),
    (0.05, 2.52, 0.17767, 0.08167, 0.001633),
    (0.08, 2.32, 0.1633, 0.07, 0.00233),
    (0.11, 2.13, 0.1533, 0.05467, 0.0033),
    (0.15, 1.88, 0.13833, 0.041, 0.012),
    (0.2, 1.59, 0.1233, 0.02567, 0.02833),
    (0.25, 1.31, 0.10833, 0.0133, 0.04767),
    (0.333, 0.89, 0.094433, 3.33e-5, 0.094167),
)
FREE_NAMES = ("beta_TFF", "beta_TTF", "beta_Tss")


@dataclass(frozen=True)
class ImplicantPoint:
    delta: float
    alpha: float
    rho: float
    beta: np.ndarray | None = None
    overlap: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.delta < 0 or self.alpha < 0 or self.delta + self.alpha > 1 + 1e-12:
            raise ConstraintError(f"need delta, alpha >= 0 and delta + alpha <= 1, got {self.delta}, {self.alpha}")
        if self.overlap is not None and implicant_overlap(self.delta, self.alpha).mu(self.overlap).min() < -1e-12:
            raise ConstraintError(f"overlap {self.overlap} reconstructs a negative mu entry")

    @classmethod
    def independent(cls, delta: float, alpha: float, rho: float, beta=None) -> "ImplicantPoint":
        return cls(delta, alpha, rho, beta, (alpha**2, delta**2, alpha * delta, alpha * delta))

    def mu_matrix(self) -> np.ndarray:
        return implicant_overlap(self.delta, self.alpha).mu(self.overlap)

    def first_moment(self, k: int = 3) -> FirstMomentPoint:
        return FirstMomentPoint.create(ModelSpec.implicant(k), [1 - self.delta - self.alpha, self.delta, self.alpha],
                                       [self.rho, 1 - self.rho], self.beta)


def eps_implicant(point: ImplicantPoint) -> dict[tuple[str, str], float]:
    """The nine entries of eps written out for the (mu, nu, pi, pi') overlap."""
    d, a, r = point.delta, point.alpha, point.rho
    mu, nu, pi, pp = point.overlap
    m00 = 1 - 2 * d - 2 * a + mu + nu + pi + pp
    return {
        ("T", "T"): r * nu + (1 - r) * m00,
        ("T", "F"): r * (d - nu - pi) + (1 - r) * (d - nu - pp),
        ("F", "T"): r * (d - nu - pp) + (1 - r) * (d - nu - pi),
        ("F", "F"): r * m00 + (1 - r) * nu,
        ("*", "*"): mu,
        ("T", "*"): r * pi + (1 - r) * (a - mu - pi),
        ("*", "T"): r * pp + (1 - r) * (a - mu - pp),
        ("F", "*"): r * (a - mu - pi) + (1 - r) * pi,
        ("*", "F"): r * (a - mu - pp) + (1 - r) * pp,
    }


def eta_implicant(delta: float, alpha: float, rho: float) -> dict[str, float]:
    return {
        "T": rho * delta + (1 - rho) * (1 - delta - alpha),
        "F": (1 - rho) * delta + rho * (1 - delta - alpha),
        "*": alpha,
    }


def eps_gap_implicant(delta: float, alpha: float, rho: float) -> float:
    if delta + alpha > 1 + 1e-12:
        raise ConstraintError("delta + alpha must not exceed 1")
    return -rho * (1 - rho) * (2 * delta + alpha - 1) ** 2


def beta_from_free(alpha: float, tff: float, ttf: float, tss: float, k: int = 3) -> np.ndarray:
    """Symmetric beta with Sigma_T = Sigma_F = k(1 - alpha)/2 and Sigma_* = k alpha.

    The remaining per-type values of TTT, TT* and TF* are fixed by the sum
    and the two surface constraints.
    """
    if k != 3:
        raise ValueError("the three-parameter family is defined for k = 3")
    # orbit sizes: TTT 1, TTF 3, TFF 3, TT* 3, T** 3, TF* 6
    lhs = np.array([[1.0, 3.0, 6.0], [0.0, 3.0, 6.0], [3.0, 6.0, 6.0]])
    rhs = np.array([
        1 - 3 * ttf - 3 * tff - 3 * tss,
        3 * alpha - 6 * tss,
        1.5 * (1 - alpha) - 6 * ttf - 3 * tff - 3 * tss,
    ])
    ttt, tts, tfs = np.linalg.solve(lhs, rhs)
    values = {"TTT": ttt, "TTF": ttf, "TFF": tff, "TT*": tts, "T**": tss, "TF*": tfs}
    if min(values.values()) < -1e-12:
        raise ConstraintError(f"free values ({tff}, {ttf}, {tss}) give a negative orbit at alpha = {alpha}")
    return np.clip(beta_from_orbits(ModelSpec.implicant(k), values), 0.0, None)


def implicant_fm(alpha: float, free, rho: float = 0.5) -> FirstMomentPoint:
    delta = (1 - alpha) / 2
    beta = beta_from_free(alpha, *free)
    beta = beta / beta.sum()
    return FirstMomentPoint.create(ModelSpec.implicant(), [1 - delta - alpha, delta, alpha], [rho, 1 - rho], beta)


def critical_at(alpha: float, free, rho: float = 0.5, x0=None):
    """Second-moment critical ratio for one choice of the free beta values (ratio route)."""
    try:
        fm = implicant_fm(alpha, free, rho)
    except ConstraintError:
        return -math.inf, None
    res = ratio_critical(SecondMomentLandscape(ModelSpec.implicant(), fm), x0=x0)
    return res.c_star, res.x


@dataclass(frozen=True)
class ImplicantCritical:
    alpha: float
    c_star: float
    free: tuple[float, float, float]
    overlap: tuple[float, ...]
    evaluations: int
    start_c: float

    def row(self) -> dict:
        return {"alpha": self.alpha, "c": self.c_star, **dict(zip(FREE_NAMES, self.free))}


def table1_start(alpha: float) -> tuple[float, float, float]:
    for row in TABLE1:
        if abs(row[0] - alpha) < 1e-12:
            return row[2:]
    # nearest tabulated alpha, rescaled feasibility is checked by the caller
    row = min(TABLE1, key=lambda r: abs(r[0] - alpha))
    return row[2:]


def critical_ratio_implicants(alpha: float, start=None, step0: float = 2e-3, min_step: float = 1e-5,
                              rho: float = 0.5) -> ImplicantCritical:
    """Coordinate search over (beta_TFF, beta_TTF, beta_T**) maximizing the critical ratio."""
    if not 0 <= alpha <= 1 / 3 + 1e-9:
        raise ConstraintError(f"alpha = {alpha} is outside [0, 1/3], where the surface constraints are feasible")
    free = np.array(start if start is not None else table1_start(alpha), dtype=float)
    best, x = critical_at(alpha, free, rho)
    if not math.isfinite(best):
        raise ConstraintError(f"the starting beta values {tuple(free)} are infeasible at alpha = {alpha}")
    start_c = best
    evals = 1
    step = step0
    while step >= min_step:
        improved = False
        for j in range(3):
            for sgn in (1.0, -1.0):
                trial = free.copy()
                trial[j] += sgn * step
                if trial[j] < 0:
                    continue
                c, xt = critical_at(alpha, trial, rho, x0=x)
                evals += 1
                if c > best + 1e-12:
                    best, free, x, improved = c, trial, xt, True
                    break
        if not improved:
            step /= 2
    return ImplicantCritical(alpha, best, tuple(map(float, free)), tuple(x), evals, start_c)


def table1(alphas=None, jobs: int = 1, **kwargs) -> list[ImplicantCritical]:
    alphas = [row[0] for row in TABLE1] if alphas is None else list(alphas)
    return parallel_map(partial(_table1_one, kwargs), alphas, jobs)


def _table1_one(kwargs: dict, alpha: float) -> ImplicantCritical:
    return critical_ratio_implicants(alpha, **kwargs)


def write_table1_csv(results, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "c", *FREE_NAMES])
        for r in results:
            w.writerow([repr(r.alpha), repr(r.c_star), *map(repr, r.free)])
