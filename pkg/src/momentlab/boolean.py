"""Boolean solutions of k-SAT inside the general framework."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .critical import RatioResult, ratio_critical
from .framework import (
    ConstraintError,
    FirstMomentPoint,
    ModelSpec,
    beta_from_orbits,
    eta_from,
    surfaces,
)
from .lagrange import MaximizeOptions, SecondMomentLandscape, maximize_t2
from .parallel import parallel_map
from .rates import entropy

# per-type values of the vector at which the second moment works up to c = 2.833
REFERENCE_BETA_TTT = 0.0929
REFERENCE_BETA_ROUNDED = {"TFF": 0.197633, "TTF": 0.104733, "TTT": 0.0929}
BETA_RULES = ("balanced_half", "proportional")


@dataclass(frozen=True)
class BooleanPoint:
    delta: float
    rho: float
    beta: np.ndarray
    k: int = 3

    @property
    def model(self) -> ModelSpec:
        return ModelSpec.boolean(self.k)

    def first_moment(self) -> FirstMomentPoint:
        return FirstMomentPoint.create(self.model, [1 - self.delta, self.delta], [self.rho, 1 - self.rho], self.beta)

    def overlap(self, mu: float) -> np.ndarray:
        """Reconstruct the 2x2 overlap from mu = mu_{0,1} (domain order 0, 1)."""
        m = np.array([[1 - self.delta - mu, mu], [mu, self.delta - mu]])
        if m.min() < -1e-12:
            raise ConstraintError(f"mu = {mu} is outside [0, {min(self.delta, 1 - self.delta)}]")
        return m


def eps_gap(delta: float, rho: float) -> float:
    """eps_TF - eta_T eta_F at the independence point."""
    return -rho * (1 - rho) * (2 * delta - 1) ** 2


def surface_balance_residual(beta, delta: float, rho: float, k: int = 3) -> float:
    model = ModelSpec.boolean(k)
    sig = surfaces(model, beta)
    eta = eta_from(model, np.array([1 - delta, delta]), np.array([rho, 1 - rho]))
    t, f = model.vidx["T"], model.vidx["F"]
    return float(sig[t] / eta[t] - sig[f] / eta[f])


def true_counts(model: ModelSpec) -> np.ndarray:
    return model.type_counts[:, model.vidx["T"]]


def beta_from_ttt(beta_ttt: float, k: int = 3) -> np.ndarray:
    """Symmetric 3-SAT beta with Sigma_T = 3/2, parametrized by the per-type value of TTT."""
    if k != 3:
        raise ValueError("the one-parameter family is defined for k = 3")
    ttf = (0.5 - 2 * beta_ttt) / 3
    tff = (1 - beta_ttt - 3 * ttf) / 3
    if min(ttf, tff, beta_ttt) < 0:
        raise ConstraintError(f"beta_TTT = {beta_ttt} gives a negative orbit value")
    return beta_from_orbits(ModelSpec.boolean(k), {"TFF": tff, "TTF": ttf, "TTT": beta_ttt})


def maxent_beta(model: ModelSpec, sigma_true: float) -> np.ndarray:
    """Maximum-entropy beta with a prescribed true surface: beta_t proportional to x^(#T in t)."""
    n_true = true_counts(model)
    lo, hi = n_true.min(), n_true.max()
    if not lo < sigma_true < hi:
        raise ConstraintError(f"true surface {sigma_true} is outside the open range ({lo}, {hi})")

    def weights(lx):
        w = np.exp(lx * (n_true - n_true.max()))
        return w / w.sum()

    lx = brentq(lambda lx: weights(lx) @ n_true - sigma_true, -60.0, 60.0, xtol=1e-15)
    return weights(lx)


def first_moment_beta_ttt(k: int = 3) -> float:
    """beta_TTT maximizing H(beta) on the one-parameter balanced family (numerical search)."""
    res = minimize_scalar(lambda b: -entropy(beta_from_ttt(b, k)), bounds=(0.0, 0.25), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)


def half_point(beta, rho: float = 0.5, k: int = 3) -> FirstMomentPoint:
    return FirstMomentPoint.create(ModelSpec.boolean(k), [0.5, 0.5], [rho, 1 - rho], beta)


def critical_for_beta_ttt(beta_ttt: float, rho: float = 0.5, grid: int = 200) -> RatioResult:
    fm = half_point(beta_from_ttt(beta_ttt), rho)
    return ratio_critical(SecondMomentLandscape(ModelSpec.boolean(), fm), grid=grid)


@dataclass(frozen=True)
class BetaSearch:
    beta_ttt: float
    c_star: float
    neighbours: tuple[tuple[float, float], ...]

    @property
    def is_local_optimum(self) -> bool:
        return all(c <= self.c_star + 1e-9 for _, c in self.neighbours)


def optimize_beta_ttt(start: float = REFERENCE_BETA_TTT, half_width: float = 0.02, xtol: float = 1e-5,
                      probe: float = 2e-3) -> BetaSearch:
    """Local search of the one free beta parameter maximizing the critical ratio."""
    lo, hi = max(start - half_width, 1e-4), min(start + half_width, 0.25 - 1e-4)
    res = minimize_scalar(lambda b: -critical_for_beta_ttt(b).c_star, bounds=(lo, hi), method="bounded",
                          options={"xatol": xtol})
    best = float(res.x)
    c_best = -float(res.fun)
    nbrs = tuple((b, critical_for_beta_ttt(b).c_star) for b in (best - probe, best + probe))
    return BetaSearch(best, c_best, nbrs)


# ---------------------------------------------------------------------------
# delta-rho scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanCell:
    delta: float
    rho: float
    gap: float
    status: str

    @property
    def loglog_gap(self) -> float:
        """ln ln(T2 / T1^2); the ratio is exp(gap), so this is ln(gap), -inf when gap <= 0."""
        if self.status != "ok" or self.gap <= 0:
            return -math.inf
        return math.log(self.gap)


def rule_beta(rule: str, delta: float, rho: float, k: int = 3) -> np.ndarray:
    model = ModelSpec.boolean(k)
    if rule == "balanced_half":
        target = k / 2
    elif rule == "proportional":
        target = k * float(eta_from(model, np.array([1 - delta, delta]), np.array([rho, 1 - rho]))[0])
    else:
        raise ValueError(f"unknown beta rule {rule!r}; expected one of {BETA_RULES}")
    return maxent_beta(model, target)


def scan_cell(rule: str, c: float, k: int, options: MaximizeOptions, cell: tuple[float, float],
              gap_tol: float = 1e-9) -> ScanCell:
    delta, rho = cell
    try:
        beta = rule_beta(rule, delta, rho, k)
    except ConstraintError:
        return ScanCell(delta, rho, math.nan, "infeasible")
    model = ModelSpec.boolean(k)
    fm = FirstMomentPoint.create(model, [1 - delta, delta], [rho, 1 - rho], beta)
    gap = maximize_t2(model, fm, c, options).gap
    return ScanCell(delta, rho, gap, "ok" if gap > gap_tol else "nonpositive")


def scan_delta_rho(rule: str, c: float, deltas, rhos, k: int = 3, options: MaximizeOptions | None = None,
                   jobs: int = 1) -> list[ScanCell]:
    if len(deltas) < 2 or len(rhos) < 2:
        raise ValueError("scan grids need at least two points per axis")
    if rule not in BETA_RULES:
        raise ValueError(f"unknown beta rule {rule!r}; expected one of {BETA_RULES}")
    opts = options or MaximizeOptions()
    cells = [(float(d), float(r)) for d in deltas for r in rhos]
    return parallel_map(partial(scan_cell, rule, c, k, opts), cells, jobs)


def scan_axis(lo: float = 0.05, hi: float = 0.95, n: int = 21) -> np.ndarray:
    return np.round(np.linspace(lo, hi, n), 12)


def write_scan_csv(cells, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta", "rho", "gap", "loglog_gap", "status"])
        for cell in cells:
            w.writerow([repr(cell.delta), repr(cell.rho), repr(cell.gap), repr(cell.loglog_gap), cell.status])
