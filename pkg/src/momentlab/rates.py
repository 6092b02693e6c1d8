"""Exponential rates of the first and second moments.

Every rate is the natural log of the per-variable growth base, so a moment
behaves like ``exp(n * rate)`` up to polynomial factors.  Forbidden
configurations give ``-inf``; ``0 * log 0`` is taken as 0 throughout.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import entr, xlogy

from .framework import (
    FirstMomentPoint,
    ModelSpec,
    SecondMomentPoint,
    epsilon,
    eta,
    pair_surfaces,
    surfaces,
)

LN2 = math.log(2.0)


def entropy(p) -> float:
    """Shannon entropy in nats of a (possibly multi-dimensional) mass array."""
    return float(entr(np.asarray(p, dtype=float)).sum())


def weighted_log(weights, probs) -> float:
    """sum w * log p, with 0 * log 0 = 0 and -inf when positive weight meets p = 0."""
    return float(xlogy(np.asarray(weights, dtype=float), np.asarray(probs, dtype=float)).sum())


def affine_rate(base: float, c: float, slope: float) -> float:
    """base + c * slope without producing nan from 0 * -inf."""
    if c == 0:
        return base
    return base + c * slope


def t1_coefficient(model: ModelSpec, fm: FirstMomentPoint) -> float:
    """The part of log T1 multiplied by the clause ratio c."""
    return weighted_log(surfaces(model, fm.beta), eta(model, fm)) + entropy(fm.beta)


def t1_log_rate(model: ModelSpec, fm: FirstMomentPoint, c: float) -> float:
    return affine_rate(entropy(fm.delta), c, t1_coefficient(model, fm))


def t2_coefficient(model: ModelSpec, sm: SecondMomentPoint, rho) -> float:
    xi = pair_surfaces(model, sm.gamma)
    return weighted_log(xi, epsilon(model, sm.mu, rho)) + entropy(sm.gamma)


def t2_log_rate(model: ModelSpec, sm: SecondMomentPoint, rho, c: float) -> float:
    return affine_rate(entropy(sm.mu), c, t2_coefficient(model, sm, rho))


def independence_point(fm: FirstMomentPoint) -> SecondMomentPoint:
    """Couples of independent solutions: mu = delta x delta, gamma = beta x beta."""
    mu = np.outer(fm.delta, fm.delta)
    gamma = np.outer(fm.beta, fm.beta)
    mu.setflags(write=False)
    gamma.setflags(write=False)
    return SecondMomentPoint(mu=mu, gamma=gamma)


def ratio_gap_at_independence(model: ModelSpec, fm: FirstMomentPoint, c: float, rho=None) -> float:
    """log(T2 / T1^2) evaluated at the independence point."""
    rho = fm.rho if rho is None else rho
    return t2_log_rate(model, independence_point(fm), rho, c) - 2.0 * t1_log_rate(model, fm, c)


# ---------------------------------------------------------------------------
# closed-form plain-solution and NAE models
# ---------------------------------------------------------------------------

def plain_g(mu, k: int):
    """Probability that a random clause satisfies two assignments differing on a fraction mu."""
    mu = np.asarray(mu, dtype=float)
    return 1.0 - 2.0 / 2**k + ((1.0 - mu) / 2.0) ** k


def nae_g(mu, k: int):
    mu = np.asarray(mu, dtype=float)
    return 1.0 - 4.0 / 2**k + ((1.0 - mu) ** k + mu**k) / 2**k


def _binary_entropy(mu):
    mu = np.asarray(mu, dtype=float)
    return entr(mu) + entr(1.0 - mu)


def plain_solutions_rate(mu, c: float, k: int):
    """log of the summand base of E X^2 for plain solutions at overlap-disagreement mu."""
    out = LN2 + _binary_entropy(mu) + c * np.log(plain_g(mu, k))
    return float(out) if np.ndim(out) == 0 else out


def nae_rate(mu, c: float, k: int):
    out = LN2 + _binary_entropy(mu) + c * np.log(nae_g(mu, k))
    return float(out) if np.ndim(out) == 0 else out


def plain_first_moment_rate(c: float, k: int) -> float:
    """(1/n) log E X for plain solutions: 2^n (1 - 2^-k)^(cn)."""
    return LN2 + c * math.log1p(-(2.0**-k))


def nae_first_moment_rate(c: float, k: int) -> float:
    return LN2 + c * math.log1p(-(2.0 ** (1 - k)))


def argmax_rate(rate, c: float, k: int, xatol: float = 1e-12) -> tuple[float, float]:
    """Location and value of the maximum over mu in [0, 1] of a one-dimensional rate.

    A coarse scan picks the bracket; golden-section (Brent) search refines it.
    """
    grid = np.linspace(0.0, 1.0, 2001)
    vals = rate(grid, c, k)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda m: -rate(m, c, k), bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol})
    if -res.fun >= vals[i]:
        return float(res.x), float(-res.fun)
    return float(grid[i]), float(vals[i])
