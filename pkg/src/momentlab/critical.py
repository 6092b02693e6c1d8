"""Critical clause ratios.

Two independent routes are provided for the second moment:

* bisection on c of the maximized gap ``max (log T2 - 2 log T1)``;
* the ratio route, which uses that the gap at a fixed overlap is
  ``a(x) + c b(x)`` with ``a <= 0``, so the critical ratio is the minimum of
  ``-a(x) / b(x)`` over overlaps with ``b(x) > 0``.

Tests compare the two; neither calls the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .framework import FirstMomentPoint, ModelSpec
from .lagrange import MaximizeOptions, SecondMomentLandscape, maximize_t2
from .rates import entropy, t1_coefficient, t1_log_rate

GAP_TOL = 1e-9
TOL_C = 1e-3


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change of the gap."""


@dataclass(frozen=True)
class CriticalResult:
    c_star: float
    lo: float
    hi: float
    probes: tuple[tuple[float, float], ...]
    spot_checks: tuple[tuple[float, float], ...] = ()
    monotone: bool = True
    method: str = "bisection"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "c_star": self.c_star,
            "bracket": [self.lo, self.hi],
            "method": self.method,
            "monotone": self.monotone,
            "probes": [list(p) for p in self.probes],
            "spot_checks": [list(p) for p in self.spot_checks],
            **self.extra,
        }


def bisect_critical(gap: Callable[[float], float], c_lo: float, c_hi: float, tol_c: float = TOL_C,
                    gap_tol: float = GAP_TOL, spot_checks: int = 5) -> CriticalResult:
    """Largest c with gap(c) <= gap_tol, assuming the gap is nondecreasing in c.

    Monotonicity is not trusted blindly: ``spot_checks`` interior points of the
    initial bracket are evaluated and the result is flagged if they disagree
    with the located threshold.
    """
    g_lo, g_hi = gap(c_lo), gap(c_hi)
    probes = [(c_lo, g_lo), (c_hi, g_hi)]
    if not (g_lo <= gap_tol < g_hi):
        raise BracketError(f"gap({c_lo}) = {g_lo:.3g} and gap({c_hi}) = {g_hi:.3g} do not bracket a sign change")
    lo, hi = c_lo, c_hi
    while hi - lo > tol_c:
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        probes.append((mid, g))
        if g <= gap_tol:
            lo = mid
        else:
            hi = mid
    c_star = 0.5 * (lo + hi)
    checks = []
    monotone = True
    for c in np.linspace(c_lo, c_hi, spot_checks + 2)[1:-1]:
        g = gap(float(c))
        checks.append((float(c), g))
        if (c < lo and g > gap_tol) or (c > hi and g <= gap_tol):
            monotone = False
    return CriticalResult(c_star=c_star, lo=lo, hi=hi, probes=tuple(probes), spot_checks=tuple(checks),
                          monotone=monotone)


def second_moment_critical(model: ModelSpec, fm: FirstMomentPoint, c_lo: float, c_hi: float,
                           tol_c: float = TOL_C, gap_tol: float = GAP_TOL,
                           options: MaximizeOptions | None = None,
                           landscape: SecondMomentLandscape | None = None) -> CriticalResult:
    """Bisection on the gap returned by ``maximize_t2``."""
    opts = options or MaximizeOptions()
    land = landscape or SecondMomentLandscape(model, fm, ipf_tol=opts.ipf_tol, max_iter=opts.max_iter)
    res = bisect_critical(lambda c: maximize_t2(model, fm, c, opts, land).gap, c_lo, c_hi, tol_c, gap_tol)
    return res


@dataclass(frozen=True)
class RatioResult:
    c_star: float
    x: tuple[float, ...]
    evaluations: int


def ratio_critical(land: SecondMomentLandscape, grid: int = 200, starts: int = 10,
                   xtol: float = 1e-10, x0=None) -> RatioResult:
    """Critical ratio as the minimum over overlaps of I(x) / b(x).

    One free variable: grid scan plus bounded Brent refinement.  Several
    free variables: Nelder-Mead from the best of ``starts`` points on the
    segment between the independence and identical overlaps, plus ``x0``
    when a warm start is supplied.
    """
    param = land.param
    if len(param.names) == 1:
        xs = np.linspace(0.0, float(param.upper[0]), grid + 1)[1:-1]
        vals = np.array([land.ratio((x,)) for x in xs])
        i = int(np.argmin(vals))
        if not math.isfinite(vals[i]):
            return RatioResult(math.inf, (float(xs[i]),), len(xs))
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
        res = minimize_scalar(lambda t: land.ratio((t,)), bounds=(lo, hi), method="bounded",
                              options={"xatol": xtol})
        if res.fun < vals[i]:
            return RatioResult(float(res.fun), (float(res.x),), len(xs) + res.nfev)
        return RatioResult(float(vals[i]), (float(xs[i]),), len(xs) + res.nfev)

    cands = [lam * param.identical + (1 - lam) * param.independence for lam in np.linspace(0.05, 0.95, starts)]
    if x0 is not None:
        cands.append(np.asarray(x0, dtype=float))
    vals = [land.ratio(tuple(x)) for x in cands]
    i = int(np.argmin(vals))

    def obj(x):
        r = land.ratio(tuple(x))
        return r if math.isfinite(r) else 1e6

    res = minimize(obj, cands[i], method="Nelder-Mead",
                   options={"xatol": xtol, "fatol": 1e-10, "maxiter": 4000})
    best, x = (res.fun, res.x) if res.fun < vals[i] else (vals[i], cands[i])
    return RatioResult(float(best) if best < 1e6 else math.inf, tuple(map(float, x)), len(cands) + res.nfev)


def first_moment_root(model: ModelSpec, fm: FirstMomentPoint) -> float:
    """Closed-form root in c of the affine log T1 (inf when T1 never vanishes)."""
    slope = t1_coefficient(model, fm)
    if slope >= 0:
        return math.inf
    return entropy(fm.delta) / -slope


def first_moment_critical(model: ModelSpec, fm: FirstMomentPoint, c_lo: float, c_hi: float,
                          tol_c: float = TOL_C) -> CriticalResult:
    """Bisection for the ratio where log T1 becomes negative."""
    return bisect_critical(lambda c: -t1_log_rate(model, fm, c), c_lo, c_hi, tol_c, gap_tol=0.0,
                           spot_checks=5)
