"""Random k-SAT conditioned on a degree profile d[p, q].

A cell (p, q) holds the fraction of variables with p positive and q negative
occurrences.  Selected solutions set the fraction delta[p, q] of such
variables to 1; couples of solutions disagree on a fraction mu[p, q] in each
direction.  The surfaces are tied to the literal fractions (Sigma_v = k eta_v
and Xi_vw = k eps_vw), so the second moment reduces to a one-dimensional
search over the pair surface Xi_TF / k.  That search is parametrized by the
tilt theta of the coupling gamma proportional to f_t g_u exp(theta N_TF(t, u)).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import entr, expit
from scipy.stats import poisson

from .boolean import beta_from_ttt, maxent_beta
from .critical import CriticalResult, bisect_critical
from .framework import ConstraintError, ModelSpec, pair_surfaces, surfaces
from .lagrange import ipf
from .parallel import parallel_map
from .rates import entropy

PROFILE_TOL = 1e-9
LOG_Y_RANGE = (-10.0, 10.0)


@dataclass(frozen=True, eq=False)
class DegreeProfile:
    p: np.ndarray
    q: np.ndarray
    d: np.ndarray
    k: int
    c: float
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.p) == len(self.q) == len(self.d)):
            raise ValueError("p, q and d must have the same length")
        if np.any(self.d < 0) or np.any(self.p < 0) or np.any(self.q < 0):
            raise ConstraintError("degree profile entries must be nonnegative")
        if abs(self.d.sum() - 1) > PROFILE_TOL:
            raise ConstraintError(f"degree profile must sum to 1 (sum = {self.d.sum():.12g})")
        mean = float(((self.p + self.q) * self.d).sum())
        if abs(mean - self.k * self.c) > PROFILE_TOL:
            raise ConstraintError(f"mean degree {mean:.12g} differs from k c = {self.k * self.c:.12g}")

    @classmethod
    def from_table(cls, table, k: int, c: float | None = None) -> "DegreeProfile":
        """Build from a mapping {(p, q): d}; c defaults to the mean degree over k."""
        keys = sorted(table)
        p = np.array([key[0] for key in keys], dtype=float)
        q = np.array([key[1] for key in keys], dtype=float)
        d = np.array([float(table[key]) for key in keys])
        if c is None:
            c = float(((p + q) * d).sum()) / k
        return cls(p, q, d, k, c)

    @property
    def weights(self) -> np.ndarray:
        """(p + q) d / (k c): share of literal occurrences carried by each cell."""
        return (self.p + self.q) * self.d / (self.k * self.c)

    def delta_map(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        return np.broadcast_to(np.asarray(fn(self.p, self.q), dtype=float), self.d.shape).copy()

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "q", "d"])
            for p, q, d in zip(self.p, self.q, self.d):
                w.writerow([int(p), int(q), repr(float(d))])

    @classmethod
    def read_csv(cls, path, k: int, c: float | None = None) -> "DegreeProfile":
        with open(Path(path), newline="") as fh:
            table = {(int(r["p"]), int(r["q"])): float(r["d"]) for r in csv.DictReader(fh)}
        return cls.from_table(table, k, c)


def poisson_profile(k: int, c: float, truncation: float = 1e-12) -> DegreeProfile:
    """Product of two Poisson(kc/2) laws truncated to a square of side P + 1.

    The square keeps all but ``truncation`` of the mass.  The missing mass m0
    and missing mean m1 are restored exactly by adding m1 / (2P) at (P, P)
    and the rest of m0 at (0, 0).
    """
    if c <= 0:
        raise ValueError("the clause ratio must be positive")
    if not 0 < truncation < 1:
        raise ValueError("truncation must lie in (0, 1)")
    lam = k * c / 2
    side = int(poisson.isf(truncation / 4, lam)) + 1
    side = max(side, 1)
    pmf = poisson.pmf(np.arange(side + 1), lam)
    table = np.outer(pmf, pmf)
    p, q = np.meshgrid(np.arange(side + 1), np.arange(side + 1), indexing="ij")
    tail = 1.0 - table.sum()
    mean_tail = k * c - float(((p + q) * table).sum())
    top = mean_tail / (2 * side)
    table[side, side] += top
    table[0, 0] += tail - top
    if table[0, 0] < 0:
        raise ConstraintError("truncation repair would make d[0, 0] negative")
    mask = table > 0
    notes = {"side": side, "tail_mass": tail, "tail_mean": mean_tail, "added_top": top,
             "added_origin": tail - top}
    return DegreeProfile(p[mask].astype(float), q[mask].astype(float), table[mask], k, c, notes)


def omega_delta(profile: DegreeProfile, omega: float) -> np.ndarray:
    """delta[p, q] = 1 / (1 + omega^(p - q))."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    return expit(-(profile.p - profile.q) * math.log(omega))


def eta_distributional(profile: DegreeProfile, delta) -> tuple[float, float]:
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < -1e-12) or np.any(delta > 1 + 1e-12):
        raise ConstraintError("delta values must lie in [0, 1]")
    eta_t = float(((profile.p * delta + profile.q * (1 - delta)) * profile.d).sum() / (profile.k * profile.c))
    return eta_t, 1.0 - eta_t


def mu_from_y(delta, y: float, p, q):
    """Root in [0, min(delta, 1 - delta)] of (delta - mu)(1 - delta - mu) = mu^2 y^(p+q).

    Written as 2 d(1-d) / (1 + sqrt(1 - 4 (1 - Y) d(1-d))), the small root of
    the quadratic without the cancellation at Y = 1.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    delta = np.asarray(delta, dtype=float)
    s = np.asarray(p, dtype=float) + np.asarray(q, dtype=float)
    big = np.exp(np.minimum(s * math.log(y), 700.0))
    prod = delta * (1 - delta)
    disc = 1 - 4 * (1 - big) * prod
    if np.any(disc < 0):
        raise ConstraintError("negative discriminant")
    out = 2 * prod / (1 + np.sqrt(disc))
    return float(out) if out.ndim == 0 else out


def eps_gap_distributional(profile: DegreeProfile, delta) -> float:
    """eps_TF - eta_T eta_F at the independence point, in the centred form."""
    dp = np.asarray(delta, dtype=float) - 0.5
    kc = profile.k * profile.c
    first = float(((profile.p - profile.q) * dp * profile.d).sum() / kc)
    second = float(((profile.p + profile.q) * dp**2 * profile.d).sum() / kc)
    return first**2 - second


def eps_tf_independent(profile: DegreeProfile, delta) -> float:
    delta = np.asarray(delta, dtype=float)
    return float((profile.weights * delta * (1 - delta)).sum())


def _h2(x):
    return entr(x) + entr(1 - x)


def _check_surfaces(model: ModelSpec, beta, eta_t: float, tol: float) -> None:
    sig = surfaces(model, beta)
    want = model.k * eta_t
    if abs(sig[model.vidx["T"]] - want) > tol:
        raise ConstraintError(f"beta has true surface {sig[model.vidx['T']]:.12g}, the profile requires k eta_T = {want:.12g}")


def t1_rate_dist(profile: DegreeProfile, delta, beta, c: float | None = None, tol: float = 1e-9) -> float:
    c = profile.c if c is None else c
    model = ModelSpec.boolean(profile.k)
    delta = np.asarray(delta, dtype=float)
    base = float((profile.d * _h2(delta)).sum())
    if c == 0:
        return base
    eta_t, eta_f = eta_distributional(profile, delta)
    _check_surfaces(model, beta, eta_t, tol)
    return base + c * (profile.k * float(entr(eta_t) + entr(eta_f)) * -1 + entropy(beta))


@dataclass(frozen=True)
class DistributionalPoint:
    delta: np.ndarray
    mu: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray

    def eps(self, profile: DegreeProfile) -> np.ndarray:
        """eps over (T, F) x (T, F)."""
        w = profile.weights
        kc = profile.k * profile.c
        lam, nu = self.delta - self.mu, 1 - self.delta - self.mu
        tt = float(((profile.p * lam + profile.q * nu) * profile.d).sum() / kc)
        ff = float(((profile.p * nu + profile.q * lam) * profile.d).sum() / kc)
        tf = float((w * self.mu).sum())
        return np.array([[tt, tf], [tf, ff]])


def t2_rate_dist(profile: DegreeProfile, point: DistributionalPoint, c: float | None = None,
                 tol: float = 1e-9) -> float:
    c = profile.c if c is None else c
    model = ModelSpec.boolean(profile.k)
    lam, nu = point.delta - point.mu, 1 - point.delta - point.mu
    if min(lam.min(), nu.min(), point.mu.min()) < -1e-12:
        raise ConstraintError("overlap outside [0, min(delta, 1 - delta)]")
    base = float((profile.d * (entr(lam) + 2 * entr(point.mu) + entr(nu))).sum())
    if c == 0:
        return base
    eps = point.eps(profile)
    xi = pair_surfaces(model, point.gamma)
    if np.abs(xi - profile.k * eps).max() > tol:
        raise ConstraintError("gamma pair surfaces differ from k eps")
    if np.abs(point.gamma.sum(axis=1) - point.beta).max() > tol or np.abs(point.gamma.sum(axis=0) - point.beta).max() > tol:
        raise ConstraintError("gamma marginals differ from beta")
    eps_term = float(np.sum(-entr(eps)))
    return base + c * (profile.k * eps_term + entropy(point.gamma))


# ---------------------------------------------------------------------------
# maximization over the tilt
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistMax:
    theta: float
    x: float
    y: float
    gap: float
    log_t2: float
    log_t1: float
    residual: float
    multipliers: dict
    point: DistributionalPoint | None


class DistributionalLandscape:
    """Second-moment objective of the distributional model as a function of the tilt."""

    def __init__(self, profile: DegreeProfile, delta, beta, ipf_tol: float = 1e-13):
        self.profile = profile
        self.model = ModelSpec.boolean(profile.k)
        self.delta = np.asarray(delta, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.eta_t, self.eta_f = eta_distributional(profile, self.delta)
        _check_surfaces(self.model, self.beta, self.eta_t, 1e-9)
        t, f = self.model.vidx["T"], self.model.vidx["F"]
        self.n_tf = np.array(self.model.pair_counts[:, :, t, f])
        self.ipf_tol = ipf_tol
        self.log_t1 = t1_rate_dist(profile, self.delta, self.beta)
        self.x_max = float((profile.weights * np.minimum(self.delta, 1 - self.delta)).sum())
        self._cache: dict[float, tuple] = {}

    def coupling(self, theta: float):
        fit = ipf(np.exp(theta * self.n_tf), self.beta, tol=self.ipf_tol)
        x = float((fit.gamma * self.n_tf).sum()) / self.profile.k
        return fit, x

    def solve_y(self, x: float) -> float:
        w = self.profile.weights

        def resid(ly):
            return float((w * mu_from_y(self.delta, math.exp(ly), self.profile.p, self.profile.q)).sum()) - x

        lo, hi = LOG_Y_RANGE
        if resid(lo) < 0 or resid(hi) > 0:
            raise ConstraintError(f"pair surface {x:.6g} is out of reach for ln y in {LOG_Y_RANGE}")
        return math.exp(brentq(resid, lo, hi, xtol=1e-12, rtol=1e-15))

    def evaluate(self, theta: float):
        hit = self._cache.get(theta)
        if hit is not None:
            return hit
        fit, x = self.coupling(theta)
        p = self.profile
        try:
            y = self.solve_y(x)
        except ConstraintError:
            out = (-math.inf, fit, x, math.nan, None)
            self._cache[theta] = out
            return out
        mu = mu_from_y(self.delta, y, p.p, p.q)
        a = float((p.d * (entr(self.delta - mu) + 2 * entr(mu) + entr(1 - self.delta - mu))).sum())
        eps = np.array([self.eta_t - x, x, x, self.eta_f - x])
        if eps.min() <= 0:
            out = (-math.inf, fit, x, y, mu)
        else:
            phi = a + p.c * (p.k * float(np.sum(-entr(eps))) + entropy(fit.gamma))
            out = (phi, fit, x, y, mu)
        self._cache[theta] = out
        return out

    def gap(self, theta: float) -> float:
        return self.evaluate(theta)[0] - 2 * self.log_t1

    def residual(self, theta: float) -> float:
        """theta - ln(x^2 y / ((eta_T - x)(eta_F - x))), zero at an interior maximum."""
        _, _, x, y, _ = self.evaluate(theta)
        return theta - math.log(x * x * y / ((self.eta_t - x) * (self.eta_f - x)))

    def report(self, theta: float) -> DistMax:
        phi, fit, x, y, mu = self.evaluate(theta)
        point = None if mu is None else DistributionalPoint(self.delta, mu, fit.gamma, self.beta)
        mult = {"y": y, "h_TF": x * y, "h_FT": x, "h_TT": self.eta_t - x, "h_FF": self.eta_f - x,
                "f": fit.multipliers.f, "g": fit.multipliers.g}
        res = self.residual(theta) if math.isfinite(phi) else math.nan
        return DistMax(theta, x, y, phi - 2 * self.log_t1, phi, self.log_t1, res, mult, point)

    def maximize(self, theta_range: tuple[float, float] = (-6.0, 6.0), grid: int = 121,
                 xtol: float = 1e-10) -> DistMax:
        thetas = np.linspace(theta_range[0], theta_range[1], grid)
        vals = np.array([self.gap(float(t)) for t in thetas])
        order = np.argsort(-vals, kind="stable")
        best_t, best_v = float(thetas[order[0]]), float(vals[order[0]])
        # refine every grid peak; ties resolved by the smaller tilt
        for i in range(len(thetas)):
            left = vals[i - 1] if i > 0 else -math.inf
            right = vals[i + 1] if i + 1 < len(vals) else -math.inf
            if not (math.isfinite(vals[i]) and vals[i] >= left and vals[i] >= right):
                continue
            lo, hi = thetas[max(i - 1, 0)], thetas[min(i + 1, len(thetas) - 1)]
            res = minimize_scalar(lambda t: -self.gap(float(t)), bounds=(lo, hi), method="bounded",
                                  options={"xatol": xtol})
            if -res.fun > best_v:
                best_t, best_v = float(res.x), -float(res.fun)
        return self.report(best_t)


def half_beta(beta_ttt: float, k: int = 3) -> np.ndarray:
    return beta_from_ttt(beta_ttt, k)


def max_gap(profile: DegreeProfile, delta, beta) -> DistMax:
    return DistributionalLandscape(profile, delta, beta).maximize()


def half_gap(c: float, beta_ttt: float, truncation: float = 1e-12) -> float:
    profile = poisson_profile(3, c, truncation)
    return max_gap(profile, np.full(profile.d.shape, 0.5), half_beta(beta_ttt)).gap


@dataclass(frozen=True)
class BetaGap:
    beta_ttt: float
    gap: float


def best_beta_gap(c: float, bounds: tuple[float, float] = (0.07, 0.12), xtol: float = 1e-4,
                  truncation: float = 1e-12) -> BetaGap:
    """Smallest maximized gap over the one-parameter beta family at ratio c."""
    res = minimize_scalar(lambda b: half_gap(c, b, truncation), bounds=bounds, method="bounded",
                          options={"xatol": xtol})
    return BetaGap(float(res.x), float(res.fun))


def distributional_critical(c_lo: float = 2.7, c_hi: float = 2.95, tol_c: float = 1e-3,
                            beta_ttt: float | None = None, gap_tol: float = 1e-9,
                            truncation: float = 1e-12) -> CriticalResult:
    """Critical ratio at delta[p, q] = 1/2 on the truncated Poisson profile.

    With ``beta_ttt`` None the beta parameter is re-optimized at every probe.
    """
    chosen: dict[float, float] = {}

    def gap(c):
        if beta_ttt is not None:
            return half_gap(c, beta_ttt, truncation)
        bg = best_beta_gap(c, truncation=truncation)
        chosen[c] = bg.beta_ttt
        return bg.gap

    res = bisect_critical(gap, c_lo, c_hi, tol_c, gap_tol)
    extra = {"model": "distributional", "beta_ttt": beta_ttt}
    if chosen:
        c_near = min(chosen, key=lambda c: abs(c - res.c_star))
        extra["beta_ttt"] = chosen[c_near]
    return CriticalResult(res.c_star, res.lo, res.hi, res.probes, res.spot_checks, res.monotone,
                          "bisection", extra)


# ---------------------------------------------------------------------------
# omega scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OmegaRow:
    omega: float
    gap: float

    @property
    def loglog_gap(self) -> float:
        return math.log(self.gap) if self.gap > 0 else -math.inf


def omega_gap(profile: DegreeProfile, omega: float) -> OmegaRow:
    delta = omega_delta(profile, omega)
    eta_t, _ = eta_distributional(profile, delta)
    beta = maxent_beta(ModelSpec.boolean(profile.k), profile.k * eta_t)
    return OmegaRow(float(omega), max_gap(profile, delta, beta).gap)


def omega_scan(omegas, c: float, profile: DegreeProfile | None = None, k: int = 3, jobs: int = 1) -> list[OmegaRow]:
    profile = profile or poisson_profile(k, c)
    return parallel_map(partial(omega_gap, profile), [float(o) for o in omegas], jobs)


def write_omega_csv(rows, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "gap", "loglog_gap"])
        for r in rows:
            w.writerow([repr(r.omega), repr(r.gap), repr(r.loglog_gap)])
