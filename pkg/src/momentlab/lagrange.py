"""Inner and outer maximization of the second-moment rate.

The inner problem maximizes ``sum gamma ln(M / gamma)`` over couplings gamma
of beta with itself, where ``M[t, u] = prod_i eps[t_i, u_i]``.  Its maximizer
has the product form ``gamma = f_t g_u M[t, u]``, which is exactly the limit
of iterative proportional fitting on M.

The outer problem searches the free overlap variables.  For a fixed overlap
the inner maximum does not depend on the clause ratio c, so the log rate is
affine in c; ``SecondMomentLandscape`` caches the two coefficients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import xlogy

from .framework import (
    ConstraintError,
    FirstMomentPoint,
    ModelSpec,
    SecondMomentPoint,
    epsilon,
    pair_surfaces,
)
from .parallel import parallel_map
from .rates import affine_rate, entropy, t1_coefficient


class InfeasibleError(ValueError):
    """No coupling with the requested marginals is supported by the kernel."""


class BoundaryError(ValueError):
    """A stationarity residual was requested at a point with a zero overlap entry."""


# ---------------------------------------------------------------------------
# inner problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Multipliers:
    f: np.ndarray
    g: np.ndarray


@dataclass(frozen=True)
class GammaFit:
    gamma: np.ndarray
    multipliers: Multipliers
    iterations: int
    residual: float
    converged: bool
    history: tuple[float, ...] = ()

    def value(self, kernel: np.ndarray) -> float:
        """sum gamma ln(kernel / gamma) at the fitted coupling."""
        return float(xlogy(self.gamma, kernel).sum() - xlogy(self.gamma, self.gamma).sum())


def kernel(model: ModelSpec, eps: np.ndarray) -> np.ndarray:
    """M[t, u] = prod_i eps[t_i, u_i]."""
    codes = model.codes
    out = np.ones((len(model.types), len(model.types)))
    for i in range(model.k):
        out *= eps[codes[:, i][:, None], codes[:, i][None, :]]
    return out


def ipf(kern: np.ndarray, row: np.ndarray, col: np.ndarray | None = None, tol: float = 1e-12,
        max_iter: int = 100_000, record: bool = False) -> GammaFit:
    """Scale ``kern`` to the given row and column marginals.

    Each sweep fits the rows and then the columns exactly, so the reported
    residual is the L1 error of the row marginals, which cannot increase
    from one sweep to the next.
    """
    kern = np.asarray(kern, dtype=float)
    row = np.asarray(row, dtype=float)
    col = row if col is None else np.asarray(col, dtype=float)
    if abs(row.sum() - col.sum()) > 1e-9:
        raise InfeasibleError("row and column marginals carry different mass")
    rpos, cpos = row > 0, col > 0
    if np.any(kern[np.ix_(rpos, cpos)].sum(axis=1) <= 0) or np.any(kern[np.ix_(rpos, cpos)].sum(axis=0) <= 0):
        raise InfeasibleError("the kernel has a zero row or column where the marginal is positive")

    f = rpos.astype(float)
    g = cpos.astype(float)
    history: list[float] = []
    err = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        kg = kern @ g
        f = np.divide(row, kg, out=np.zeros_like(row), where=rpos)
        kf = kern.T @ f
        g = np.divide(col, kf, out=np.zeros_like(col), where=cpos)
        err = float(np.abs(f * (kern @ g) - row).sum())
        if record:
            history.append(err)
        if err < tol:
            break
    gamma = f[:, None] * kern * g[None, :]
    return GammaFit(gamma=gamma, multipliers=Multipliers(f=f, g=g), iterations=it, residual=err,
                    converged=err < tol, history=tuple(history))


def fit_gamma(model: ModelSpec, beta, eps, tol: float = 1e-12, max_iter: int = 100_000,
              record: bool = False) -> GammaFit:
    """Maximum-entropy coupling of beta with itself tilted by the kernel of eps."""
    beta = beta.beta if isinstance(beta, FirstMomentPoint) else np.asarray(beta, dtype=float)
    return ipf(kernel(model, np.asarray(eps, dtype=float)), beta, beta, tol=tol, max_iter=max_iter, record=record)


# ---------------------------------------------------------------------------
# overlap parametrizations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OverlapParam:
    """Affine map from free variables x to the overlap matrix mu = base + sum_j x_j basis[j]."""

    names: tuple[str, ...]
    base: np.ndarray
    basis: np.ndarray
    upper: np.ndarray
    independence: np.ndarray
    identical: np.ndarray

    def mu(self, x) -> np.ndarray:
        return self.base + np.tensordot(np.asarray(x, dtype=float), self.basis, axes=1)

    def feasible(self, x, tol: float = 1e-14) -> bool:
        return bool(self.mu(x).min() >= -tol)


def boolean_overlap(delta1: float) -> OverlapParam:
    """mu := mu_{0,1}; mu_{1,1} = delta - mu, mu_{0,0} = 1 - delta - mu, mu_{1,0} = mu."""
    base = np.array([[1.0 - delta1, 0.0], [0.0, delta1]])
    basis = np.array([[[-1.0, 1.0], [1.0, -1.0]]])
    return OverlapParam(names=("mu",), base=base, basis=basis,
                        upper=np.array([min(delta1, 1.0 - delta1)]),
                        independence=np.array([delta1 * (1.0 - delta1)]), identical=np.zeros(1))


def implicant_overlap(delta1: float, alpha: float) -> OverlapParam:
    """(mu, nu, pi, pi') := (mu_{*,*}, mu_{1,1}, mu_{1,*}, mu_{*,1}) over the domain order (0, 1, *)."""
    z, o, s = 0, 1, 2
    base = np.zeros((3, 3))
    base[o, z] = base[z, o] = delta1
    base[s, z] = base[z, s] = alpha
    base[z, z] = 1.0 - 2.0 * delta1 - 2.0 * alpha
    basis = np.zeros((4, 3, 3))
    # mu
    basis[0, s, s] = 1; basis[0, s, z] = -1; basis[0, z, s] = -1; basis[0, z, z] = 1
    # nu
    basis[1, o, o] = 1; basis[1, o, z] = -1; basis[1, z, o] = -1; basis[1, z, z] = 1
    # pi
    basis[2, o, s] = 1; basis[2, o, z] = -1; basis[2, z, s] = -1; basis[2, z, z] = 1
    # pi'
    basis[3, s, o] = 1; basis[3, z, o] = -1; basis[3, s, z] = -1; basis[3, z, z] = 1
    upper = np.array([alpha, delta1, min(delta1, alpha), min(delta1, alpha)])
    ind = np.array([alpha**2, delta1**2, alpha * delta1, alpha * delta1])
    return OverlapParam(names=("mu", "nu", "pi", "pi_prime"), base=base, basis=basis, upper=upper,
                        independence=ind, identical=np.array([alpha, delta1, 0.0, 0.0]))


def overlap_for(model: ModelSpec, fm: FirstMomentPoint) -> OverlapParam:
    if model.domain == ("0", "1"):
        return boolean_overlap(float(fm.delta[1]))
    if model.domain == ("0", "1", "*"):
        return implicant_overlap(float(fm.delta[1]), float(fm.delta[2]))
    raise ValueError(f"no overlap parametrization for domain {model.domain}")


# ---------------------------------------------------------------------------
# stationarity
# ---------------------------------------------------------------------------

def stationarity_residual_mu(model: ModelSpec, fm: FirstMomentPoint, sm: SecondMomentPoint, c: float,
                             rho=None, param: OverlapParam | None = None) -> dict[str, float]:
    """Derivative of the Lagrangian along each free overlap variable.

    Uses -sum dmu ln mu + c sum dmu sum_s rho_s Xi / eps at (a x s, b x s),
    with gamma held at its value in ``sm`` (the envelope argument).
    """
    rho = fm.rho if rho is None else np.asarray(rho, dtype=float)
    param = param or overlap_for(model, fm)
    mu = np.asarray(sm.mu, dtype=float)
    if mu.min() <= 0:
        raise BoundaryError("overlap has a zero entry; stationarity is only defined in the interior")
    eps = epsilon(model, mu, rho)
    xi = pair_surfaces(model, sm.gamma)
    ratio = np.divide(xi, eps, out=np.zeros_like(xi), where=eps > 0)
    weight = np.einsum("asv,bsw,s,vw->ab", model.chi, model.chi, rho, ratio)
    grad = -np.einsum("jab,ab->j", param.basis, np.log(mu)) + c * np.einsum("jab,ab->j", param.basis, weight)
    return dict(zip(param.names, map(float, grad)))


# ---------------------------------------------------------------------------
# outer problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LandscapePoint:
    x: tuple[float, ...]
    mu: np.ndarray | None
    entropy: float
    inner: float
    fit: GammaFit | None

    @property
    def feasible(self) -> bool:
        return self.mu is not None and math.isfinite(self.inner)


class SecondMomentLandscape:
    """log T2 over the free overlap variables at fixed first-moment settings.

    Evaluations are cached by the exact coordinates, which makes repeated
    probes at different clause ratios cheap.
    """

    def __init__(self, model: ModelSpec, fm: FirstMomentPoint, param: OverlapParam | None = None,
                 ipf_tol: float = 1e-12, max_iter: int = 100_000):
        self.model = model
        self.fm = fm
        self.param = param or overlap_for(model, fm)
        self.ipf_tol = ipf_tol
        self.max_iter = max_iter
        self.h_delta = entropy(fm.delta)
        self.t1_coef = t1_coefficient(model, fm)
        self._cache: dict[tuple[float, ...], LandscapePoint] = {}

    def evaluate(self, x) -> LandscapePoint:
        key = tuple(float(v) for v in np.atleast_1d(x))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        mu = self.param.mu(key)
        if mu.min() < -1e-14:
            pt = LandscapePoint(key, None, -math.inf, -math.inf, None)
        else:
            mu = np.clip(mu, 0.0, None)
            eps = epsilon(self.model, mu, self.fm.rho)
            kern = kernel(self.model, eps)
            try:
                fit = ipf(kern, self.fm.beta, tol=self.ipf_tol, max_iter=self.max_iter)
                inner = fit.value(kern)
            except InfeasibleError:
                fit, inner = None, -math.inf
            pt = LandscapePoint(key, mu, entropy(mu), inner, fit)
        self._cache[key] = pt
        return pt

    def log_t1(self, c: float) -> float:
        return affine_rate(self.h_delta, c, self.t1_coef)

    def log_t2(self, x, c: float) -> float:
        pt = self.evaluate(x)
        if pt.mu is None:
            return -math.inf
        return affine_rate(pt.entropy, c, pt.inner)

    def gap(self, x, c: float) -> float:
        return self.log_t2(x, c) - 2.0 * self.log_t1(c)

    def ratio(self, x, floor: float = 1e-10) -> float:
        """Smallest c at which this overlap makes the gap positive (inf if never)."""
        pt = self.evaluate(x)
        if not pt.feasible:
            return math.inf
        slope = pt.inner - 2.0 * self.t1_coef
        if slope <= floor:
            return math.inf
        return max(2.0 * self.h_delta - pt.entropy, 0.0) / slope

    def second_moment_point(self, x) -> SecondMomentPoint:
        pt = self.evaluate(x)
        if not pt.feasible:
            raise ConstraintError(f"overlap {pt.x} is infeasible")
        mu, gamma = np.array(pt.mu), np.array(pt.fit.gamma)
        mu.setflags(write=False)
        gamma.setflags(write=False)
        return SecondMomentPoint(mu=mu, gamma=gamma)


@dataclass(frozen=True)
class MaximizeOptions:
    grid: int = 200
    grid_nd: int = 12
    tol: float = 1e-10
    max_iter: int = 100_000
    ipf_tol: float = 1e-12
    residual_tol: float = 1e-6
    max_polish: int = 6
    jobs: int = 1


@dataclass(frozen=True)
class LocalMax:
    x: tuple[float, ...]
    log_rate: float


@dataclass(frozen=True)
class MaximizerReport:
    sm: SecondMomentPoint
    x: dict[str, float]
    log_rate: float
    gap: float
    residuals: dict[str, float]
    iterations: int
    converged: bool
    boundary: bool
    local_maxima: tuple[LocalMax, ...] = field(default=())

    def to_dict(self, model: ModelSpec) -> dict:
        return {
            "x": self.x,
            "log_rate": self.log_rate,
            "gap": self.gap,
            "residuals": self.residuals,
            "iterations": self.iterations,
            "converged": self.converged,
            "boundary": self.boundary,
            "local_maxima": [{"x": list(m.x), "log_rate": m.log_rate} for m in self.local_maxima],
            "point": self.sm.to_dict(model),
        }


def _grid_axes(param: OverlapParam, n: int) -> list[np.ndarray]:
    return [np.linspace(0.0, hi, n + 1) for hi in param.upper]


def _eval_chunk(landscape: SecondMomentLandscape, c: float, xs: list[tuple[float, ...]]) -> list[float]:
    return [landscape.log_t2(x, c) for x in xs]


def maximize_t2(model: ModelSpec, fm: FirstMomentPoint, c: float, options: MaximizeOptions | None = None,
                landscape: SecondMomentLandscape | None = None) -> MaximizerReport:
    """Maximize log T2 over the free overlap variables and the inner coupling.

    Grid scan of the feasibility box, then local polish (bounded Brent in one
    dimension, Nelder-Mead otherwise) from each grid local maximum.  The
    independence point is always a candidate.
    """
    opts = options or MaximizeOptions()
    land = landscape or SecondMomentLandscape(model, fm, ipf_tol=opts.ipf_tol, max_iter=opts.max_iter)
    param = land.param
    dim = len(param.names)
    axes = _grid_axes(param, opts.grid if dim == 1 else opts.grid_nd)
    index = [ix for ix in itertools.product(*(range(len(a)) for a in axes))]
    xs = [tuple(float(axes[j][i]) for j, i in enumerate(ix)) for ix in index]
    keep = [param.feasible(x) for x in xs]
    index = [ix for ix, k in zip(index, keep) if k]
    xs = [x for x, k in zip(xs, keep) if k]
    if not xs:
        raise ConstraintError("every grid point of the overlap box is infeasible")

    jobs = max(1, opts.jobs)
    if jobs > 1:
        chunks = [xs[i::jobs] for i in range(jobs)]
        parts = parallel_map(partial(_eval_chunk, land, c), chunks, jobs)
        vals_by_x = {x: v for chunk, part in zip(chunks, parts) for x, v in zip(chunk, part)}
        values = [vals_by_x[x] for x in xs]
    else:
        values = _eval_chunk(land, c, xs)
    table = dict(zip(index, values))

    # grid local maxima (axis neighbours only)
    peaks = []
    for ix, v in table.items():
        if not math.isfinite(v):
            continue
        is_peak = True
        for j in range(dim):
            for step in (-1, 1):
                nb = ix[:j] + (ix[j] + step,) + ix[j + 1:]
                if table.get(nb, -math.inf) > v:
                    is_peak = False
        if is_peak:
            peaks.append(ix)
    if not peaks:
        raise ConstraintError("no finite value of the second-moment rate on the grid")
    peaks.sort(key=lambda ix: (-table[ix], tuple(axes[j][i] for j, i in enumerate(ix))))

    candidates: list[LocalMax] = []
    iterations = 0
    for ix in peaks[: opts.max_polish]:
        x0 = np.array([axes[j][i] for j, i in enumerate(ix)])
        x, val, nit = _polish(land, c, x0, [(axes[j][max(i - 1, 0)], axes[j][min(i + 1, len(axes[j]) - 1)])
                                           for j, i in enumerate(ix)], opts.tol)
        iterations += nit
        if val < table[ix]:
            x, val = tuple(map(float, x0)), table[ix]
        candidates.append(LocalMax(tuple(map(float, x)), float(val)))
    ind = tuple(map(float, param.independence))
    candidates.append(LocalMax(ind, land.log_t2(ind, c)))
    candidates.sort(key=lambda m: (-m.log_rate, m.x))
    best = candidates[0]

    sm = land.second_moment_point(best.x)
    boundary = bool(sm.mu.min() <= 1e-12)
    residuals: dict[str, float] = {}
    if not boundary:
        residuals = stationarity_residual_mu(model, fm, sm, c, param=param)
    fit = land.evaluate(best.x).fit
    ok = fit.converged and (boundary or max(abs(r) for r in residuals.values()) < opts.residual_tol)
    return MaximizerReport(
        sm=sm,
        x=dict(zip(param.names, best.x)),
        log_rate=best.log_rate,
        gap=best.log_rate - 2.0 * land.log_t1(c),
        residuals=residuals,
        iterations=iterations,
        converged=bool(ok),
        boundary=boundary,
        local_maxima=tuple(candidates[:-1] if candidates[-1].x == ind else candidates),
    )


def _polish(land: SecondMomentLandscape, c: float, x0: np.ndarray, bounds, tol: float):
    if len(x0) == 1:
        lo, hi = bounds[0]
        if hi <= lo:
            return x0, land.log_t2(x0, c), 0
        res = minimize_scalar(lambda t: -land.log_t2((t,), c), bounds=(lo, hi), method="bounded",
                              options={"xatol": tol})
        return np.array([res.x]), -float(res.fun), int(res.nfev)

    def obj(x):
        v = land.log_t2(tuple(x), c)
        return -v if math.isfinite(v) else 1e30

    res = minimize(obj, x0, method="Nelder-Mead",
                   options={"xatol": tol, "fatol": 1e-14, "maxiter": 20_000})
    return res.x, -float(res.fun), int(res.nit)
