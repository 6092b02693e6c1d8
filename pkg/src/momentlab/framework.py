"""Combinatorial vocabulary shared by every model.

A model fixes a domain of values (``0``, ``1``, ``*``), a set of signs
(``+``, ``-``), a truth table mapping (value, sign) to a truth value
(``T``, ``F``, ``*``) and the set of allowed clause types (length-k words
over the truth values).  A first-moment point selects solutions through the
value fractions ``delta``, the sign fractions ``rho`` and the clause-type
fractions ``beta``; a second-moment point describes a couple of solutions
through the overlap matrix ``mu`` and the type-pair matrix ``gamma``.

All arrays are ordered like the corresponding tuple on the model
(``domain``, ``signs``, ``values``, ``types``) and are stored read-only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

SIMPLEX_TOL = 1e-9
MODEL_KINDS = ("boolean", "implicant", "nae")

TruthType = tuple[str, ...]


class ConstraintError(ValueError):
    """A point violates one of the polytope constraints."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def type_name(t: Sequence[str]) -> str:
    return "".join(t)


def enumerate_clause_types(model_kind: str, k: int) -> tuple[TruthType, ...]:
    """Allowed clause types for one of the three model kinds.

    boolean: every word over {T, F} except F^k.
    implicant: words over {T, F, *} containing at least one T.
    nae: words over {T, F} containing at least one T and one F.
    """
    if k < 1:
        raise ValueError(f"clause width must be positive, got {k}")
    if model_kind == "boolean":
        values, keep = ("T", "F"), (lambda t: "T" in t)
    elif model_kind == "implicant":
        values, keep = ("T", "F", "*"), (lambda t: "T" in t)
    elif model_kind == "nae":
        values, keep = ("T", "F"), (lambda t: "T" in t and "F" in t)
    else:
        raise ValueError(f"unknown model kind {model_kind!r}; expected one of {MODEL_KINDS}")
    return tuple(t for t in itertools.product(values, repeat=k) if keep(t))


_CLASSICAL_TABLE = {
    ("0", "+"): "F", ("0", "-"): "T",
    ("1", "+"): "T", ("1", "-"): "F",
    ("*", "+"): "*", ("*", "-"): "*",
}


@dataclass(frozen=True, eq=False)
class ModelSpec:
    kind: str
    k: int
    domain: tuple[str, ...]
    signs: tuple[str, ...]
    values: tuple[str, ...]
    truth_table: Mapping[tuple[str, str], str]
    types: tuple[TruthType, ...]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("clause width must be positive")
        for a in self.domain:
            for s in self.signs:
                v = self.truth_table.get((a, s))
                if v is None:
                    raise ValueError(f"truth table has no entry for value {a!r} and sign {s!r}")
                if v not in self.values:
                    raise ValueError(f"truth table maps ({a!r}, {s!r}) to unknown truth value {v!r}")
        if not self.types:
            raise ValueError("the set of allowed clause types is empty")
        for t in self.types:
            if len(t) != self.k or any(v not in self.values for v in t):
                raise ValueError(f"clause type {type_name(t)!r} is not a word of length {self.k} over {self.values}")
        if len(set(self.types)) != len(self.types):
            raise ValueError("duplicate clause types")

    # -- constructors ---------------------------------------------------
    @classmethod
    def of_kind(cls, kind: str, k: int = 3) -> "ModelSpec":
        types = enumerate_clause_types(kind, k)
        domain = ("0", "1", "*") if kind == "implicant" else ("0", "1")
        values = ("T", "F", "*") if kind == "implicant" else ("T", "F")
        table = {key: v for key, v in _CLASSICAL_TABLE.items() if key[0] in domain}
        return cls(kind=kind, k=k, domain=domain, signs=("+", "-"), values=values,
                   truth_table=table, types=types)

    @classmethod
    def boolean(cls, k: int = 3) -> "ModelSpec":
        return cls.of_kind("boolean", k)

    @classmethod
    def implicant(cls, k: int = 3) -> "ModelSpec":
        return cls.of_kind("implicant", k)

    @classmethod
    def nae(cls, k: int = 3) -> "ModelSpec":
        return cls.of_kind("nae", k)

    # -- index maps -----------------------------------------------------
    @cached_property
    def didx(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.domain)}

    @cached_property
    def sidx(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.signs)}

    @cached_property
    def vidx(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.values)}

    @cached_property
    def tidx(self) -> dict[str, int]:
        return {type_name(t): i for i, t in enumerate(self.types)}

    def type_index(self, t: str | Sequence[str]) -> int:
        return self.tidx[t if isinstance(t, str) else type_name(t)]

    # -- dense encodings ------------------------------------------------
    @cached_property
    def chi(self) -> np.ndarray:
        """Indicator chi[a, s, v] of value a and sign s yielding truth value v."""
        out = np.zeros((len(self.domain), len(self.signs), len(self.values)))
        for (a, s), v in self.truth_table.items():
            if a in self.didx and s in self.sidx:
                out[self.didx[a], self.sidx[s], self.vidx[v]] = 1.0
        out.setflags(write=False)
        return out

    @cached_property
    def type_counts(self) -> np.ndarray:
        """type_counts[t, v] = number of positions of type t holding v."""
        out = np.array([[t.count(v) for v in self.values] for t in self.types], dtype=float)
        out.setflags(write=False)
        return out

    @cached_property
    def codes(self) -> np.ndarray:
        """codes[t, i] = index into ``values`` of position i of type t."""
        out = np.array([[self.vidx[v] for v in t] for t in self.types], dtype=int)
        out.setflags(write=False)
        return out

    @cached_property
    def pair_counts(self) -> np.ndarray:
        """pair_counts[t, u, v, w] = number of positions i with t_i = v and u_i = w."""
        nt, nv = len(self.types), len(self.values)
        codes = self.codes
        out = np.zeros((nt, nt, nv, nv))
        for i in range(self.k):
            out[np.arange(nt)[:, None], np.arange(nt)[None, :], codes[:, i][:, None], codes[:, i][None, :]] += 1.0
        out.setflags(write=False)
        return out

    @cached_property
    def orbits(self) -> dict[str, tuple[int, ...]]:
        """Permutation orbits of the allowed types, keyed by a sorted representative."""
        groups: dict[str, list[int]] = {}
        for i, t in enumerate(self.types):
            groups.setdefault(self.orbit_key(t), []).append(i)
        return {key: tuple(ix) for key, ix in groups.items()}

    def orbit_key(self, t: str | Sequence[str]) -> str:
        order = {v: i for i, v in enumerate(self.values)}
        return type_name(sorted(t, key=order.__getitem__))

    @property
    def closed_under_permutation(self) -> bool:
        allowed = set(self.types)
        return all(tuple(p) in allowed for t in self.types for p in itertools.permutations(t))

    # -- serialization --------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "domain": list(self.domain),
            "signs": list(self.signs),
            "values": list(self.values),
            "truth_table": [[a, s, v] for (a, s), v in sorted(self.truth_table.items())],
            "types": [type_name(t) for t in self.types],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ModelSpec":
        if "types" not in doc:
            return cls.of_kind(doc["kind"], int(doc.get("k", 3)))
        return cls(
            kind=doc.get("kind", "custom"),
            k=int(doc["k"]),
            domain=tuple(doc["domain"]),
            signs=tuple(doc["signs"]),
            values=tuple(doc["values"]),
            truth_table={(a, s): v for a, s, v in doc["truth_table"]},
            types=tuple(tuple(t) for t in doc["types"]),
        )


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------

def _check_simplex(name: str, arr: np.ndarray, tol: float = SIMPLEX_TOL) -> None:
    if not np.all(np.isfinite(arr)):
        raise ConstraintError(f"{name} has non-finite entries")
    if arr.min(initial=0.0) < -tol:
        raise ConstraintError(f"{name} has a negative entry ({arr.min():.3g})")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise ConstraintError(f"{name} must sum to 1 (sum = {total:.12g})")


def _vector(values, labels: Sequence[str], name: str) -> np.ndarray:
    if isinstance(values, Mapping):
        unknown = set(values) - set(labels)
        if unknown:
            raise ConstraintError(f"{name} has unknown keys {sorted(unknown)}")
        return np.array([float(values.get(x, 0.0)) for x in labels])
    arr = np.asarray(values, dtype=float)
    if arr.shape != (len(labels),):
        raise ConstraintError(f"{name} must have {len(labels)} entries, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class FirstMomentPoint:
    delta: np.ndarray
    rho: np.ndarray
    beta: np.ndarray

    @classmethod
    def create(cls, model: ModelSpec, delta, rho, beta) -> "FirstMomentPoint":
        """Build and validate a point; mappings are keyed by value/sign/type names."""
        if isinstance(beta, Mapping):
            beta = {(k if isinstance(k, str) else type_name(k)): v for k, v in beta.items()}
        point = cls(
            delta=_frozen(_vector(delta, model.domain, "delta")),
            rho=_frozen(_vector(rho, model.signs, "rho")),
            beta=_frozen(_vector(beta, [type_name(t) for t in model.types], "beta")),
        )
        validate_first_moment(model, point)
        return point

    def to_dict(self, model: ModelSpec) -> dict:
        return {
            "delta": dict(zip(model.domain, map(float, self.delta))),
            "rho": dict(zip(model.signs, map(float, self.rho))),
            "beta": {type_name(t): float(b) for t, b in zip(model.types, self.beta)},
        }

    @classmethod
    def from_dict(cls, model: ModelSpec, doc: Mapping) -> "FirstMomentPoint":
        return cls.create(model, doc["delta"], doc["rho"], doc["beta"])


@dataclass(frozen=True, eq=False)
class SecondMomentPoint:
    mu: np.ndarray
    gamma: np.ndarray

    @classmethod
    def create(cls, model: ModelSpec, mu, gamma, fm: FirstMomentPoint | None = None) -> "SecondMomentPoint":
        mu = np.asarray(_matrix(mu, model.domain, "mu"), dtype=float)
        gamma = np.asarray(_matrix(gamma, [type_name(t) for t in model.types], "gamma"), dtype=float)
        point = cls(mu=_frozen(mu), gamma=_frozen(gamma))
        validate_second_moment(model, point, fm)
        return point

    def to_dict(self, model: ModelSpec) -> dict:
        names = [type_name(t) for t in model.types]
        return {
            "mu": {a: dict(zip(model.domain, map(float, row))) for a, row in zip(model.domain, self.mu)},
            "gamma": {t: {u: float(g) for u, g in zip(names, row) if g != 0.0}
                      for t, row in zip(names, self.gamma)},
        }

    @classmethod
    def from_dict(cls, model: ModelSpec, doc: Mapping, fm: FirstMomentPoint | None = None) -> "SecondMomentPoint":
        return cls.create(model, doc["mu"], doc["gamma"], fm)


def _matrix(values, labels: Sequence[str], name: str) -> np.ndarray:
    if isinstance(values, Mapping):
        out = np.zeros((len(labels), len(labels)))
        pos = {x: i for i, x in enumerate(labels)}
        for a, row in values.items():
            for b, v in row.items():
                if a not in pos or b not in pos:
                    raise ConstraintError(f"{name} has unknown key ({a!r}, {b!r})")
                out[pos[a], pos[b]] = float(v)
        return out
    arr = np.asarray(values, dtype=float)
    if arr.shape != (len(labels), len(labels)):
        raise ConstraintError(f"{name} must be {len(labels)}x{len(labels)}, got {arr.shape}")
    return arr


def validate_first_moment(model: ModelSpec, point: FirstMomentPoint, tol: float = SIMPLEX_TOL) -> None:
    if point.delta.shape != (len(model.domain),) or point.rho.shape != (len(model.signs),) \
            or point.beta.shape != (len(model.types),):
        raise ConstraintError("point arrays do not match the model dimensions")
    _check_simplex("delta", point.delta, tol)
    _check_simplex("rho", point.rho, tol)
    _check_simplex("beta", point.beta, tol)


def validate_second_moment(model: ModelSpec, point: SecondMomentPoint,
                           fm: FirstMomentPoint | None = None, tol: float = SIMPLEX_TOL) -> None:
    _check_simplex("mu", point.mu.ravel(), tol)
    _check_simplex("gamma", point.gamma.ravel(), tol)
    if fm is None:
        return
    for name, got, want in (
        ("mu row sums", point.mu.sum(axis=1), fm.delta),
        ("mu column sums", point.mu.sum(axis=0), fm.delta),
        ("gamma row sums", point.gamma.sum(axis=1), fm.beta),
        ("gamma column sums", point.gamma.sum(axis=0), fm.beta),
    ):
        err = np.abs(got - want).max()
        if err > tol:
            raise ConstraintError(f"{name} differ from the first-moment marginals by {err:.3g}")


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------

def eta(model: ModelSpec, point: FirstMomentPoint) -> np.ndarray:
    """Fraction of literal occurrences carrying each truth value."""
    return eta_from(model, point.delta, point.rho)


def eta_from(model: ModelSpec, delta: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return np.einsum("asv,a,s->v", model.chi, delta, rho)


def epsilon(model: ModelSpec, mu: np.ndarray | SecondMomentPoint, rho) -> np.ndarray:
    """eps[v, w]: fraction of occurrences true-valued v under the first and w under the second solution."""
    if isinstance(mu, SecondMomentPoint):
        mu = mu.mu
    rho = rho.rho if isinstance(rho, FirstMomentPoint) else np.asarray(rho, dtype=float)
    return np.einsum("asv,bsw,ab,s->vw", model.chi, model.chi, mu, rho)


def surfaces(model: ModelSpec, beta) -> np.ndarray:
    beta = beta.beta if isinstance(beta, FirstMomentPoint) else np.asarray(beta, dtype=float)
    return beta @ model.type_counts


def pair_surfaces(model: ModelSpec, gamma) -> np.ndarray:
    gamma = gamma.gamma if isinstance(gamma, SecondMomentPoint) else np.asarray(gamma, dtype=float)
    return np.einsum("tu,tuvw->vw", gamma, model.pair_counts)


def is_symmetric(model: ModelSpec, beta, tol: float = 1e-12) -> bool:
    """True iff beta is constant on every permutation orbit of clause types."""
    beta = beta.beta if isinstance(beta, FirstMomentPoint) else np.asarray(beta, dtype=float)
    if not model.closed_under_permutation:
        return False
    return all(np.ptp(beta[list(ix)]) <= tol for ix in model.orbits.values())


def beta_from_orbits(model: ModelSpec, per_type: Mapping[str, float]) -> np.ndarray:
    """Expand one per-type value per orbit (e.g. ``{"TFF": 0.19, ...}``) to the full beta vector.

    The values are per type, not per orbit: an orbit of size three holding
    0.19 contributes 0.57 to the total mass.  Missing orbits get zero.
    """
    out = np.zeros(len(model.types))
    seen = set()
    for key, value in per_type.items():
        okey = model.orbit_key(key)
        if okey not in model.orbits:
            raise ConstraintError(f"{key!r} is not an allowed clause type")
        if okey in seen:
            raise ConstraintError(f"orbit of {key!r} given twice")
        seen.add(okey)
        out[list(model.orbits[okey])] = float(value)
    return out


def orbit_values(model: ModelSpec, beta) -> dict[str, float]:
    beta = beta.beta if isinstance(beta, FirstMomentPoint) else np.asarray(beta, dtype=float)
    return {key: float(beta[ix[0]]) for key, ix in model.orbits.items()}
