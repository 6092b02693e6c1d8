"""CNF formulas, random generators and DIMACS input/output."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SEMANTICS = ("sat", "nae")


class GenerationError(RuntimeError):
    """A random formula could not be produced within the retry budget."""


@dataclass(frozen=True)
class Formula:
    n: int
    clauses: tuple[tuple[int, ...], ...]
    k: int
    model_kind: str = "sat"
    seed: int | None = None

    def __post_init__(self):
        if self.model_kind not in SEMANTICS:
            raise ValueError(f"unknown semantics {self.model_kind!r}; expected one of {SEMANTICS}")
        for cl in self.clauses:
            if len(cl) != self.k:
                raise ValueError(f"clause {cl} does not have width {self.k}")
            for lit in cl:
                if lit == 0 or abs(lit) > self.n:
                    raise ValueError(f"literal {lit} is outside [1, {self.n}]")

    @property
    def m(self) -> int:
        return len(self.clauses)

    def literals(self) -> np.ndarray:
        """(m, k) integer array of signed literals."""
        return np.array(self.clauses, dtype=int).reshape(self.m, self.k)

    def occurrences(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-variable counts of positive and negative occurrences (index 0 is variable 1)."""
        lits = self.literals().ravel()
        pos = np.bincount(lits[lits > 0], minlength=self.n + 1)[1:]
        neg = np.bincount(-lits[lits < 0], minlength=self.n + 1)[1:]
        return pos, neg

    def with_semantics(self, model_kind: str) -> "Formula":
        return Formula(self.n, self.clauses, self.k, model_kind, self.seed)


def literal_values(formula: Formula, assignment: Sequence[int]) -> np.ndarray:
    """(m, k) boolean array: truth value of every literal occurrence."""
    x = np.asarray(assignment, dtype=bool)
    lits = formula.literals()
    vals = x[np.abs(lits) - 1]
    return np.where(lits > 0, vals, ~vals)


def satisfies(formula: Formula, assignment: Sequence[int]) -> bool:
    """Clause-by-clause check, written independently of the enumerator."""
    for clause in formula.clauses:
        vals = [bool(assignment[abs(l) - 1]) == (l > 0) for l in clause]
        if formula.model_kind == "sat" and not any(vals):
            return False
        if formula.model_kind == "nae" and (all(vals) or not any(vals)):
            return False
    return True


def gen_uniform(n: int, c: float, k: int = 3, model_kind: str = "sat", seed: int = 0) -> Formula:
    """round(c n) clauses, each on k distinct uniform variables with uniform signs."""
    if n < k:
        raise ValueError(f"need at least k = {k} variables, got n = {n}")
    m = max(1, int(round(c * n)))
    rng = np.random.default_rng(seed)
    clauses = []
    for _ in range(m):
        var = rng.choice(n, size=k, replace=False) + 1
        sign = rng.integers(0, 2, size=k)
        clauses.append(tuple(int(v if s else -v) for v, s in zip(var, sign)))
    return Formula(n, tuple(clauses), k, model_kind, seed)


def round_profile(cells: Sequence[tuple[int, int]], weights: Sequence[float], n: int) -> list[int]:
    """Largest-remainder rounding of n * weights to integers summing to n."""
    raw = np.asarray(weights, dtype=float) * n
    counts = np.floor(raw).astype(int)
    short = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts.tolist()


def degree_sequence(profile, n: int) -> list[tuple[int, int]]:
    """Per-variable (p, q) pairs from the rounded profile, in cell order."""
    cells = [(int(p), int(q)) for p, q in zip(profile.p, profile.q)]
    counts = round_profile(cells, profile.d, n)
    return [cell for cell, cnt in zip(cells, counts) for _ in range(cnt)]


def gen_distributional(profile, n: int, seed: int = 0, model_kind: str = "sat",
                       max_swaps: int = 100_000) -> Formula:
    """Configuration-model formula whose variables follow the rounded degree profile.

    Literal occurrences are shuffled and cut into clauses; clauses repeating a
    variable are repaired by swapping one of their occurrences with a random
    occurrence elsewhere, which preserves every degree.
    """
    k = profile.k
    rng = np.random.default_rng(seed)
    seq = degree_sequence(profile, n)
    order = rng.permutation(n)
    seq = [seq[i] for i in order]
    occ = []
    for var, (p, q) in enumerate(seq, start=1):
        occ += [var] * p + [-var] * q
    if len(occ) % k:
        raise GenerationError(f"{len(occ)} literal occurrences cannot be cut into clauses of width {k}")
    if not occ:
        return Formula(n, (), k, model_kind, seed)
    occ = np.array(occ)[rng.permutation(len(occ))].reshape(-1, k)

    def bad_rows():
        v = np.sort(np.abs(occ), axis=1)
        return np.flatnonzero((v[:, 1:] == v[:, :-1]).any(axis=1))

    swaps = 0
    bad = bad_rows()
    while len(bad):
        if swaps >= max_swaps:
            raise GenerationError("retry budget exhausted while removing repeated variables")
        r = int(bad[0])
        j = int(rng.integers(k))
        r2, j2 = int(rng.integers(len(occ))), int(rng.integers(k))
        occ[r, j], occ[r2, j2] = occ[r2, j2], occ[r, j]
        swaps += 1
        bad = bad_rows()
    return Formula(n, tuple(tuple(int(l) for l in row) for row in occ), k, model_kind, seed)


def write_dimacs(formula: Formula, path, comments: Iterable[str] = ()) -> None:
    lines = [f"c {line}" for line in comments]
    lines.append(f"c semantics {formula.model_kind}")
    if formula.seed is not None:
        lines.append(f"c seed {formula.seed}")
    lines.append(f"p cnf {formula.n} {formula.m}")
    lines += [" ".join(map(str, cl)) + " 0" for cl in formula.clauses]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_dimacs(text: str, model_kind: str | None = None) -> Formula:
    n = m = None
    kind, seed = "sat", None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) == 3 and parts[1] == "semantics":
                kind = parts[2]
            elif len(parts) == 3 and parts[1] == "seed":
                seed = int(parts[2])
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"malformed header {line!r}")
            n, m = int(parts[2]), int(parts[3])
            continue
        if n is None:
            raise ValueError("clause before the 'p cnf' header")
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if n is None:
        raise ValueError("missing 'p cnf' header")
    if len(clauses) != m:
        raise ValueError(f"header announces {m} clauses, found {len(clauses)}")
    widths = {len(c) for c in clauses}
    if len(widths) > 1:
        raise ValueError(f"mixed clause widths {sorted(widths)}")
    k = widths.pop() if widths else 3
    return Formula(n, tuple(clauses), k, model_kind or kind, seed)


def read_dimacs(path, model_kind: str | None = None) -> Formula:
    return parse_dimacs(Path(path).read_text(), model_kind)
