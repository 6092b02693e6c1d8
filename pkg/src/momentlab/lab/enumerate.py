"""Exhaustive solution enumeration by backtracking with unit propagation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formula import Formula


@dataclass(frozen=True)
class SolutionSample:
    formula: Formula
    solutions: np.ndarray  # (count, n) uint8
    exhaustive: bool

    @property
    def count(self) -> int:
        return len(self.solutions)


class _LimitReached(Exception):
    pass


def enumerate_solutions(formula: Formula, limit: int | None = None) -> SolutionSample:
    """All satisfying assignments in lexicographic order (variable 1 first, 0 before 1).

    Under NAE semantics a clause forces its last free literal whenever the
    assigned ones all agree.
    """
    n, k = formula.n, formula.k
    nae = formula.model_kind == "nae"
    clauses = [tuple(cl) for cl in formula.clauses]
    occ: list[list[int]] = [[] for _ in range(n + 1)]
    for ci, cl in enumerate(clauses):
        for lit in set(abs(l) for l in cl):
            occ[lit].append(ci)
    val = [-1] * (n + 1)
    found: list[list[int]] = []

    def check(ci: int, pending: list) -> bool:
        n_true = n_false = 0
        free = 0
        for lit in clauses[ci]:
            x = val[abs(lit)]
            if x < 0:
                free_lit = lit
                free += 1
            elif (x == 1) == (lit > 0):
                n_true += 1
            else:
                n_false += 1
        if nae:
            if free == 0:
                return n_true > 0 and n_false > 0
            if free == 1 and (n_true == 0 or n_false == 0):
                want_true = n_true == 0
                pending.append((abs(free_lit), int(want_true == (free_lit > 0))))
            return True
        if n_true:
            return True
        if free == 0:
            return False
        if free == 1:
            pending.append((abs(free_lit), int(free_lit > 0)))
        return True

    def assign(var: int, value: int, trail: list) -> bool:
        pending = [(var, value)]
        while pending:
            v, b = pending.pop()
            if val[v] >= 0:
                if val[v] != b:
                    return False
                continue
            val[v] = b
            trail.append(v)
            for ci in occ[v]:
                if not check(ci, pending):
                    return False
        return True

    def search(start: int) -> None:
        v = start
        while v <= n and val[v] >= 0:
            v += 1
        if v > n:
            found.append(val[1:])
            if limit is not None and len(found) >= limit:
                raise _LimitReached
            return
        for b in (0, 1):
            trail: list[int] = []
            if assign(v, b, trail):
                search(v + 1)
            for u in trail:
                val[u] = -1

    if limit is not None and limit < 1:
        raise ValueError("limit must be positive")
    exhaustive = True
    try:
        search(1)
    except _LimitReached:
        exhaustive = False
    sols = np.array(found, dtype=np.uint8).reshape(len(found), n)
    return SolutionSample(formula, sols, exhaustive)
