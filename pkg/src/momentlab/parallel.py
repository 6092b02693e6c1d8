"""Worker-count resolution and an order-preserving parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

JOBS_ENV = "MOMENTLAB_JOBS"


def resolve_jobs(jobs: int | None = None) -> int:
    """Explicit value, else the MOMENTLAB_JOBS variable, else the core count."""
    if jobs is None:
        env = os.environ.get(JOBS_ENV)
        if env:
            try:
                jobs = int(env)
            except ValueError:
                raise ValueError(f"{JOBS_ENV} must be an integer, got {env!r}") from None
        else:
            jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ValueError(f"worker count must be positive, got {jobs}")
    return jobs


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int | None = 1) -> list[R]:
    """Map ``fn`` over ``items`` keeping input order, so results never depend on ``jobs``."""
    items: Sequence[T] = list(items)
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))
