"""Desk-scale experiments on random formulas and their exhaustive solution sets."""

from .enumerate import SolutionSample, enumerate_solutions
from .formula import (
    Formula,
    GenerationError,
    gen_distributional,
    gen_uniform,
    parse_dimacs,
    read_dimacs,
    satisfies,
    write_dimacs,
)
from .stats import (
    delta_pq_statistics,
    hamming_similarity_histogram,
    split_free_fixed,
    surface_independence_ratio,
    true_surface,
    unisat_independence_ratio,
)

__all__ = [
    "Formula", "GenerationError", "SolutionSample", "delta_pq_statistics", "enumerate_solutions",
    "gen_distributional", "gen_uniform", "hamming_similarity_histogram", "parse_dimacs", "read_dimacs",
    "satisfies", "split_free_fixed", "surface_independence_ratio", "true_surface",
    "unisat_independence_ratio", "write_dimacs",
]
