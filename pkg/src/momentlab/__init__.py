"""Second-moment analysis of random k-SAT: rates, fixed points, critical ratios and a small lab."""

__version__ = "0.1.0"

from .framework import (
    ConstraintError,
    FirstMomentPoint,
    ModelSpec,
    SecondMomentPoint,
    enumerate_clause_types,
    epsilon,
    eta,
    is_symmetric,
    pair_surfaces,
    surfaces,
)
from .rates import (
    independence_point,
    nae_rate,
    plain_solutions_rate,
    ratio_gap_at_independence,
    t1_log_rate,
    t2_log_rate,
)

__all__ = [
    "ConstraintError", "FirstMomentPoint", "ModelSpec", "SecondMomentPoint", "enumerate_clause_types",
    "epsilon", "eta", "independence_point", "is_symmetric", "nae_rate", "pair_surfaces",
    "plain_solutions_rate", "ratio_gap_at_independence", "surfaces", "t1_log_rate", "t2_log_rate",
]
