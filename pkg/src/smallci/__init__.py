"""Smallest one-sided confidence intervals for discrete two-sample problems."""
from .barnard import build_barnard_partition
from .engine import LowerLimitTable, ProblemFamily, ScanConfig, binomial_difference, smallest_limits
from .inversion import invert_tests
from .med import DoseStudy, step_down_med
from .poisson import improved_limit, naive_limit
from .space import (
    OrderedPartition,
    SamplePoint,
    asymptotic_lower_scores,
    build_space,
    partition_from_scores,
    zstat_scores,
)
from .verify import coverage_profile, set_inclusion_compare

__version__ = "0.1.0"

__all__ = [
    "DoseStudy",
    "LowerLimitTable",
    "OrderedPartition",
    "ProblemFamily",
    "SamplePoint",
    "ScanConfig",
    "asymptotic_lower_scores",
    "binomial_difference",
    "build_barnard_partition",
    "build_space",
    "coverage_profile",
    "improved_limit",
    "invert_tests",
    "naive_limit",
    "partition_from_scores",
    "set_inclusion_compare",
    "smallest_limits",
    "step_down_med",
    "zstat_scores",
]
