"""Reference oracle: lower limits by inverting nested level-alpha tests.

For each ``delta`` the rejection region is the largest prefix of blocks whose
worst-case probability over ``{interest <= delta}`` stays at or below alpha.
This path accumulates block probabilities upward from zero and takes plain
numpy maxima, sharing nothing with the engine's in-place subtraction, so the
two routes check each other.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import (
    LowerLimitTable,
    ProblemFamily,
    ScanConfig,
    ScanGrid,
    _nuisance_rows,
    check_alpha,
    point_matrix,
    scan_grid,
)
from .errors import DomainError, InvariantError
from .kernels import LEVEL_TOL
from .space import OrderedPartition

__all__ = ["RejectionCurve", "rejection_curve", "s_delta", "invert_tests"]


@dataclass(frozen=True)
class RejectionCurve:
    deltas: np.ndarray
    rejected: np.ndarray  # s(delta): number of leading blocks rejected
    k0: int


def _prefix_sup(family: ProblemFamily, partition: OrderedPartition, grid: ScanGrid) -> np.ndarray:
    """``out[n-1, i]`` = sup over rows <= i and all nuisance of P(first n blocks)."""
    acc = np.zeros_like(grid.nuisance)
    out = np.empty((len(partition), len(grid)))
    for j, block in enumerate(partition.blocks):
        for p in block:
            acc += point_matrix(family, grid, p, generic=True)
        out[j] = np.maximum.accumulate(acc.max(axis=1))
    return out


def _count_rejected(sup: np.ndarray, alpha: float) -> np.ndarray:
    ok = sup <= alpha + LEVEL_TOL
    # P(first n blocks) grows with n, so the passing n form a prefix
    return ok.sum(axis=0) if ok.ndim > 1 else int(ok.sum())


def rejection_curve(family: ProblemFamily, partition: OrderedPartition, alpha: float,
                    config: ScanConfig | None = None) -> RejectionCurve:
    alpha = check_alpha(alpha)
    config = config or ScanConfig()
    grid = scan_grid(family, config)
    s = _count_rejected(_prefix_sup(family, partition, grid), alpha)
    if np.any(np.diff(s) > 0):
        raise InvariantError("s(delta) increases somewhere")
    return RejectionCurve(grid.interest, s.astype(np.int64), len(partition))


def s_delta(family: ProblemFamily, partition: OrderedPartition, delta: float, alpha: float,
            config: ScanConfig | None = None) -> int:
    """Number of leading blocks a level-alpha test of ``interest <= delta`` rejects."""
    alpha = check_alpha(alpha)
    config = config or ScanConfig()
    a, b = family.interest_range
    if not a <= delta <= b:
        raise DomainError(f"delta {delta!r} outside [{a}, {b}]")
    full = scan_grid(family, config).interest
    interest = full[full <= delta]
    if interest.size == 0 or interest[-1] != delta:
        interest = np.append(interest, float(delta))
    grid = ScanGrid(interest, _nuisance_rows(family, interest, config.nuisance_points))
    sup = _prefix_sup(family, partition, grid)[:, -1]
    return int(_count_rejected(sup, alpha))


def invert_tests(family: ProblemFamily, partition: OrderedPartition, alpha: float,
                 config: ScanConfig | None = None) -> LowerLimitTable:
    """Limit of block i: the grid value just below the first delta accepting it.

    The exact infimum lies between that grid value and the next one; the lower
    end is reported so coverage is not overstated.
    """
    curve = rejection_curve(family, partition, alpha, config)
    limits = {}
    for i, block in enumerate(partition.blocks, start=1):
        accept = np.flatnonzero(curve.rejected < i)
        t = int(accept[0])
        value = float(curve.deltas[max(t - 1, 0)])
        for p in block:
            limits[p] = value
    table = LowerLimitTable(partition, alpha, limits)
    table.check_class_membership()
    return table
