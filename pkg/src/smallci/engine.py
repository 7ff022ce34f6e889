"""Smallest one-sided lower limits under a given ordered partition.

For block ``j`` let ``S_j`` be the union of the first ``j`` blocks and

    f_j(theta) = min over nuisance in D(theta) of P(S_j complement).

The lower limit of block ``j`` is the supremum of the set of ``theta`` below
which ``f_j`` never drops under ``1 - alpha``.  On the interest grid this is
resolved conservatively: if ``f_j`` first fails at grid index ``k`` the limit
is ``grid[k - 1]`` (``grid[0]`` when ``k == 0``, the last grid value when it
never fails), so every grid value below the emitted limit has been checked.

The complement probabilities live in one (interest x nuisance) matrix that is
updated in place by subtracting each block's pmf.  Because ``f_j <= f_{j-1}``
the failure index can only move left, so each block only touches the rows up
to the previous block's failure index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from scipy.special import gammaln

from .dist import binom_pmf_array
from .errors import DomainError, InvariantError
from .kernels import first_below, get_kernels
from .space import OrderedPartition, SamplePoint, SampleSpace, build_space

__all__ = [
    "ScanConfig",
    "ProblemFamily",
    "ScanGrid",
    "ScanOutcome",
    "LowerLimitTable",
    "binomial_difference",
    "scan_grid",
    "point_matrix",
    "accumulate_point",
    "tail_matrix",
    "f_of_delta",
    "limit_index",
    "smallest_limits",
    "check_alpha",
]

INCREMENTAL_TOL = 1e-10


@dataclass(frozen=True)
class ScanConfig:
    """Numerical policy for grid scans.

    ``tie_tol`` defaults to ``delta_step``.  ``trunc_mass`` only matters for
    infinite sample spaces.
    """

    delta_step: float = 0.001
    nuisance_points: int = 1001
    tie_tol: float | None = None
    trunc_mass: float = 1e-10
    check_incremental: bool = True

    def __post_init__(self):
        if not self.delta_step > 0:
            raise DomainError(f"delta_step must be positive, got {self.delta_step!r}")
        if int(self.nuisance_points) != self.nuisance_points or self.nuisance_points < 2:
            raise DomainError(f"nuisance_points must be an integer >= 2, got {self.nuisance_points!r}")
        if not 0 <= self.trunc_mass < 1e-6:
            raise DomainError(f"trunc_mass must lie in [0, 1e-6), got {self.trunc_mass!r}")
        if self.tie_tol is None:
            object.__setattr__(self, "tie_tol", self.delta_step)
        elif self.tie_tol < 0:
            raise DomainError("tie_tol must be nonnegative")

    @classmethod
    def verification(cls, **overrides) -> "ScanConfig":
        """Finer grid used to probe between construction grid points."""
        return cls(**{"delta_step": 0.0005, "nuisance_points": 2001, **overrides})


@dataclass(frozen=True, eq=False)
class ProblemFamily:
    """A discrete model indexed by (interest, nuisance).

    ``joint_pmf(point, interest, nuisance)`` must broadcast over array
    arguments.  ``nuisance_domain(interest)`` returns the closed interval
    ``(lo, hi)`` of admissible nuisance values, elementwise for arrays.
    """

    space: SampleSpace
    joint_pmf: Callable
    interest_range: tuple[float, float]
    nuisance_domain: Callable
    name: str = ""
    binomial_shape: tuple[int, int] | None = None  # enables the fused pmf kernels


def binomial_difference(n: int, m: int) -> ProblemFamily:
    """X ~ Bin(n, p1), Y ~ Bin(m, p0), interest p1 - p0, nuisance p0."""
    space = build_space(n, m)

    def joint_pmf(point, delta, p0):
        p0 = np.asarray(p0, dtype=float)
        p1 = np.clip(np.asarray(delta, dtype=float) + p0, 0.0, 1.0)
        return binom_pmf_array(point[0], n, p1) * binom_pmf_array(point[1], m, p0)

    def nuisance_domain(delta):
        delta = np.asarray(delta, dtype=float)
        lo = np.where(delta >= 0, 0.0, -delta)
        hi = np.where(delta >= 0, 1.0 - delta, 1.0)
        return lo, hi

    return ProblemFamily(space, joint_pmf, (-1.0, 1.0), nuisance_domain, f"binomial({n},{m})", (n, m))


@dataclass(frozen=True, eq=False)
class ScanGrid:
    interest: np.ndarray  # (N,)
    nuisance: np.ndarray  # (N, K), row i spans D(interest[i]) with both endpoints
    _logs: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return self.interest.shape[0]

    def binomial_logs(self) -> tuple[np.ndarray, ...]:
        """log p1, log(1 - p1), log p0, log(1 - p0) on the grid, computed once."""
        if not self._logs:
            p0 = self.nuisance
            p1 = np.clip(self.interest[:, None] + p0, 0.0, 1.0)
            with np.errstate(divide="ignore"):
                self._logs["v"] = tuple(
                    np.ascontiguousarray(a) for a in (np.log(p1), np.log1p(-p1), np.log(p0), np.log1p(-p0))
                )
        return self._logs["v"]


def interest_values(lo: float, hi: float, step: float) -> np.ndarray:
    """``lo, lo + step, ...`` up to ``hi``, each rounded to 12 decimals so grid
    values are the same floats as their decimal spelling."""
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.array([round(lo + i * step, 12) for i in range(count)])


def _nuisance_rows(family: ProblemFamily, interest: np.ndarray, points: int) -> np.ndarray:
    lo, hi = family.nuisance_domain(interest)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), interest.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), interest.shape)
    if np.any(hi < lo):
        bad = interest[np.argmax(hi < lo)]
        raise DomainError(f"empty nuisance domain at interest value {bad!r}")
    t = np.arange(points) / (points - 1)
    rows = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    rows[:, -1] = hi
    return rows


def scan_grid(family: ProblemFamily, config: ScanConfig) -> ScanGrid:
    a, b = family.interest_range
    interest = interest_values(a, b, config.delta_step)
    return ScanGrid(interest, _nuisance_rows(family, interest, config.nuisance_points))


def _lchoose(n, x):
    return float(gammaln(n + 1.0) - gammaln(x + 1.0) - gammaln(n - x + 1.0))


def point_matrix(family: ProblemFamily, grid: ScanGrid, point, rows: int | None = None,
                 start: int = 0, generic: bool = False, backend: str | None = None) -> np.ndarray:
    """pmf of ``point`` over grid rows ``start:rows``.

    Binomial families go through the fused kernel unless ``generic`` asks
    for the family's own ``joint_pmf``.
    """
    stop = len(grid) if rows is None else rows
    x, y = int(point[0]), int(point[1])
    if family.binomial_shape is not None and not generic:
        n, m = family.binomial_shape
        lc = _lchoose(n, x) + _lchoose(m, y)
        return get_kernels(backend)["binom_pmf_matrix"](*grid.binomial_logs(), x, n, y, m, lc, start, stop)
    th = grid.interest[start:stop, None]
    return np.ascontiguousarray(family.joint_pmf(point, th, grid.nuisance[start:stop]), dtype=float)


def accumulate_point(family: ProblemFamily, grid: ScanGrid, point, acc: np.ndarray, start: int = 0,
                     backend: str | None = None) -> None:
    """``acc[start:] += pmf(point)`` over the grid rows ``start:len(acc)``."""
    k = get_kernels(backend)
    if family.binomial_shape is not None:
        n, m = family.binomial_shape
        x, y = int(point[0]), int(point[1])
        lc = _lchoose(n, x) + _lchoose(m, y)
        k["binom_accumulate"](acc, *grid.binomial_logs(), x, n, y, m, lc, start)
    else:
        k["accumulate_from"](acc, point_matrix(family, grid, point, acc.shape[0], 0), start)


def tail_matrix(family: ProblemFamily, excluded: Iterable, grid: ScanGrid, rows: int | None = None) -> np.ndarray:
    """P(complement of ``excluded``) at every grid cell, by direct summation."""
    excluded = {SamplePoint(*p) for p in excluded}
    for p in excluded:
        if p not in family.space:
            raise DomainError(f"point {tuple(p)} is not in the sample space")
    rows = len(grid) if rows is None else rows
    out = np.zeros((rows, grid.nuisance.shape[1]))
    for p in family.space:
        if p not in excluded:
            accumulate_point(family, grid, p, out)
    return out


def f_of_delta(family: ProblemFamily, accepted: Iterable, delta: float, config: ScanConfig) -> float:
    """min over the nuisance grid of P(complement of ``accepted``) at one interest value."""
    a, b = family.interest_range
    if not a <= delta <= b:
        raise DomainError(f"interest value {delta!r} outside [{a}, {b}]")
    grid = ScanGrid(np.array([float(delta)]), _nuisance_rows(family, np.array([float(delta)]), config.nuisance_points))
    return float(tail_matrix(family, accepted, grid).min())


def limit_index(first_fail: int) -> int:
    """Grid index of the emitted limit given the first failing row."""
    return max(first_fail - 1, 0)


def check_alpha(alpha: float) -> float:
    if not 0.0 <= alpha < 1.0:
        raise DomainError(f"alpha must satisfy 0 <= alpha < 1, got {alpha!r}")
    return float(alpha)


@dataclass(frozen=True)
class ScanOutcome:
    first_failure: tuple[int, ...]  # per block; len(grid) when f_j never fails
    limits: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class LowerLimitTable:
    partition: OrderedPartition
    alpha: float | None
    limits: dict = field(repr=False)
    outcome: ScanOutcome | None = field(default=None, repr=False)

    @property
    def space(self) -> SampleSpace:
        return self.partition.space

    def __getitem__(self, point) -> float:
        return self.limits[SamplePoint(*point)]

    def block_limits(self) -> list[float]:
        return [self.limits[b[0]] for b in self.partition.blocks]

    def as_grid(self) -> np.ndarray:
        """Limits as an ``(n + 1, m + 1)`` array indexed ``[x, y]``."""
        n, m = self.space.shape
        out = np.empty((n + 1, m + 1))
        for p, v in self.limits.items():
            out[p.x, p.y] = v
        return out

    def with_limits(self, limits: dict) -> "LowerLimitTable":
        return replace(self, limits=dict(limits), outcome=None)

    def check_class_membership(self) -> None:
        """Constant on blocks and nonincreasing across blocks."""
        prev = math.inf
        for j, block in enumerate(self.partition.blocks):
            vals = {self.limits[p] for p in block}
            if len(vals) != 1:
                raise InvariantError(f"limits not constant on block {j + 1}: {sorted(vals)}")
            (v,) = vals
            if v > prev:
                raise InvariantError(f"block {j + 1} limit {v} exceeds block {j} limit {prev}")
            prev = v


def smallest_limits(family: ProblemFamily, partition: OrderedPartition, alpha: float,
                    config: ScanConfig | None = None, backend: str | None = None) -> LowerLimitTable:
    """Smallest 1 - alpha lower limits monotone with respect to ``partition``."""
    alpha = check_alpha(alpha)
    config = config or ScanConfig()
    if set(partition.space.points) != set(family.space.points):
        raise DomainError("partition and family have different sample spaces")
    k = get_kernels(backend)
    grid = scan_grid(family, config)
    n_rows = len(grid)
    target = 1.0 - alpha

    tail = tail_matrix(family, (), grid)
    spot = int(np.random.default_rng(len(partition)).integers(len(partition)))
    rows = n_rows
    fails, limits = [], []
    for j, block in enumerate(partition.blocks):
        mass = point_matrix(family, grid, block[0], rows)
        for p in block[1:]:
            mass += point_matrix(family, grid, p, rows)
        view = tail[:rows]
        rowmin = k["subtract_rowmin"](view, mass)
        kj = first_below(rowmin, target)
        if kj == rows and rows < n_rows:
            raise InvariantError(f"block {j + 1} passed a row where block {j} failed")
        if config.check_incremental and j == spot:
            direct = tail_matrix(family, partition.prefix(j + 1), grid, rows)
            err = float(np.max(np.abs(direct - view)))
            if err > INCREMENTAL_TOL:
                raise InvariantError(f"incremental tail differs from direct sum by {err:.3g}")
        fails.append(kj)
        limits.append(float(grid.interest[limit_index(kj)]))
        rows = min(kj + 1, n_rows)

    table = LowerLimitTable(
        partition, alpha,
        {p: limits[j] for j, b in enumerate(partition.blocks) for p in b},
        ScanOutcome(tuple(fails), tuple(limits)),
    )
    table.check_class_membership()
    a = family.interest_range[0]
    if min(limits) != a:
        raise InvariantError(f"minimum limit {min(limits)} differs from {a}")
    return table
