"""Greedy construction of the C-condition ordering seeded at (n, 0).

At each step the frontier of the accepted region is filtered to the points
whose selection keeps limits nondecreasing in x and nonincreasing in y; each
such candidate gets the provisional limit it would receive if it were the next
block, and every candidate attaining the maximum (within ``tie_tol``) forms
the next block.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field


from .engine import (
    ProblemFamily,
    ScanConfig,
    check_alpha,
    limit_index,
    point_matrix,
    scan_grid,
    tail_matrix,
)
from .errors import DomainError, InvariantError
from .kernels import first_below, get_kernels
from .space import OrderedPartition, SamplePoint, SampleSpace

__all__ = [
    "FrontierState",
    "BarnardStep",
    "BarnardTrace",
    "neighbor_set",
    "candidate_set",
    "frontier",
    "provisional_limit",
    "build_barnard_partition",
    "trace_to_csv",
]


def _pts(points):
    return {SamplePoint(*p) for p in points}


def neighbor_set(space: SampleSpace, accepted) -> set[SamplePoint]:
    """Points outside ``accepted`` whose right or lower neighbour is accepted."""
    acc = _pts(accepted)
    return {
        p for p in space
        if p not in acc and ((p.x + 1, p.y) in acc or (p.x, p.y - 1) in acc)
    }


def candidate_set(space: SampleSpace, accepted, neighbor) -> set[SamplePoint]:
    nb = _pts(neighbor)
    return {p for p in nb if (p.x + 1, p.y) not in nb and (p.x, p.y - 1) not in nb}


@dataclass(frozen=True)
class FrontierState:
    accepted: frozenset
    neighbor: frozenset
    candidate: frozenset

    def __post_init__(self):
        if self.neighbor & self.accepted:
            raise InvariantError("neighbor set intersects the accepted set")
        if not self.candidate <= self.neighbor:
            raise InvariantError("candidate set is not inside the neighbor set")


def frontier(space: SampleSpace, accepted) -> FrontierState:
    acc = frozenset(_pts(accepted))
    nb = neighbor_set(space, acc)
    return FrontierState(acc, frozenset(nb), frozenset(candidate_set(space, acc, nb)))


def _sorted(points, space: SampleSpace):
    return tuple(sorted(points, key=space.index))


@dataclass(frozen=True)
class BarnardStep:
    step: int
    block: tuple[SamplePoint, ...]
    limit: float
    neighbors: tuple[SamplePoint, ...]
    candidates: dict = field(default_factory=dict)  # point -> provisional limit
    near_tie: bool = False  # block merged candidates whose limits differ but lie within tie_tol


@dataclass(frozen=True)
class BarnardTrace:
    steps: tuple[BarnardStep, ...]

    @property
    def k0(self) -> int:
        return len(self.steps)

    @property
    def cumulative_counts(self) -> list[int]:
        out, tot = [], 0
        for s in self.steps:
            tot += len(s.block)
            out.append(tot)
        return out


def provisional_limit(family: ProblemFamily, accepted, z0, alpha: float,
                      config: ScanConfig | None = None) -> float:
    """Lower limit ``z0`` would get if it were the next block after ``accepted``."""
    alpha = check_alpha(alpha)
    config = config or ScanConfig()
    z0 = SamplePoint(*z0)
    acc = _pts(accepted)
    if z0 in acc:
        raise DomainError(f"{tuple(z0)} is already accepted")
    grid = scan_grid(family, config)
    tail = tail_matrix(family, acc | {z0}, grid)
    kz = first_below(tail.min(axis=1), 1.0 - alpha)
    return float(grid.interest[limit_index(kz)])


def build_barnard_partition(family: ProblemFamily, alpha: float, config: ScanConfig | None = None,
                            backend: str | None = None) -> tuple[OrderedPartition, BarnardTrace]:
    alpha = check_alpha(alpha)
    config = config or ScanConfig()
    space = family.space
    if space.shape is None:
        raise DomainError("the greedy ordering needs a two-binomial (n, m) space")
    n, _ = space.shape
    k = get_kernels(backend)
    grid = scan_grid(family, config)
    n_rows = len(grid)
    target = 1.0 - alpha

    tail = tail_matrix(family, (), grid)
    rows = n_rows
    accepted: set[SamplePoint] = set()
    block = (SamplePoint(n, 0),)
    blocks, steps = [], []
    near_tie = False
    while True:
        mass = point_matrix(family, grid, block[0], rows)
        for p in block[1:]:
            mass += point_matrix(family, grid, p, rows)
        rowmin = k["subtract_rowmin"](tail[:rows], mass)
        kj = first_below(rowmin, target)
        limit = float(grid.interest[limit_index(kj)])
        rows = min(kj + 1, n_rows)
        accepted.update(block)
        blocks.append(block)

        state = frontier(space, accepted)
        if not state.candidate:
            if len(accepted) != len(space):
                raise InvariantError("candidate set empty before the space is exhausted")
            steps.append(BarnardStep(len(blocks), block, limit, (), {}, near_tie))
            break
        lo_vals = {}
        for z0 in _sorted(state.candidate, space):
            rm = k["diff_rowmin"](tail[:rows], point_matrix(family, grid, z0, rows))
            lo_vals[z0] = float(grid.interest[limit_index(first_below(rm, target))])
        steps.append(BarnardStep(len(blocks), block, limit, _sorted(state.neighbor, space), lo_vals, near_tie))
        best = max(lo_vals.values())
        chosen = [z for z, v in lo_vals.items() if v >= best - config.tie_tol - 1e-12]
        near_tie = len({lo_vals[z] for z in chosen}) > 1
        block = tuple(chosen)

    return OrderedPartition(space, tuple(blocks)), BarnardTrace(tuple(steps))


def _fmt_pts(points) -> str:
    return " ".join(f"({p.x},{p.y})" for p in points)


def trace_to_csv(trace: BarnardTrace) -> str:
    """One row per step: block, neighbours, candidates with provisional limits, final limit."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "block", "neighbors", "candidates", "lower", "near_tie"])
    for s in trace.steps:
        cands = " ".join(f"({p.x},{p.y}):{v:.6f}" for p, v in s.candidates.items())
        w.writerow([s.step, _fmt_pts(s.block), _fmt_pts(s.neighbors), cands, f"{s.limit:.6f}", int(s.near_tie)])
    return buf.getvalue()
