"""Sample spaces, ordered partitions and score-induced orderings.

An ordered partition is the only thing the smallest-interval construction
needs from an ordering: block ``j`` holds the points that share the ``j``-th
largest lower limit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .dist import norm_upper_quantile
from .errors import DomainError, PartitionError

__all__ = [
    "SamplePoint",
    "SampleSpace",
    "OrderedPartition",
    "build_space",
    "zstat_scores",
    "asymptotic_lower_scores",
    "partition_from_scores",
    "explicit_partition",
    "is_refinement",
    "single_block_partition",
    "i_order_41",
    "partition_to_json",
    "partition_from_json",
]

SCORE_TIE_TOL = 1e-12


class SamplePoint(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class SampleSpace:
    """Finite list of sample points.

    ``shape`` is ``(n, m)`` for the two-binomial lattice and ``None`` for a
    generic point list.
    """

    points: tuple[SamplePoint, ...]
    shape: tuple[int, int] | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple(SamplePoint(int(p[0]), int(p[1])) for p in self.points)
        if len(set(pts)) != len(pts):
            raise DomainError("sample space contains duplicate points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, point):
        return tuple(point) in self._index

    def index(self, point) -> int:
        return self._index[SamplePoint(*point)]


def build_space(n: int, m: int) -> SampleSpace:
    """All (x, y) with 0 <= x <= n, 0 <= y <= m, row-major in x then y."""
    if int(n) != n or int(m) != m or n < 1 or m < 1:
        raise DomainError(f"n and m must be positive integers, got n={n!r}, m={m!r}")
    pts = tuple(SamplePoint(x, y) for x in range(n + 1) for y in range(m + 1))
    return SampleSpace(pts, (int(n), int(m)))


@dataclass(frozen=True)
class OrderedPartition:
    space: SampleSpace
    blocks: tuple[tuple[SamplePoint, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(SamplePoint(*p) for p in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        seen = set()
        for j, block in enumerate(blocks):
            if not block:
                raise PartitionError(f"block {j + 1} is empty")
            for p in block:
                if p not in self.space:
                    raise PartitionError(f"point {tuple(p)} is not in the sample space")
                if p in seen:
                    raise PartitionError(f"point {tuple(p)} appears more than once")
                seen.add(p)
        missing = [tuple(p) for p in self.space if p not in seen]
        if missing:
            raise PartitionError(f"points not covered by any block: {missing}")

    def __len__(self):
        return len(self.blocks)

    def block_of(self) -> dict[SamplePoint, int]:
        """Map point -> zero-based block index."""
        return {p: j for j, block in enumerate(self.blocks) for p in block}

    def prefix(self, j: int) -> set[SamplePoint]:
        """Union of the first ``j`` blocks."""
        return {p for block in self.blocks[:j] for p in block}


ScoreTable = dict


def _phat(space: SampleSpace):
    if space.shape is None:
        raise DomainError("score orderings need a two-binomial (n, m) space")
    n, m = space.shape
    return n, m, {p: (p.x / n, p.y / m) for p in space}


def zstat_scores(space: SampleSpace) -> ScoreTable:
    """Two-sample z statistic with 0/0 := 0 and +-c/0 := +-inf."""
    n, m, phat = _phat(space)
    scores = {}
    for p, (p1, p0) in phat.items():
        num = p1 - p0
        var = p1 * (1 - p1) / n + p0 * (1 - p0) / m
        if var > 0:
            scores[p] = num / math.sqrt(var)
        elif num > 0:
            scores[p] = math.inf
        elif num < 0:
            scores[p] = -math.inf
        else:
            scores[p] = 0.0
    return scores


def asymptotic_lower_scores(space: SampleSpace, alpha: float) -> ScoreTable:
    """Lower end of the one-sided Wald interval for p1 - p0."""
    n, m, phat = _phat(space)
    z = norm_upper_quantile(alpha)
    return {
        p: p1 - p0 - z * math.sqrt(p1 * (1 - p1) / n + p0 * (1 - p0) / m)
        for p, (p1, p0) in phat.items()
    }


def partition_from_scores(space: SampleSpace, scores: ScoreTable) -> OrderedPartition:
    """Group points by equal score, blocks in strictly decreasing score order.

    Scores within ``SCORE_TIE_TOL`` of the current block's first score join
    that block; infinities only tie with themselves.
    """
    missing = [p for p in space if p not in scores]
    if missing:
        raise DomainError(f"scores missing for {missing}")
    pts = list(space)
    # stable sort keeps row-major order inside a block
    pts.sort(key=lambda p: -scores[p])
    blocks: list[list[SamplePoint]] = []
    head = None
    for p in pts:
        s = scores[p]
        if head is not None and (s == head or abs(s - head) <= SCORE_TIE_TOL):
            blocks[-1].append(p)
        else:
            blocks.append([p])
            head = s
    return OrderedPartition(space, tuple(tuple(b) for b in blocks))


def explicit_partition(space: SampleSpace, blocks: Iterable[Iterable]) -> OrderedPartition:
    """Partition from explicit ordered blocks; a bare point is a singleton block."""
    norm = []
    for b in blocks:
        b = list(b)
        if len(b) == 2 and all(isinstance(v, (int, np.integer)) for v in b):
            b = [b]
        norm.append(tuple(SamplePoint(*p) for p in b))
    return OrderedPartition(space, tuple(norm))


def single_block_partition(space: SampleSpace) -> OrderedPartition:
    return OrderedPartition(space, (tuple(space.points),))


# Hand-picked finest ordering for n = 4, m = 1; no generating rule is
# known, so it is shipped verbatim.
_I_ORDER_41 = ((4, 0), (3, 0), (2, 0), (1, 0), (4, 1), (3, 1), (2, 1), (0, 0), (1, 1), (0, 1))


def i_order_41() -> OrderedPartition:
    return explicit_partition(build_space(4, 1), [[p] for p in _I_ORDER_41])


def is_refinement(fine: OrderedPartition, coarse: OrderedPartition) -> bool:
    """True iff every fine block sits inside one coarse block and the coarse
    block index is nondecreasing along the fine blocks."""
    if set(fine.space.points) != set(coarse.space.points):
        raise DomainError("partitions are over different sample spaces")
    where = coarse.block_of()
    last = -1
    for block in fine.blocks:
        owners = {where[p] for p in block}
        if len(owners) != 1:
            return False
        (i,) = owners
        if i < last:
            return False
        last = i
    return True


def partition_to_json(partition: OrderedPartition) -> str:
    return json.dumps([[[p.x, p.y] for p in b] for b in partition.blocks])


def partition_from_json(space: SampleSpace, text: str) -> OrderedPartition:
    """Parse ``[[[x, y], ...], ...]``; raises PartitionError on malformed input."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PartitionError(f"ordering file is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise PartitionError("ordering must be a JSON array of blocks")
    blocks = []
    for j, b in enumerate(raw):
        if not isinstance(b, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(v, int) for v in p) for p in b
        ):
            raise PartitionError(f"block {j + 1} must be an array of [x, y] integer pairs")
        blocks.append(tuple(SamplePoint(*p) for p in b))
    return OrderedPartition(space, tuple(blocks))
