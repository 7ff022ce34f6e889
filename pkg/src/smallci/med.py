"""Minimum effective dose by step-down testing on per-dose lower limits.

Dose ``i`` is declared effective together with every higher dose when the
smallest lower limit among doses ``i..k`` exceeds the margin ``delta``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .barnard import build_barnard_partition
from .engine import LowerLimitTable, ScanConfig, binomial_difference, check_alpha, smallest_limits
from .errors import DomainError, InvariantError
from .space import OrderedPartition

__all__ = [
    "DoseStudy",
    "MedResult",
    "limit_table",
    "dose_lower_limits",
    "step_down_from_limits",
    "step_down_med",
    "study_from_csv",
    "study_from_json",
]


@dataclass(frozen=True)
class DoseStudy:
    x: tuple[int, ...]
    n: tuple[int, ...]
    y: int
    m: int
    delta: float = 0.0
    alpha: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(int(v) for v in self.x))
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        if not self.x or len(self.x) != len(self.n):
            raise DomainError("need one count and one size per dose")
        for i, (xi, ni) in enumerate(zip(self.x, self.n), start=1):
            if ni < 1 or not 0 <= xi <= ni:
                raise DomainError(f"dose {i}: need 0 <= x <= n and n >= 1, got x={xi}, n={ni}")
        if self.m < 1 or not 0 <= self.y <= self.m:
            raise DomainError(f"control: need 0 <= y <= m and m >= 1, got y={self.y}, m={self.m}")
        if not self.delta >= 0:
            raise DomainError(f"delta must be nonnegative, got {self.delta!r}")
        check_alpha(self.alpha)

    @property
    def k(self) -> int:
        return len(self.x)

    def with_counts(self, x, y) -> "DoseStudy":
        return DoseStudy(tuple(x), self.n, int(y), self.m, self.delta, self.alpha)


@dataclass
class MedResult:
    med: int | None  # 1-based dose index, None when not detected
    limits: list[float]
    rejections: list[bool]  # R_1..R_k
    trail: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "med": self.med if self.med is not None else "not detected",
            "limits": self.limits,
            "rejections": self.rejections,
            "trail": self.trail,
        }


@lru_cache(maxsize=64)
def limit_table(n: int, m: int, alpha: float, config: ScanConfig = ScanConfig(),
                ordering: OrderedPartition | None = None) -> LowerLimitTable:
    """Smallest-interval table for one (n, m) shape, greedy ordering unless overridden."""
    family = binomial_difference(n, m)
    if ordering is None:
        ordering, _ = build_barnard_partition(family, alpha, config)
    return smallest_limits(family, ordering, alpha, config)


def dose_lower_limits(study: DoseStudy, config: ScanConfig | None = None,
                      orderings: dict | None = None) -> list[float]:
    """Per-dose lower limits for p_i - p_0 at the observed counts.

    ``orderings`` optionally maps a 1-based dose index to a partition override.
    """
    config = config or ScanConfig()
    orderings = orderings or {}
    out = []
    for i, (xi, ni) in enumerate(zip(study.x, study.n), start=1):
        table = limit_table(ni, study.m, study.alpha, config, orderings.get(i))
        out.append(table[(xi, study.y)])
    return out


def step_down_from_limits(limits, delta: float) -> MedResult:
    limits = [float(v) for v in limits]
    k = len(limits)
    # R_i: min over j >= i of L_j > delta, strict as written
    suffix_min = np.minimum.accumulate(np.array(limits)[::-1])[::-1]
    rej = [bool(v > delta) for v in suffix_min]
    if any(a and not b for a, b in zip(rej, rej[1:])):
        raise InvariantError("rejection regions are not nondecreasing in dose")

    trail, med = [], None
    for step, i in enumerate(range(k, 0, -1), start=1):
        if not rej[i - 1]:
            if i == k:
                trail.append(f"step {step}: R_{i} does not occur; MED not detected")
            else:
                med = i + 1
                trail.append(f"step {step}: R_{i} does not occur; MED = {med}")
            break
        trail.append(f"step {step}: R_{i} occurs")
    else:
        med = 1
        trail.append("all R_i occur; MED = 1")

    asserted = [i for i in range(1, k + 1) if rej[i - 1]]
    closed = min(asserted) if asserted else None
    if closed != med:
        raise InvariantError(f"step-down MED {med} disagrees with closed procedure {closed}")
    return MedResult(med, limits, rej, trail)


def step_down_med(study: DoseStudy, config: ScanConfig | None = None,
                  orderings: dict | None = None) -> MedResult:
    return step_down_from_limits(dose_lower_limits(study, config, orderings), study.delta)


def study_from_csv(text: str, delta: float = 0.0, alpha: float = 0.05) -> DoseStudy:
    """Rows ``dose_index,x,n``; the control row has dose_index 0 or ``control``."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or not {"dose_index", "x", "n"} <= set(rows[0]):
        raise DomainError("study CSV needs a header with dose_index,x,n")
    doses, control = {}, None
    for r in rows:
        key = r["dose_index"].strip().lower()
        try:
            vals = int(r["x"]), int(r["n"])
        except (TypeError, ValueError) as exc:
            raise DomainError(f"bad counts in row {r}") from exc
        if key in ("0", "control"):
            if control is not None:
                raise DomainError("more than one control row")
            control = vals
        else:
            try:
                idx = int(key)
            except ValueError as exc:
                raise DomainError(f"bad dose_index {r['dose_index']!r}") from exc
            if idx in doses:
                raise DomainError(f"dose {idx} listed twice")
            doses[idx] = vals
    if control is None:
        raise DomainError("no control row (dose_index 0 or 'control')")
    if sorted(doses) != list(range(1, len(doses) + 1)):
        raise DomainError(f"dose indices must be 1..k, got {sorted(doses)}")
    xs = [doses[i][0] for i in sorted(doses)]
    ns = [doses[i][1] for i in sorted(doses)]
    return DoseStudy(tuple(xs), tuple(ns), control[0], control[1], delta, alpha)


def study_from_json(text: str) -> DoseStudy:
    raw = json.loads(text)
    try:
        return DoseStudy(tuple(raw["x"]), tuple(raw["n"]), raw["y"], raw["m"],
                         raw.get("delta", 0.0), raw.get("alpha", 0.05))
    except KeyError as exc:
        raise DomainError(f"study JSON missing key {exc}") from exc
