"""Independent checks on lower-limit tables.

Coverage is recomputed from scratch on a grid finer than the construction
grid; nothing here reuses the engine's running tail matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import BinomSpec, binom_pmf
from .engine import (
    LowerLimitTable,
    ProblemFamily,
    ScanConfig,
    ScanGrid,
    _nuisance_rows,
    check_alpha,
    interest_values,
    accumulate_point,
)
from .errors import DomainError
from .kernels import LEVEL_TOL, get_kernels
from .med import DoseStudy, limit_table
from .space import SamplePoint

__all__ = [
    "CoverageProfile",
    "DominanceVerdict",
    "coverage_profile",
    "brute_force_coverage",
    "set_inclusion_compare",
    "check_c_condition",
    "maximality_check",
    "FwerEstimate",
    "fwer_simulate",
    "verification_report",
]

EQ_TOL = 1e-12
COVERAGE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class CoverageProfile:
    deltas: np.ndarray
    min_coverage: np.ndarray  # per delta, minimum over the nuisance grid
    global_min: float
    argmin_delta: float
    argmin_nuisance: float


def coverage_profile(family: ProblemFamily, table: LowerLimitTable, config: ScanConfig | None = None,
                     window: tuple[float, float] | None = None, backend: str | None = None) -> CoverageProfile:
    """Minimum over the nuisance grid of P(L(Z) <= delta) at each grid delta.

    ``window`` restricts the delta grid to a closed sub-interval.
    """
    config = config or ScanConfig.verification()
    if set(table.limits) != set(family.space.points):
        raise DomainError("table does not cover the family's sample space")
    k = get_kernels(backend)
    a, b = family.interest_range
    deltas = interest_values(a, b, config.delta_step)
    if window is not None:
        deltas = deltas[(deltas >= window[0] - EQ_TOL) & (deltas <= window[1] + EQ_TOL)]
    grid = ScanGrid(deltas, _nuisance_rows(family, deltas, config.nuisance_points))
    acc = np.zeros_like(grid.nuisance)
    for p in family.space:
        start = int(np.searchsorted(deltas, table.limits[p], side="left"))
        if start < len(deltas):
            accumulate_point(family, grid, p, acc, start, backend)
    rowmin = k["rowmin"](acc)
    i = int(np.argmin(rowmin))
    j = int(np.argmin(acc[i]))
    return CoverageProfile(deltas, rowmin, float(rowmin[i]), float(deltas[i]), float(grid.nuisance[i, j]))


def brute_force_coverage(n: int, m: int, limits: dict, delta: float, p0: float) -> float:
    """P(L(X, Y) <= delta) at (delta, p0) by enumerating the lattice with scalar pmfs."""
    p1 = min(max(delta + p0, 0.0), 1.0)
    return math.fsum(
        binom_pmf(x, BinomSpec(n, p1)) * binom_pmf(y, BinomSpec(m, p0))
        for x in range(n + 1) for y in range(m + 1)
        if limits[SamplePoint(x, y)] <= delta
    )


@dataclass(frozen=True)
class DominanceVerdict:
    verdict: str  # A_dominates | B_dominates | equal | incomparable
    a_larger: tuple = ()  # points where A's limit is strictly larger
    b_larger: tuple = ()


def _limits(t):
    return t.limits if isinstance(t, LowerLimitTable) else {SamplePoint(*p): v for p, v in t.items()}


def set_inclusion_compare(table_a, table_b) -> DominanceVerdict:
    """A dominates when its limits are >= B's everywhere (A's intervals are subsets)."""
    la, lb = _limits(table_a), _limits(table_b)
    if set(la) != set(lb):
        raise DomainError("tables are over different sample spaces")
    pts = sorted(la)
    a_up = tuple(p for p in pts if la[p] > lb[p] + EQ_TOL)
    b_up = tuple(p for p in pts if lb[p] > la[p] + EQ_TOL)
    if a_up and b_up:
        v = "incomparable"
    elif a_up:
        v = "A_dominates"
    elif b_up:
        v = "B_dominates"
    else:
        v = "equal"
    return DominanceVerdict(v, a_up, b_up)


def check_c_condition(table) -> tuple[bool, list]:
    """Limits nondecreasing in x at fixed y and nonincreasing in y at fixed x.

    Returns ``(ok, witnesses)``; each witness is a pair (lower point, upper
    point) along the offending axis.
    """
    lim = _limits(table)
    n = max(p.x for p in lim)
    m = max(p.y for p in lim)
    bad = []
    for y in range(m + 1):
        for x in range(n):
            if lim[SamplePoint(x, y)] > lim[SamplePoint(x + 1, y)] + EQ_TOL:
                bad.append((SamplePoint(x, y), SamplePoint(x + 1, y)))
    for x in range(n + 1):
        for y in range(m):
            if lim[SamplePoint(x, y)] < lim[SamplePoint(x, y + 1)] - EQ_TOL:
                bad.append((SamplePoint(x, y), SamplePoint(x, y + 1)))
    return not bad, bad


def maximality_check(family: ProblemFamily, table: LowerLimitTable, partition=None, alpha: float | None = None,
                     bump: float | None = None, config: ScanConfig | None = None,
                     details: bool = False):
    """True iff no block's limit can be raised by ``bump`` without losing coverage.

    Raising block j also lifts any earlier block that would otherwise fall
    below it, so the raised table keeps the partition's monotone order.
    Coverage is only re-evaluated on ``[l_j, l_j + bump]``, the only deltas
    where the raised table differs from the original.
    """
    partition = partition or table.partition
    alpha = check_alpha(table.alpha if alpha is None else alpha)
    config = config or ScanConfig.verification()
    bump = 2 * ScanConfig().delta_step if bump is None else bump
    if not bump > 0:
        raise DomainError("bump must be positive")
    base = _limits(table)
    per_block = []
    for j, block in enumerate(partition.blocks):
        new = base[block[0]] + bump
        raised = dict(base)
        for earlier in partition.blocks[: j + 1]:
            for p in earlier:
                raised[p] = max(raised[p], new)
        trial = table.with_limits(raised)
        prof = coverage_profile(family, trial, config, window=(base[block[0]], new))
        per_block.append(prof.global_min < 1.0 - alpha - LEVEL_TOL)
    ok = all(per_block)
    return (ok, per_block) if details else ok


@dataclass(frozen=True)
class FwerEstimate:
    estimate: float
    std_error: float
    reps: int
    errors: int


def _draws(seed: int, stream: int, trials: int, prob: float, reps: int) -> np.ndarray:
    # Philox keyed by (seed, stream); replicate r is element r of the stream
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))
    return gen.binomial(trials, prob, size=reps)


def fwer_simulate(study: DoseStudy, true_params, reps: int, seed: int,
                  config: ScanConfig | None = None) -> FwerEstimate:
    """Monte-Carlo familywise error of the step-down procedure.

    ``true_params`` is ``(p_1, ..., p_k, p_0)``; the counts in ``study`` are
    ignored, only its sizes, margin and level are used.
    """
    if reps < 1:
        raise DomainError("reps must be >= 1")
    params = [float(v) for v in true_params]
    if len(params) != study.k + 1 or not all(0.0 <= v <= 1.0 for v in params):
        raise DomainError(f"need {study.k + 1} probabilities in [0, 1]")
    *ps, p0 = params
    config = config or ScanConfig()
    suffix = np.minimum.accumulate((np.array(ps) - p0)[::-1])[::-1]
    true_null = suffix <= study.delta
    if not true_null.any():
        return FwerEstimate(0.0, 0.0, reps, 0)

    y = _draws(seed, 0, study.m, p0, reps)
    lims = np.empty((study.k, reps))
    for i, (ni, pi) in enumerate(zip(study.n, ps), start=1):
        grid = limit_table(ni, study.m, study.alpha, config).as_grid()
        lims[i - 1] = grid[_draws(seed, i, ni, pi, reps), y]
    rej = np.minimum.accumulate(lims[::-1], axis=0)[::-1] > study.delta
    errors = int(np.any(rej & true_null[:, None], axis=0).sum())
    est = errors / reps
    return FwerEstimate(est, math.sqrt(est * (1 - est) / reps), reps, errors)


def verification_report(family: ProblemFamily, table: LowerLimitTable, config: ScanConfig | None = None,
                        compare_with: dict | None = None) -> dict:
    """JSON-ready summary: coverage minimum, its location, violations, verdicts."""
    alpha = check_alpha(table.alpha)
    prof = coverage_profile(family, table, config)
    bad = np.flatnonzero(prof.min_coverage < 1.0 - alpha - COVERAGE_SLACK)
    violations = [{"delta": float(prof.deltas[i]), "coverage": float(prof.min_coverage[i])} for i in bad]
    verdicts = []
    for name, other in (compare_with or {}).items():
        v = set_inclusion_compare(table, other)
        verdicts.append({"against": name, "verdict": v.verdict})
    return {
        "min_coverage": prof.global_min,
        "argmin": {"delta": prof.argmin_delta, "nuisance": prof.argmin_nuisance},
        "violations": violations,
        "verdicts": verdicts,
    }
