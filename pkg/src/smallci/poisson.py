"""Lower confidence limits for the difference of two Poisson means.

A naive limit combines the exact one-parameter bounds ``L(x) - U(y)`` at
level ``sqrt(1 - alpha)`` each.  The improved limit keeps the ordering that
naive limit induces on the lattice and pushes the observed point's limit up
as far as worst-case coverage allows, with ``lambda2`` as the nuisance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.stats import poisson as _poisson

from .dist import PoissonSpec, pois_cdf
from .errors import AccuracyError, DomainError
from .kernels import first_below, get_kernels

__all__ = [
    "PoissonDiffProblem",
    "bolshev_lower",
    "bolshev_upper",
    "naive_limit",
    "threshold_g",
    "g_table",
    "improved_limit",
    "solve",
]

ROOT_XTOL = 1e-12
_CHUNK = 128


def _check_level(level):
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level!r}")


def _check_count(name, v):
    if int(v) != v or v < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {v!r}")


def _upper_tail(x: int, lam: float) -> float:
    # P(X >= x)
    return 1.0 - pois_cdf(x - 1, PoissonSpec(lam))


@lru_cache(maxsize=4096)
def bolshev_lower(x: int, level: float) -> float:
    """Exact lower bound for a Poisson mean: P(X >= x; L) = 1 - level, L(0) = 0."""
    _check_count("x", x)
    _check_level(level)
    if x == 0:
        return 0.0
    target = 1.0 - level
    hi = x + 10.0 * math.sqrt(x) + 10.0
    while _upper_tail(x, hi) < target:
        hi *= 2.0
    return brentq(lambda lam: _upper_tail(x, lam) - target, 0.0, hi, xtol=ROOT_XTOL)


@lru_cache(maxsize=4096)
def bolshev_upper(y: int, level: float) -> float:
    """Exact upper bound for a Poisson mean: P(Y <= y; U) = 1 - level."""
    _check_count("y", y)
    _check_level(level)
    target = 1.0 - level
    hi = y + 10.0 * math.sqrt(y + 1.0) + 10.0
    while pois_cdf(y, PoissonSpec(hi)) > target:
        hi *= 2.0
    return brentq(lambda lam: pois_cdf(y, PoissonSpec(lam)) - target, 0.0, hi, xtol=ROOT_XTOL)


def _level(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return math.sqrt(1.0 - alpha)


def naive_limit(x: int, y: int, alpha: float) -> float:
    level = _level(alpha)
    return bolshev_lower(int(x), level) - bolshev_upper(int(y), level)


def threshold_g(y: int, reference: float, alpha: float) -> int:
    """Smallest x with ``naive_limit(x, y) >= reference``."""
    _check_count("y", y)
    return int(g_table(reference, alpha, int(y))[-1])


def g_table(reference: float, alpha: float, ymax: int) -> np.ndarray:
    """``g(0), ..., g(ymax)``; nondecreasing because U is increasing in y."""
    level = _level(alpha)
    out = np.empty(ymax + 1, dtype=np.int64)
    x = 0
    for y in range(ymax + 1):
        u = bolshev_upper(y, level)
        while bolshev_lower(x, level) - u < reference:
            x += 1
        out[y] = x
    return out


@dataclass(frozen=True)
class PoissonDiffProblem:
    """Observed counts plus the numerical policy of the lambda2 search.

    ``lam_span`` is the width of the nuisance grid above ``max(0, -delta)``;
    it is doubled once if the minimizer sits on the ceiling.
    """

    x: int
    y: int
    alpha: float = 0.05
    delta_step: float = 0.001
    lam_span: float = 50.0
    lam_step: float = 0.05
    trunc_mass: float = 1e-10
    max_scan: float = 200.0

    def __post_init__(self):
        _check_count("x", self.x)
        _check_count("y", self.y)
        _level(self.alpha)
        if not (self.delta_step > 0 and self.lam_step > 0 and self.lam_span > 0):
            raise DomainError("grid steps and lambda span must be positive")
        if not 0 < self.trunc_mass < 1e-6:
            raise DomainError("trunc_mass must lie in (0, 1e-6)")

    def truncation_bound(self, ceiling: float) -> int:
        """Largest y kept: P(Y > bound) < trunc_mass for every lambda2 <= ceiling."""
        return int(_poisson.isf(self.trunc_mass, ceiling))


@dataclass(frozen=True)
class _Scan:
    limit: float
    first_failure: int
    lam_span: float
    ymax: int


def _scan(problem: PoissonDiffProblem, reference: float, backend=None) -> _Scan:
    k = get_kernels(backend)
    target = 1.0 - problem.alpha
    span = problem.lam_span
    for attempt in range(2):
        n_lam = int(round(span / problem.lam_step)) + 1
        ceiling = max(0.0, -reference) + span
        ymax = problem.truncation_bound(ceiling)
        g = g_table(reference, problem.alpha, ymax)
        start, hit = 0, False
        max_rows = int(problem.max_scan / problem.delta_step)
        while start < max_rows:
            idx = np.arange(start, start + _CHUNK)
            deltas = reference + idx * problem.delta_step
            lam_lo = np.maximum(0.0, -deltas)
            rowmin, argmin = k["poisson_complement_rowmin"](deltas, lam_lo, problem.lam_step, n_lam, g)
            kf = first_below(rowmin, target)
            upto = min(kf + 1, _CHUNK)
            if np.any(argmin[:upto] == n_lam - 1):
                hit = True
                break
            if kf < _CHUNK:
                first = start + kf
                lim = reference + max(first - 1, 0) * problem.delta_step
                return _Scan(lim, first, span, ymax)
            start += _CHUNK
        if not hit:
            raise AccuracyError(f"coverage never dropped below {target} within {problem.max_scan} of the start")
        span *= 2.0
    raise AccuracyError("lambda2 minimizer sits on the search ceiling after extending it once")


def improved_limit(x: int, y: int, alpha: float, problem: PoissonDiffProblem | None = None,
                   backend: str | None = None) -> float:
    """Smallest lower limit under the ordering induced by the naive limit.

    The scan starts at the naive limit: below it coverage is already
    guaranteed because the naive interval has level 1 - alpha.
    """
    problem = problem or PoissonDiffProblem(x, y, alpha)
    if (problem.x, problem.y, problem.alpha) != (x, y, alpha):
        problem = PoissonDiffProblem(x, y, alpha, problem.delta_step, problem.lam_span,
                                     problem.lam_step, problem.trunc_mass, problem.max_scan)
    return _scan(problem, naive_limit(x, y, alpha), backend).limit


def solve(problem: PoissonDiffProblem, backend: str | None = None) -> dict:
    """Everything the CLI reports for one observation."""
    level = _level(problem.alpha)
    ref = naive_limit(problem.x, problem.y, problem.alpha)
    scan = _scan(problem, ref, backend)
    g = g_table(ref, problem.alpha, scan.ymax)
    return {
        "x": problem.x,
        "y": problem.y,
        "alpha": problem.alpha,
        "L": bolshev_lower(problem.x, level),
        "U": bolshev_upper(problem.y, level),
        "L1": ref,
        "LG": scan.limit,
        "g_table": [int(v) for v in g],
    }
