"""Binomial and Poisson probability primitives evaluated in log space.

Scalar functions validate their arguments and raise :class:`DomainError`;
the ``*_array`` variants are the vectorized workhorses used by the grid scans
and assume the caller already validated the inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri, xlog1py, xlogy

from .errors import DomainError

__all__ = [
    "BinomSpec",
    "PoissonSpec",
    "binom_logpmf_array",
    "binom_pmf_array",
    "binom_pmf",
    "binom_cdf",
    "pois_pmf",
    "pois_cdf",
    "norm_upper_quantile",
]


@dataclass(frozen=True)
class BinomSpec:
    trials: int
    success_prob: float

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 0:
            raise DomainError(f"trials must be a nonnegative integer, got {self.trials!r}")
        if not 0.0 <= self.success_prob <= 1.0:
            raise DomainError(f"success_prob must lie in [0, 1], got {self.success_prob!r}")


@dataclass(frozen=True)
class PoissonSpec:
    mean: float

    def __post_init__(self):
        if not self.mean >= 0.0 or math.isinf(self.mean):
            raise DomainError(f"mean must be a finite nonnegative number, got {self.mean!r}")


def binom_logpmf_array(x, n, p):
    """Log pmf of Bin(n, p) at x, broadcasting over array arguments.

    ``xlogy``/``xlog1py`` give ``0 * log(0) = 0``, so the degenerate
    endpoints p = 0 and p = 1 come out exact (log pmf 0 or -inf).
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    lchoose = gammaln(n + 1.0) - gammaln(x + 1.0) - gammaln(n - x + 1.0)
    return lchoose + xlogy(x, p) + xlog1py(n - x, -p)


def binom_pmf_array(x, n, p):
    return np.exp(binom_logpmf_array(x, n, p))


def binom_pmf(x: int, spec: BinomSpec) -> float:
    if int(x) != x or not 0 <= x <= spec.trials:
        raise DomainError(f"x={x!r} outside support 0..{spec.trials}")
    return float(binom_pmf_array(x, spec.trials, spec.success_prob))


def binom_cdf(x: int, spec: BinomSpec) -> float:
    """P(X <= x) with clamping: 0 below the support, 1 at or above n."""
    if x < 0:
        return 0.0
    if x >= spec.trials:
        return 1.0
    k = np.arange(0, int(math.floor(x)) + 1)
    terms = binom_pmf_array(k, spec.trials, spec.success_prob)
    return min(1.0, math.fsum(terms.tolist()))


def _pois_logpmf(x, lam):
    x = np.asarray(x, dtype=float)
    return xlogy(x, lam) - lam - gammaln(x + 1.0)


def pois_pmf(x: int, spec: PoissonSpec) -> float:
    if int(x) != x or x < 0:
        raise DomainError(f"x must be a nonnegative integer, got {x!r}")
    return float(np.exp(_pois_logpmf(x, spec.mean)))


def pois_cdf(x: int, spec: PoissonSpec) -> float:
    """P(X <= x); the running sum is accumulated with ``math.fsum``."""
    if x < 0:
        return 0.0
    k = np.arange(0, int(math.floor(x)) + 1)
    terms = np.exp(_pois_logpmf(k, spec.mean))
    return min(1.0, math.fsum(terms.tolist()))


def norm_upper_quantile(alpha: float) -> float:
    """Return z with 1 - Phi(z) = alpha.

    ``-ndtri(alpha)`` rather than ``ndtri(1 - alpha)`` keeps full relative
    precision for small alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(-ndtri(alpha))
