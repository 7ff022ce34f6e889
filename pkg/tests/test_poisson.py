import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.stats import poisson

from smallci.errors import AccuracyError, DomainError
from smallci.poisson import (
    PoissonDiffProblem,
    _scan,
    bolshev_lower,
    bolshev_upper,
    g_table,
    improved_limit,
    naive_limit,
    solve,
    threshold_g,
)

LEVEL = math.sqrt(0.95)


def f_oracle(delta, ref, alpha=0.05, lam_max=60.0, lam_step=0.01):
    """min over lambda2 of P(X < g(Y)), straight from scipy."""
    lam2 = np.arange(max(0.0, -delta), max(0.0, -delta) + lam_max, lam_step)
    ymax = int(poisson.isf(1e-13, lam2.max()))
    g = g_table(ref, alpha, ymax)
    ys = np.arange(ymax + 1)
    out = (poisson.pmf(ys[:, None], lam2) * poisson.cdf(g[:, None] - 1, lam2 + delta)).sum(axis=0)
    return out.min()


@pytest.fixture(scope="module")
def example():
    return solve(PoissonDiffProblem(4, 2, 0.05))


def test_bolshev_examples():
    assert bolshev_lower(0, LEVEL) == 0.0
    assert bolshev_lower(4, LEVEL) == pytest.approx(1.094, abs=5e-4)
    assert bolshev_lower(1, LEVEL) == pytest.approx(-math.log(LEVEL), abs=1e-10)
    assert bolshev_upper(2, LEVEL) == pytest.approx(7.208, abs=5e-4)
    assert bolshev_upper(0, LEVEL) == pytest.approx(-math.log(1 - LEVEL), abs=1e-10)
    assert bolshev_upper(0, 1 - math.exp(-1)) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DomainError):
        bolshev_lower(-1, LEVEL)
    with pytest.raises(DomainError):
        bolshev_upper(1, 1.0)


def test_naive_and_thresholds(example):
    assert naive_limit(4, 2, 0.05) == pytest.approx(-6.114, abs=0.002)
    assert naive_limit(0, 0, 0.05) == pytest.approx(-3.676, abs=5e-4)
    ref = naive_limit(4, 2, 0.05)
    assert threshold_g(0, ref, 0.05) == 0
    assert threshold_g(1, ref, 0.05) == 0
    assert threshold_g(3, ref, 0.05) == 7
    assert example["g_table"][:4] == [0, 0, 4, 7]


def test_naive_monotone_in_alpha():
    vals = [naive_limit(0, 0, a) for a in (0.01, 0.05, 0.2, 0.5, 0.9, 0.99)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(math.log(1 - math.sqrt(0.01)), abs=1e-10)


def test_example_values(example):
    assert example["L"] == pytest.approx(1.094, abs=0.001)
    assert example["U"] == pytest.approx(7.208, abs=0.001)
    assert example["L1"] == pytest.approx(-6.114, abs=0.002)
    assert example["LG"] == pytest.approx(-4.744, abs=0.005)


def test_improved_limit_against_scipy_oracle(example):
    ref = example["L1"]
    root = brentq(lambda d: f_oracle(d, ref) - 0.95, ref + 0.5, -4.0, xtol=1e-7)
    # the grid limit is the last grid value before the crossing
    assert example["LG"] <= root <= example["LG"] + 0.001 + 1e-6


@pytest.mark.parametrize("x,y", [(0, 5), (2, 2), (3, 0), (0, 0), (8, 4)])
def test_improved_dominates_naive(x, y):
    lg = improved_limit(x, y, 0.05)
    assert lg >= naive_limit(x, y, 0.05)
    if x == 0:
        assert lg <= 0.0


def test_lambda_ceiling_policy():
    # one extension rescues a short span
    scan = _scan(PoissonDiffProblem(1, 0, 0.05, lam_span=0.5), naive_limit(1, 0, 0.05))
    assert scan.lam_span == 1.0
    assert scan.limit == improved_limit(1, 0, 0.05)
    # a second ceiling hit is reported
    with pytest.raises(AccuracyError):
        improved_limit(3, 0, 0.05, PoissonDiffProblem(3, 0, 0.05, lam_span=0.5))
    # past delta = 0 the infimum over lambda2 sits at infinity for some points
    with pytest.raises(AccuracyError):
        improved_limit(6, 1, 0.05)
    with pytest.raises(DomainError):
        PoissonDiffProblem(4, 2, 0.05, lam_step=0)


@settings(max_examples=40)
@given(st.integers(0, 40), st.sampled_from([0.5, 0.8, LEVEL, 0.99]))
def test_bolshev_root_residuals(x, level):
    lo = bolshev_lower(x, level)
    if x > 0:
        assert abs(poisson.sf(x - 1, lo) - (1 - level)) <= 1e-8
    up = bolshev_upper(x, level)
    assert abs(poisson.cdf(x, up) - (1 - level)) <= 1e-8


def test_bolshev_monotone():
    lows = [bolshev_lower(x, LEVEL) for x in range(30)]
    ups = [bolshev_upper(y, LEVEL) for y in range(30)]
    assert all(a <= b for a, b in zip(lows, lows[1:]))
    assert all(a <= b for a, b in zip(ups, ups[1:]))


def test_naive_c_condition():
    grid = np.array([[naive_limit(x, y, 0.05) for y in range(12)] for x in range(12)])
    assert np.all(np.diff(grid, axis=0) >= 0)
    assert np.all(np.diff(grid, axis=1) <= 0)


def test_naive_interval_coverage():
    lam = np.arange(0.0, 20.0001, 0.5)
    top = 80
    lims = np.array([[naive_limit(x, y, 0.05) for y in range(top)] for x in range(top)])
    worst = 1.0
    for l1 in lam:
        px = poisson.pmf(np.arange(top), l1)
        for l2 in lam:
            py = poisson.pmf(np.arange(top), l2)
            cov = float(px @ (lims <= l1 - l2 + 1e-12) @ py)
            worst = min(worst, cov)
    assert worst >= 0.95 - 1e-9
