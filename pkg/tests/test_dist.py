import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smallci.dist import (
    BinomSpec,
    PoissonSpec,
    binom_cdf,
    binom_logpmf_array,
    binom_pmf,
    binom_pmf_array,
    norm_upper_quantile,
    pois_cdf,
    pois_pmf,
)
from smallci.errors import DomainError


def exact_binom(x, n, p):
    # rational oracle; p given as Fraction
    return Fraction(math.comb(n, x)) * p**x * (1 - p) ** (n - x)


def mp_upper_quantile(alpha):
    # independent oracle: bisection on a 50-digit normal upper tail
    with mpmath.workdps(50):
        f = lambda z: mpmath.ncdf(-z) - alpha  # noqa: E731
        lo, hi = mpmath.mpf(-40), mpmath.mpf(40)
        for _ in range(200):
            mid = (lo + hi) / 2
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


@pytest.mark.parametrize("x,n,p,want", [(0, 4, 0.0, 1.0), (2, 4, 0.5, 0.375), (4, 4, 0.9, 0.6561)])
def test_binom_pmf_examples(x, n, p, want):
    assert binom_pmf(x, BinomSpec(n, p)) == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize("x,n,p,want", [(4, 4, 0.37, 1.0), (-1, 4, 0.3, 0.0), (1, 2, 0.5, 0.75)])
def test_binom_cdf_examples(x, n, p, want):
    assert binom_cdf(x, BinomSpec(n, p)) == pytest.approx(want, abs=1e-15)


def test_binom_degenerate_ends():
    assert binom_pmf(3, BinomSpec(3, 1.0)) == 1.0
    assert binom_pmf(2, BinomSpec(3, 1.0)) == 0.0
    assert binom_pmf(1, BinomSpec(3, 0.0)) == 0.0


def test_binom_errors():
    with pytest.raises(DomainError):
        BinomSpec(-1, 0.5)
    with pytest.raises(DomainError):
        BinomSpec(3, 1.2)
    with pytest.raises(DomainError):
        binom_pmf(5, BinomSpec(4, 0.5))


def test_poisson_examples():
    assert pois_pmf(0, PoissonSpec(0.0)) == 1.0
    assert pois_pmf(3, PoissonSpec(0.0)) == 0.0
    assert pois_pmf(0, PoissonSpec(1.0)) == pytest.approx(math.exp(-1), abs=1e-15)
    assert pois_cdf(2, PoissonSpec(7.208)) == pytest.approx(1 - math.sqrt(0.95), abs=1e-5)
    assert pois_cdf(-1, PoissonSpec(2.0)) == 0.0
    with pytest.raises(DomainError):
        PoissonSpec(-0.1)


@pytest.mark.parametrize("alpha", [0.5, 0.05, 0.025, 0.1, 1e-6, 0.9])
def test_norm_quantile_against_mp_oracle(alpha):
    assert norm_upper_quantile(alpha) == pytest.approx(mp_upper_quantile(alpha), abs=1e-12)


def test_norm_quantile_values():
    assert norm_upper_quantile(0.5) == 0.0
    assert round(norm_upper_quantile(0.05), 6) == 1.644854
    assert round(norm_upper_quantile(0.025), 6) == 1.959964
    for bad in (0.0, 1.0, -0.1, float("nan")):
        with pytest.raises(DomainError):
            norm_upper_quantile(bad)


@given(st.integers(0, 60), st.fractions(0, 1, max_denominator=1000))
def test_binom_pmf_matches_rational_oracle(n, p):
    xs = np.arange(n + 1)
    got = binom_pmf_array(xs, n, float(p))
    want = np.array([float(exact_binom(int(x), n, p)) for x in xs])
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-300)


@given(st.integers(0, 200), st.floats(0, 1))
def test_binom_sums_to_one(n, p):
    assert math.fsum(binom_pmf_array(np.arange(n + 1), n, p)) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(1, 80), st.floats(0, 1), st.data())
def test_binom_cdf_is_partial_sum(n, p, data):
    x = data.draw(st.integers(-2, n + 2))
    spec = BinomSpec(n, p)
    want = math.fsum(binom_pmf(i, spec) for i in range(0, min(x, n) + 1)) if x >= 0 else 0.0
    assert binom_cdf(x, spec) == pytest.approx(want, abs=1e-12)


@given(st.integers(1, 200), st.floats(1e-6, 1 - 1e-6), st.data())
def test_binom_reflection(n, p, data):
    x = data.draw(st.integers(0, n))
    q = 1 - p
    p = 1 - q  # make p, q exact complements so only the pmf code is tested
    a = binom_logpmf_array(np.array([x]), n, p)[0]
    b = binom_logpmf_array(np.array([n - x]), n, q)[0]
    assert abs(a - b) <= 1e-13 * max(1.0, abs(a))


@given(st.floats(0, 60))
def test_poisson_sums_to_one(lam):
    spec = PoissonSpec(lam)
    top = int(lam + 40 * math.sqrt(lam) + 60)
    total = math.fsum(pois_pmf(i, spec) for i in range(top))
    assert total == pytest.approx(1.0, abs=1e-12)
    assert pois_cdf(top - 1, spec) == pytest.approx(total, abs=1e-12)


@given(st.floats(-6, 6))
def test_norm_quantile_inverts_tail(z):
    alpha = float(mpmath.ncdf(-z))
    assert norm_upper_quantile(alpha) == pytest.approx(z, abs=1e-8)
