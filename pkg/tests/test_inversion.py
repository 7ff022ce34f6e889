import numpy as np
import pytest
from scipy.stats import binom

from helpers import COARSE, REF_ZT, REF_GREEDY_LIMITS, REF_GREEDY_ORDER, TOL, family, partition
from smallci.engine import interest_values, smallest_limits
from smallci.errors import DomainError
from smallci.inversion import invert_tests, rejection_curve, s_delta
from smallci.space import single_block_partition


def sup_type1(n, m, region, delta, step=0.0005, k=2001):
    """Worst P(region) over interest <= delta, by plain scipy sums."""
    worst = 0.0
    ds = interest_values(-1.0, 1.0, step)
    for d in ds[ds <= delta + 1e-12]:
        lo, hi = (0.0, 1.0 - d) if d >= 0 else (-d, 1.0)
        p0 = np.linspace(lo, hi, k)
        p1 = np.clip(d + p0, 0, 1)
        pr = sum(binom.pmf(x, n, p1) * binom.pmf(y, m, p0) for x, y in region)
        worst = max(worst, float(np.max(pr)) if region else 0.0)
    return worst


@pytest.mark.parametrize("delta,want", [(-0.05, 0), (-0.2, 1), (-0.4, 2), (1.0, 0)])
def test_s_delta_examples(delta, want):
    assert s_delta(family(4, 1), partition(4, 1, "zt"), delta, 0.05) == want


def test_s_delta_any_partition_at_top():
    fam = family(4, 1)
    for kind in ("z", "i", "barnard"):
        assert s_delta(fam, partition(4, 1, kind), 1.0, 0.05) == 0
    with pytest.raises(DomainError):
        s_delta(fam, partition(4, 1, "zt"), 1.2, 0.05)


def test_invert_matches_reference_tables():
    zt = invert_tests(family(4, 1), partition(4, 1, "zt"), 0.05)
    for p, v in REF_ZT.items():
        assert abs(zt[p] - v) <= TOL
    b = invert_tests(family(4, 1), partition(4, 1, "barnard"), 0.05)
    for p, v in zip(REF_GREEDY_ORDER, REF_GREEDY_LIMITS):
        assert abs(b[p] - v) <= TOL


def test_single_block_inverts_to_minus_one():
    fam = family(4, 1)
    t = invert_tests(fam, single_block_partition(fam.space), 0.05)
    assert set(t.limits.values()) == {-1.0}


@pytest.mark.parametrize("n,m", [(4, 1), (3, 2), (2, 2)])
@pytest.mark.parametrize("alpha", [0.05, 0.1, 0.2])
def test_equivalence_with_engine_coarse(n, m, alpha):
    part = partition(n, m, "zt")
    a = invert_tests(family(n, m), part, alpha, COARSE)
    b = smallest_limits(family(n, m), part, alpha, COARSE)
    assert all(abs(a[p] - b[p]) <= 2 * COARSE.delta_step for p in part.space)


def test_rejection_curve_nonincreasing():
    curve = rejection_curve(family(4, 1), partition(4, 1, "barnard"), 0.05)
    assert np.all(np.diff(curve.rejected) <= 0)
    assert curve.rejected[0] >= 1 and curve.rejected[-1] == 0


@pytest.mark.parametrize("delta", [-0.9, -0.6, -0.3, -0.1, -0.0955, -0.3455])
def test_induced_tests_have_level_alpha(delta):
    # verification grid, plus off-grid deltas just past two crossings
    part = partition(4, 1, "zt")
    s = s_delta(family(4, 1), part, delta, 0.05)
    region = [p for b in part.blocks[:s] for p in b]
    assert sup_type1(4, 1, region, delta) <= 0.05 + 1e-12
    if s < len(part):
        bigger = region + list(part.blocks[s])
        assert sup_type1(4, 1, bigger, delta, step=0.001, k=1001) > 0.05
