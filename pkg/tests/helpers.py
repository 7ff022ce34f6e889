import functools



from smallci.barnard import build_barnard_partition
from smallci.engine import ScanConfig, binomial_difference, smallest_limits
from smallci.space import (
    SamplePoint as P,
    asymptotic_lower_scores,
    partition_from_scores,
    i_order_41,
    zstat_scores,
)

# reference (4,1) limits at alpha = 0.05, keyed by (x, y), to 3 decimals
REF_ZT = {(4, 0): -0.095, (3, 0): -0.345, (2, 0): -0.562, (1, 0): -0.756, (4, 1): -0.950,
             (0, 0): -0.950, (3, 1): -0.950, (2, 1): -0.950, (1, 1): -0.987, (0, 1): -1.0}
REF_Z = {(4, 0): -0.095, (3, 0): -0.345, (2, 0): -0.562, (4, 1): -0.950, (0, 0): -0.950,
            (1, 0): -0.950, (3, 1): -0.950, (2, 1): -0.950, (0, 1): -1.0, (1, 1): -1.0}
REF_I = {**REF_ZT, **{(4, 1): -0.757, (3, 1): -0.770, (2, 1): -0.902, (0, 0): -0.950}}
REF_GREEDY_ORDER = [(4, 0), (3, 0), (4, 1), (2, 0), (3, 1), (1, 0), (2, 1), (0, 0), (1, 1), (0, 1)]
REF_GREEDY_LIMITS = [-0.095, -0.345, -0.527, -0.578, -0.752, -0.770, -0.902, -0.950, -0.987, -1.0]
# provisional limits of the candidates at each step, in trace order
REF_GREEDY_TRACE = [
    {(3, 0): -0.345, (4, 1): -0.527},
    {(2, 0): -0.561, (4, 1): -0.527},
    {(2, 0): -0.578, (3, 1): -0.752},
    {(1, 0): -0.757, (3, 1): -0.752},
    {(1, 0): -0.770, (2, 1): -0.902},
    {(0, 0): -0.950, (2, 1): -0.902},
    {(0, 0): -0.950, (1, 1): -0.987},
    {(1, 1): -0.987},
    {(0, 1): -1.0},
]
TOL = 0.002


def pt(*xy):
    return P(*xy)


@functools.lru_cache(maxsize=None)
def family(n, m):
    return binomial_difference(n, m)


@functools.lru_cache(maxsize=None)
def partition(n, m, kind, alpha=0.05):
    fam = family(n, m)
    if kind == "zt":
        return partition_from_scores(fam.space, zstat_scores(fam.space))
    if kind == "z":
        return partition_from_scores(fam.space, asymptotic_lower_scores(fam.space, alpha))
    if kind == "i":
        return i_order_41()
    if kind == "barnard":
        return barnard(n, m, alpha)[0]
    raise ValueError(kind)


@functools.lru_cache(maxsize=None)
def barnard(n, m, alpha=0.05):
    return build_barnard_partition(family(n, m), alpha)


@functools.lru_cache(maxsize=None)
def table(n, m, kind, alpha=0.05):
    return smallest_limits(family(n, m), partition(n, m, kind, alpha), alpha)


COARSE = ScanConfig(delta_step=0.01, nuisance_points=101)
