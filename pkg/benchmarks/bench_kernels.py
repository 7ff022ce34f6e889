"""Time the numba and numpy backends on the same workloads and check they agree.

    python3 benchmarks/bench_kernels.py [--n 10 --m 3 --repeat 3]

The first numba call per process may include loading or compiling the
cached machine code; it is reported separately as a warm-up.
"""
import argparse
import time

import numpy as np

from smallci.engine import ScanConfig, binomial_difference, scan_grid, smallest_limits
from smallci.kernels import available_backends, get_kernels
from smallci.space import partition_from_scores, zstat_scores
from smallci.verify import coverage_profile


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    fam = binomial_difference(args.n, args.m)
    part = partition_from_scores(fam.space, zstat_scores(fam.space))
    cfg = ScanConfig()
    grid = scan_grid(fam, cfg)
    grid.binomial_logs()
    rng = np.random.default_rng(0)
    tail = rng.random(grid.nuisance.shape)
    pmf = rng.random(grid.nuisance.shape) * 1e-3

    results = {}
    print(f"workload: (n, m) = ({args.n}, {args.m}), grid {grid.nuisance.shape[0]} x {grid.nuisance.shape[1]}, "
          f"best of {args.repeat}")
    print(f"{'backend':8s} {'warm-up':>9s} {'diff_rowmin':>12s} {'table':>9s} {'coverage':>9s}")
    for backend in available_backends():
        k = get_kernels(backend)
        t0 = time.perf_counter()
        smallest_limits(fam, part, args.alpha, cfg, backend=backend)
        warm = time.perf_counter() - t0
        t_row, _ = best_of(lambda: k["diff_rowmin"](tail, pmf), args.repeat)
        t_tab, tab = best_of(lambda: smallest_limits(fam, part, args.alpha, cfg, backend=backend), args.repeat)
        t_cov, prof = best_of(lambda: coverage_profile(fam, tab, backend=backend), 1)
        results[backend] = (tab, prof)
        print(f"{backend:8s} {warm:9.3f} {t_row:12.4f} {t_tab:9.3f} {t_cov:9.3f}")

    if len(results) == 2:
        (ta, pa), (tb, pb) = results["numba"], results["numpy"]
        same = ta.limits == tb.limits
        gap = float(np.max(np.abs(pa.min_coverage - pb.min_coverage)))
        print(f"limits identical across backends: {same}; max coverage difference {gap:.2e}")
        return 0 if same and gap < 1e-12 else 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
