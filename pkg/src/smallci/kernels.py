"""Hot inner loops of the grid scans.

Two interchangeable backends implement the same functions:

* ``numba`` -- ``@njit(parallel=True)`` loops over grid rows,
* ``numpy`` -- vectorized fallback.

The backend is picked once at import from ``SMALLCI_BACKEND`` (``numba`` or
``numpy``); when unset, numba is used if it imports.  Both backends perform
the same arithmetic, but ``exp`` comes from different libms, so pmf entries
may differ by an ulp.  Each backend is deterministic: rows are independent,
so results do not depend on thread count.
"""
from __future__ import annotations

import math
import os
import warnings

import numpy as np
from scipy.special import gammaln, xlogy

__all__ = [
    "BACKEND",
    "get_kernels",
    "available_backends",
    "first_below",
    "LEVEL_TOL",
]

# f == 1 - alpha passes by definition; exact algebraic ties (e.g. alpha = 0.5
# at a p0 = 1 corner) must not be decided by the last bit of a float sum.
LEVEL_TOL = 1e-12


def first_below(values: np.ndarray, threshold: float) -> int:
    """Index of the first entry below ``threshold - LEVEL_TOL`` (len if none)."""
    hits = np.flatnonzero(values < threshold - LEVEL_TOL)
    return int(hits[0]) if hits.size else int(values.shape[0])


# ---------------------------------------------------------------- numpy path

def _np_subtract_rowmin(tail, pmf):
    np.subtract(tail, pmf, out=tail)
    return tail.min(axis=1)


def _np_diff_rowmin(tail, pmf):
    return (tail - pmf).min(axis=1)


def _np_rowmin(mat):
    return mat.min(axis=1)


def _np_accumulate_from(acc, pmf, start):
    acc[start:] += pmf[start:]


def _np_poisson_complement_rowmin(deltas, lam_lo, lam_step, n_lam, g):
    """Row minimum over lambda2 of sum_y P(Y=y) P(X <= g[y] - 1).

    ``g`` is nondecreasing with length ``ymax + 1``; truncated y are dropped.
    """
    ys = np.arange(g.shape[0], dtype=float)
    gmax = int(g[-1])
    ks = np.arange(max(gmax, 1), dtype=float)
    lgy = gammaln(ys + 1.0)
    lgk = gammaln(ks + 1.0)
    idx = np.clip(g.astype(np.int64) - 1, 0, None)
    live = g > 0
    out_min = np.empty(deltas.shape[0])
    out_arg = np.empty(deltas.shape[0], dtype=np.int64)
    jj = np.arange(n_lam, dtype=float)
    for i in range(deltas.shape[0]):
        lam2 = lam_lo[i] + jj * lam_step
        lam1 = np.maximum(deltas[i] + lam2, 0.0)
        py = np.exp(xlogy(ys[None, :], lam2[:, None]) - lam2[:, None] - lgy[None, :])
        px = np.exp(xlogy(ks[None, :], lam1[:, None]) - lam1[:, None] - lgk[None, :])
        fx = np.cumsum(px, axis=1)[:, idx]
        fx[:, ~live] = 0.0
        tot = (py * fx).sum(axis=1)
        j = int(np.argmin(tot))
        out_min[i] = tot[j]
        out_arg[i] = j
    return out_min, out_arg


def _np_binom_exponent(lp1, lq1, lp0, lq0, x, n, y, m, lc, start, stop):
    # zero coefficients are skipped so 0 * log(0) never produces nan
    e = np.full((stop - start, lp1.shape[1]), lc)
    for coef, mat in ((x, lp1), (n - x, lq1), (y, lp0), (m - y, lq0)):
        if coef:
            e += coef * mat[start:stop]
    return e


def _np_binom_pmf_matrix(lp1, lq1, lp0, lq0, x, n, y, m, lc, start, stop):
    return np.exp(_np_binom_exponent(lp1, lq1, lp0, lq0, x, n, y, m, lc, start, stop))


def _np_binom_accumulate(acc, lp1, lq1, lp0, lq0, x, n, y, m, lc, start):
    acc[start:] += _np_binom_pmf_matrix(lp1, lq1, lp0, lq0, x, n, y, m, lc, start, acc.shape[0])


_NUMPY = {
    "binom_pmf_matrix": _np_binom_pmf_matrix,
    "binom_accumulate": _np_binom_accumulate,
    "subtract_rowmin": _np_subtract_rowmin,
    "diff_rowmin": _np_diff_rowmin,
    "rowmin": _np_rowmin,
    "accumulate_from": _np_accumulate_from,
    "poisson_complement_rowmin": _np_poisson_complement_rowmin,
}


# ---------------------------------------------------------------- numba path

def _build_numba():
    from numba import NumbaWarning, njit, prange

    # TBB too old on some hosts; numba falls back to another threading layer
    warnings.filterwarnings("ignore", message="The TBB threading layer", category=NumbaWarning)

    # the exponent is spelled out in both kernels: a shared jitted helper
    # captured from this closure defeats numba's on-disk cache
    @njit(parallel=True, cache=True)
    def binom_pmf_matrix(lp1, lq1, lp0, lq0, x, n, y, m, lc, start, stop):
        cols = lp1.shape[1]
        out = np.empty((stop - start, cols))
        for r in prange(stop - start):
            i = start + r
            for k in range(cols):
                e = lc
                if x:
                    e += x * lp1[i, k]
                if n - x:
                    e += (n - x) * lq1[i, k]
                if y:
                    e += y * lp0[i, k]
                if m - y:
                    e += (m - y) * lq0[i, k]
                out[r, k] = math.exp(e)
        return out

    @njit(parallel=True, cache=True)
    def binom_accumulate(acc, lp1, lq1, lp0, lq0, x, n, y, m, lc, start):
        rows, cols = acc.shape
        for i in prange(start, rows):
            for k in range(cols):
                e = lc
                if x:
                    e += x * lp1[i, k]
                if n - x:
                    e += (n - x) * lq1[i, k]
                if y:
                    e += y * lp0[i, k]
                if m - y:
                    e += (m - y) * lq0[i, k]
                acc[i, k] += math.exp(e)

    @njit(parallel=True, cache=True)
    def subtract_rowmin(tail, pmf):
        rows, cols = tail.shape
        out = np.empty(rows)
        for i in prange(rows):
            best = np.inf
            for k in range(cols):
                v = tail[i, k] - pmf[i, k]
                tail[i, k] = v
                if v < best:
                    best = v
            out[i] = best
        return out

    @njit(parallel=True, cache=True)
    def diff_rowmin(tail, pmf):
        rows, cols = tail.shape
        out = np.empty(rows)
        for i in prange(rows):
            best = np.inf
            for k in range(cols):
                v = tail[i, k] - pmf[i, k]
                if v < best:
                    best = v
            out[i] = best
        return out

    @njit(parallel=True, cache=True)
    def rowmin(mat):
        rows, cols = mat.shape
        out = np.empty(rows)
        for i in prange(rows):
            best = np.inf
            for k in range(cols):
                if mat[i, k] < best:
                    best = mat[i, k]
            out[i] = best
        return out

    @njit(parallel=True, cache=True)
    def accumulate_from(acc, pmf, start):
        rows, cols = acc.shape
        for i in prange(start, rows):
            for k in range(cols):
                acc[i, k] += pmf[i, k]

    @njit(parallel=True, cache=True)
    def poisson_complement_rowmin(deltas, lam_lo, lam_step, n_lam, g):
        # pmfs by the recurrence p(k+1) = p(k) * lam / (k+1); exp(-lam) does
        # not underflow for the lambda ceilings used here (< 700)
        rows = deltas.shape[0]
        ny = g.shape[0]
        out_min = np.empty(rows)
        out_arg = np.empty(rows, dtype=np.int64)
        for i in prange(rows):
            best = np.inf
            barg = 0
            for j in range(n_lam):
                lam2 = lam_lo[i] + j * lam_step
                lam1 = deltas[i] + lam2
                if lam1 < 0.0:
                    lam1 = 0.0
                px = math.exp(-lam1)
                py = math.exp(-lam2)
                cdf = 0.0
                tot = 0.0
                k = 0
                for y in range(ny):
                    gy = g[y]
                    while k < gy:
                        cdf += px
                        k += 1
                        px = px * lam1 / k
                    if gy > 0:
                        tot += py * cdf
                    py = py * lam2 / (y + 1)
                if tot < best:
                    best = tot
                    barg = j
            out_min[i] = best
            out_arg[i] = barg
        return out_min, out_arg

    return {
        "binom_pmf_matrix": binom_pmf_matrix,
        "binom_accumulate": binom_accumulate,
        "subtract_rowmin": subtract_rowmin,
        "diff_rowmin": diff_rowmin,
        "rowmin": rowmin,
        "accumulate_from": accumulate_from,
        "poisson_complement_rowmin": poisson_complement_rowmin,
    }


def _select_backend():
    want = os.environ.get("SMALLCI_BACKEND", "").strip().lower()
    if want not in ("", "numba", "numpy"):
        raise ValueError(f"SMALLCI_BACKEND must be 'numba' or 'numpy', got {want!r}")
    if want == "numpy":
        return "numpy", _NUMPY
    try:
        return "numba", _build_numba()
    except ImportError:
        if want == "numba":
            raise
        return "numpy", _NUMPY


BACKEND, _ACTIVE = _select_backend()
_CACHE = {BACKEND: _ACTIVE}


def available_backends() -> tuple[str, ...]:
    try:
        get_kernels("numba")
    except ImportError:
        return ("numpy",)
    return ("numba", "numpy")


def get_kernels(backend: str | None = None) -> dict:
    """Kernel table for ``backend`` (default: the one chosen at import)."""
    if backend is None:
        return _ACTIVE
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend not in _CACHE:
        _CACHE[backend] = _NUMPY if backend == "numpy" else _build_numba()
    return _CACHE[backend]
