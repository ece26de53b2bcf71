"""Hot numeric kernels with a numba path and a pure-numpy path.

Each public kernel dispatches on :func:`uqaudit._accel.backend`. Integer
kernels (the SplitMix64 stream, bin counts) are bit-identical across the two
paths; floating-point kernels agree to a few ulps.
"""

import math

import numpy as np
from scipy import special

from . import _accel
from ._accel import njit

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_C1 = 0xBF58476D1CE4E5B9
MIX_C2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1

_U_GAMMA = np.uint64(GOLDEN_GAMMA)
_U_C1 = np.uint64(MIX_C1)
_U_C2 = np.uint64(MIX_C2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_ONE = np.uint64(1)

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def mix64(z):
    """SplitMix64 finalizer on a Python int (reference implementation)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * MIX_C1) & _MASK64
    z = ((z ^ (z >> 27)) * MIX_C2) & _MASK64
    return z ^ (z >> 31)


# ---------------------------------------------------------------- u64 stream


@njit
def _u64_stream_nb(key, start, n):
    out = np.empty(n, dtype=np.uint64)
    z0 = key + (start + _ONE) * _U_GAMMA
    for i in range(n):
        z = z0 + np.uint64(i) * _U_GAMMA
        z = (z ^ (z >> _S30)) * _U_C1
        z = (z ^ (z >> _S27)) * _U_C2
        out[i] = z ^ (z >> _S31)
    return out


def _u64_stream_np(key, start, n):
    z = np.arange(n, dtype=np.uint64)
    z *= _U_GAMMA
    z += key + (start + _ONE) * _U_GAMMA
    z ^= z >> _S30
    z *= _U_C1
    z ^= z >> _S27
    z *= _U_C2
    z ^= z >> _S31
    return z


def u64_stream(key, start, n):
    """Outputs ``start .. start+n-1`` of the SplitMix64 stream keyed by ``key``.

    Output ``c`` is ``mix64(key + (c + 1) * GOLDEN_GAMMA) mod 2**64``.
    """
    key = np.uint64(key & _MASK64)
    start = np.uint64(start & _MASK64)
    n = int(n)
    if _accel.backend() == "numba":
        return _u64_stream_nb(key, start, n)
    with np.errstate(over="ignore"):
        return _u64_stream_np(key, start, n)


# ------------------------------------------------------------ bin accumulate


@njit
def _bin_accumulate_nb(index, stat, hit, n_bins):
    counts = np.zeros(n_bins, dtype=np.int64)
    stat_sum = np.zeros(n_bins)
    hit_sum = np.zeros(n_bins)
    for i in range(index.shape[0]):
        b = index[i]
        counts[b] += 1
        stat_sum[b] += stat[i]
        hit_sum[b] += hit[i]
    return counts, stat_sum, hit_sum


def _bin_accumulate_np(index, stat, hit, n_bins):
    counts = np.bincount(index, minlength=n_bins).astype(np.int64)
    stat_sum = np.bincount(index, weights=stat, minlength=n_bins)
    hit_sum = np.bincount(index, weights=hit, minlength=n_bins)
    return counts, stat_sum, hit_sum


def bin_accumulate(index, stat, hit, n_bins):
    """Per-bin counts and sums of ``stat`` and ``hit``, accumulated in input order."""
    index = np.ascontiguousarray(index, dtype=np.int64)
    stat = np.ascontiguousarray(stat, dtype=np.float64)
    hit = np.ascontiguousarray(hit, dtype=np.float64)
    if _accel.backend() == "numba":
        return _bin_accumulate_nb(index, stat, hit, int(n_bins))
    return _bin_accumulate_np(index, stat, hit, int(n_bins))


# ------------------------------------------------------------- mixture CDF


@njit
def _mixture_cdf_nb(means, sds, y):
    n, t = means.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(t):
            acc += 0.5 * math.erfc(-(y[i] - means[i, j]) / sds[i, j] * _INV_SQRT2)
        out[i] = acc / t
    return out


def _mixture_cdf_np(means, sds, y):
    z = (y[:, None] - means) / sds
    terms = 0.5 * special.erfc(-z * _INV_SQRT2)
    return terms.sum(axis=1) / means.shape[1]


def mixture_cdf(means, sds, y):
    """Row-wise CDF of equal-weight Gaussian mixtures, shapes (N, T), (N, T), (N,)."""
    means = np.ascontiguousarray(means, dtype=np.float64)
    sds = np.ascontiguousarray(sds, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if _accel.backend() == "numba":
        return _mixture_cdf_nb(means, sds, y)
    return _mixture_cdf_np(means, sds, y)


# -------------------------------------------------------- mixture quantile

_MAX_BISECT = 200


@njit
def _mixture_quantile_nb(means, sds, q, lo0, hi0, tol):
    n, t = means.shape
    out = np.empty(n)
    for i in range(n):
        lo = lo0[i]
        hi = hi0[i]
        for _ in range(_MAX_BISECT):
            mid = 0.5 * (lo + hi)
            if hi - lo <= tol[i] or mid <= lo or mid >= hi:
                break
            acc = 0.0
            for j in range(t):
                acc += 0.5 * math.erfc(-(mid - means[i, j]) / sds[i, j] * _INV_SQRT2)
            if acc / t < q[i]:
                lo = mid
            else:
                hi = mid
        out[i] = 0.5 * (lo + hi)
    return out


def _mixture_quantile_np(means, sds, q, lo0, hi0, tol):
    lo = lo0.copy()
    hi = hi0.copy()
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        active = (hi - lo > tol) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        below = _mixture_cdf_np(means, sds, mid) < q
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    return 0.5 * (lo + hi)


def mixture_quantile(means, sds, q, lo, hi, tol):
    """Bisection for ``mixture_cdf(y) = q`` row-wise inside brackets ``[lo, hi]``.

    Stops per row when the bracket is narrower than ``tol`` or cannot be split
    further in double precision.
    """
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (means, sds)]
    rows = args[0].shape[0]
    rest = [np.ascontiguousarray(np.broadcast_to(a, (rows,)), dtype=np.float64)
            for a in (q, lo, hi, tol)]
    if _accel.backend() == "numba":
        return _mixture_quantile_nb(*args, *rest)
    return _mixture_quantile_np(*args, *rest)
