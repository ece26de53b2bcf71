import numpy as np

from uqaudit import _accel, kernels
from uqaudit.rng import CounterRng


def run_both(fn, *args):
    out = {}
    for name in ("numba", "numpy"):
        prev = _accel.set_backend(name)
        try:
            out[name] = fn(*args)
        finally:
            _accel.set_backend(prev)
    return out["numba"], out["numpy"]


def test_bin_accumulate_agrees():
    rng = CounterRng(1)
    idx = rng.integers(10, size=5000)
    stat, hit = rng.uniform(5000), (rng.uniform(5000) < 0.5).astype(float)
    a, b = run_both(kernels.bin_accumulate, idx, stat, hit, 10)
    assert np.array_equal(a[0], b[0])
    np.testing.assert_allclose(a[1], b[1], rtol=0, atol=1e-9)
    np.testing.assert_allclose(a[2], b[2], rtol=0, atol=1e-9)


def test_mixture_cdf_agrees():
    rng = CounterRng(2)
    means, sds = rng.normal((200, 5)), rng.uniform((200, 5), low=0.1, high=2)
    y = rng.normal(200, scale=2)
    a, b = run_both(kernels.mixture_cdf, means, sds, y)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)


def test_mixture_quantile_agrees():
    rng = CounterRng(3)
    means, sds = rng.normal((100, 4)), rng.uniform((100, 4), low=0.1, high=2)
    q = rng.uniform(100, low=0.01, high=0.99)
    lo = means.min(axis=1) - 10 * sds.max(axis=1)
    hi = means.max(axis=1) + 10 * sds.max(axis=1)
    a, b = run_both(kernels.mixture_quantile, means, sds, q, lo, hi, np.zeros(100))
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
