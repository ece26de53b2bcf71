"""Time the numba kernels against their pure-numpy fallbacks.

Run with ``python3 benchmarks/bench_backends.py``. Each kernel is called once
per backend before timing so numba compilation is excluded. The last row
times one full-batch training step of the 2x50 heteroscedastic network,
comparing the numpy implementation used by the lab with a jitted version of
the same arithmetic.
"""

import argparse
import timeit

import numpy as np

from uqaudit import _accel, kernels
from uqaudit.lab import TrainConfig, loss_and_grad, synth_regression
from uqaudit.lab.mlp import init_parameters
from uqaudit.rng import CounterRng


def kernel_cases(scale):
    rng = CounterRng(0)
    n_bins = 10
    stat = rng.uniform(200_000 * scale)
    idx = np.minimum((stat * n_bins).astype(np.int64), n_bins - 1)
    hit = (rng.uniform(stat.size) < stat).astype(np.float64)

    means = rng.normal((2_000 * scale, 15))
    sds = rng.uniform((2_000 * scale, 15), low=0.1, high=1.0)
    y = rng.normal(2_000 * scale)
    q = rng.uniform(2_000 * scale, low=0.01, high=0.99)
    lo = means.min(axis=1) - 10 * sds.max(axis=1)
    hi = means.max(axis=1) + 10 * sds.max(axis=1)
    tol = 1e-12 * sds.max(axis=1)

    return {
        "u64_stream": lambda: kernels.u64_stream(12345, 0, 1_000_000 * scale),
        "bin_accumulate": lambda: kernels.bin_accumulate(idx, stat, hit, n_bins),
        "mixture_cdf": lambda: kernels.mixture_cdf(means, sds, y),
        "mixture_quantile": lambda: kernels.mixture_quantile(means, sds, q, lo, hi, tol),
    }


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def training_step_case():
    import numba

    @numba.njit(cache=True)
    def step_nb(x, t, w1, b1, w2, b2, w3, b3):
        n = x.shape[0]
        h1 = np.tanh(x @ w1 + b1)
        h2 = np.tanh(h1 @ w2 + b2)
        out = h2 @ w3 + b3
        r = out[:, 0] - t
        inv = np.exp(-out[:, 1])
        d = np.empty_like(out)
        d[:, 0] = r * inv / n
        d[:, 1] = 0.5 * (1.0 - r * r * inv) / n
        g_w3 = h2.T @ d
        d_z2 = (d @ w3.T) * (1.0 - h2 * h2)
        g_w2 = h1.T @ d_z2
        d_z1 = (d_z2 @ w2.T) * (1.0 - h1 * h1)
        g_w1 = x.T @ d_z1
        return g_w1, d_z1.sum(axis=0), g_w2, d_z2.sum(axis=0), g_w3, d.sum(axis=0)

    data = synth_regression(200, 7)
    params = init_parameters(1, 2, TrainConfig(), "heteroscedastic")
    args = (data.x, data.y, *params.arrays())
    ref = loss_and_grad(params, data.x, data.y)[1]
    got = step_nb(*args)
    assert all(np.allclose(a, b, rtol=1e-12, atol=1e-14) for a, b in zip(ref, got))
    return (lambda: loss_and_grad(params, data.x, data.y)), (lambda: step_nb(*args))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=int, default=1, help="multiply problem sizes")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    cases = kernel_cases(args.scale)
    print(f"{'kernel':<20}{'numba':>12}{'numpy':>12}{'speed-up':>10}")
    for name, fn in cases.items():
        times = {}
        for backend in ("numba", "numpy"):
            previous = _accel.set_backend(backend)
            try:
                fn()
                times[backend] = best_of(fn, args.repeat, 3)
            finally:
                _accel.set_backend(previous)
        print(f"{name:<20}{times['numba'] * 1e3:>10.2f}ms{times['numpy'] * 1e3:>10.2f}ms"
              f"{times['numpy'] / times['numba']:>9.1f}x")

    np_step, nb_step = training_step_case()
    t_np = best_of(np_step, args.repeat, 200)
    t_nb = best_of(nb_step, args.repeat, 200)
    print(f"{'training step':<20}{t_nb * 1e6:>10.0f}us{t_np * 1e6:>10.0f}us{t_np / t_nb:>9.2f}x")


if __name__ == "__main__":
    main()
