import numpy as np
import pytest

from uqaudit import _accel
from uqaudit.core import CategoricalDistribution, Dataset, McClassificationSet, McRegressionSet
from uqaudit.lab import TrainConfig, loss_and_grad
from uqaudit.lab.mlp import init_parameters, loss_value, output_dim_for
from uqaudit.rng import CounterRng


@pytest.fixture(params=["numba", "numpy"])
def each_backend(request):
    previous = _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(previous)


def point_dataset(probs, labels, groups=None, ids=None):
    probs = np.asarray(probs, dtype=float)
    ids = ids or [f"e{i}" for i in range(len(labels))]
    return Dataset("classification", ids, labels, CategoricalDistribution(probs), groups)


def mc_dataset(samples, labels, groups=None):
    samples = np.asarray(samples, dtype=float)
    return Dataset("classification", [f"e{i}" for i in range(len(labels))], labels,
                   McClassificationSet(samples), groups)


def regression_dataset(means, variances, labels):
    means = np.asarray(means, dtype=float)
    return Dataset("regression", [f"r{i}" for i in range(len(labels))], labels,
                   McRegressionSet(means, variances))


def calibrated_binary(n, seed):
    """Probabilities spread over [0, 1] and labels drawn from them."""
    rng = CounterRng(seed)
    p1 = rng.uniform(n)
    labels = (rng.uniform(n) < p1).astype(int)
    return point_dataset(np.stack([1 - p1, p1], axis=1), labels)


def calibrated_regression(n, seed, n_components=3):
    """Random mixtures with targets sampled from their own predictive distribution."""
    rng = CounterRng(seed)
    means = rng.normal((n, n_components), scale=2.0)
    variances = rng.uniform((n, n_components), low=0.2, high=2.0)
    comp = rng.integers(n_components, size=n)
    rows = np.arange(n)
    y = means[rows, comp] + np.sqrt(variances[rows, comp]) * rng.normal(n)
    return regression_dataset(means, variances, y)


def gradient_relative_errors(head, seed=0, n_coords=10, step=1e-5):
    """Relative error of analytic vs central-difference gradients at random coordinates."""
    rng = CounterRng(seed)
    if head == "softmax":
        x = rng.normal((12, 2))
        y = rng.integers(3, size=12)
    else:
        x = rng.normal((12, 1))
        y = rng.normal(12)
    cfg = TrainConfig(hidden_widths=(6, 5), seed=seed)
    params = init_parameters(x.shape[1], output_dim_for(head, 3), cfg, head)
    # non-zero biases so every gradient block is exercised
    flat = params.flat() + 0.1 * rng.normal(params.flat().size)
    params = params.with_flat(flat)
    _, grads = loss_and_grad(params, x, y)
    analytic = np.concatenate([g.ravel() for g in grads])
    coords = rng.permutation(flat.size)[:n_coords]
    errors = []
    for c in coords:
        up, down = flat.copy(), flat.copy()
        up[c] += step
        down[c] -= step
        numeric = (loss_value(params.with_flat(up), x, y)
                   - loss_value(params.with_flat(down), x, y)) / (2 * step)
        denom = max(abs(numeric), abs(analytic[c]), 1e-8)
        errors.append(abs(numeric - analytic[c]) / denom)
    return np.array(errors)
