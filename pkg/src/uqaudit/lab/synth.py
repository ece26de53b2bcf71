"""Seeded synthetic datasets for the ensemble lab."""

from dataclasses import dataclass

import numpy as np

from ..rng import CounterRng

REGRESSION_NOISE_VAR = 0.01
GAP_HALF_WIDTH = 0.2
BLOB_VAR = 0.05


@dataclass(frozen=True, eq=False)
class LabData:
    x: np.ndarray  # (n, d)
    y: np.ndarray  # (n,) float targets or int class labels
    groups: np.ndarray | None = None


def synth_regression(n, seed):
    """1-D inputs on ``[-1, -0.2) U [0.2, 1)`` with ``y = sin(2 pi x) + N(0, 0.01)``.

    The empty band around zero is where an ensemble should disagree.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = CounterRng(seed)
    width = 1.0 - GAP_HALF_WIDTH
    x = -1.0 + 2.0 * width * rng.uniform(n)
    x = np.where(x >= -GAP_HALF_WIDTH, x + 2.0 * GAP_HALF_WIDTH, x)
    y = np.sin(2.0 * np.pi * x) + rng.normal(n, scale=np.sqrt(REGRESSION_NOISE_VAR))
    return LabData(x[:, None], y)


def blob_means(n_classes):
    angle = 2.0 * np.pi * np.arange(n_classes) / n_classes
    return np.stack([np.cos(angle), np.sin(angle)], axis=1)


def synth_classification(n, n_classes, seed):
    """Balanced isotropic 2-D Gaussian blobs (variance 0.05) centred on the unit circle."""
    if n < n_classes:
        raise ValueError("need n >= n_classes")
    rng = CounterRng(seed)
    labels = np.arange(n) % n_classes
    x = blob_means(n_classes)[labels] + rng.normal((n, 2), scale=np.sqrt(BLOB_VAR))
    return LabData(x, labels.astype(np.int64))


def bayes_classify(x, n_classes):
    """Bayes-optimal label for :func:`synth_classification` (nearest blob centre)."""
    d = ((np.asarray(x)[:, None, :] - blob_means(n_classes)[None]) ** 2).sum(axis=2)
    return np.argmin(d, axis=1)


def synth_group_shift(n_group0, n_group1, seed, offset=1.5):
    """Binary task where the two sensitive groups occupy different input regions.

    ``x1 ~ N(-offset, 0.25)`` for group 0 and ``N(+offset, 0.25)`` for group 1,
    ``x2 ~ N(0, 1)``, and ``P(y = 1 | x) = sigmoid(3 x2)`` for both groups.
    Shrinking ``n_group1`` reproduces an under-represented group.
    """
    rng = CounterRng(seed)
    groups = np.concatenate([np.zeros(n_group0, np.int64), np.ones(n_group1, np.int64)])
    n = groups.size
    x1 = np.where(groups == 0, -offset, offset) + rng.normal(n, scale=0.5)
    x2 = rng.normal(n)
    p = 1.0 / (1.0 + np.exp(-3.0 * x2))
    y = (rng.uniform(n) < p).astype(np.int64)
    return LabData(np.stack([x1, x2], axis=1), y, groups)
