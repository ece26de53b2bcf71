"""Entropy-based uncertainty statistics for classifiers.

All entropies are in nats. Functions take arrays (or the container types from
:mod:`uqaudit.core`) and broadcast over leading batch axes: a distribution is
``(..., K)`` and a Monte-Carlo set is ``(..., T, K)``.
"""

from dataclasses import dataclass

import numpy as np

from .core import CategoricalDistribution, McClassificationSet


@dataclass(frozen=True)
class EntropyDecomposition:
    predictive_entropy: np.ndarray | float
    expected_entropy: np.ndarray | float
    mutual_information: np.ndarray | float


def _probs(dist):
    if isinstance(dist, CategoricalDistribution):
        return dist.probs
    return np.asarray(dist, dtype=np.float64)


def _samples(mc):
    if isinstance(mc, McClassificationSet):
        return mc.samples
    return np.asarray(mc, dtype=np.float64)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def predictive_distribution(mc):
    """Average the T sampled distributions: ``(..., T, K) -> (..., K)``."""
    return _samples(mc).mean(axis=-2)


def _entropy(p):
    # 0 * log 0 := 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return -terms.sum(axis=-1)


def predictive_entropy(dist, normalized=False):
    """Shannon entropy of a categorical distribution.

    With ``normalized=True`` the result is divided by ``ln K`` so it lies in
    ``[0, 1]``.
    """
    p = _probs(dist)
    h = np.maximum(_entropy(p), 0.0)
    if normalized:
        h = h / np.log(p.shape[-1])
    return _scalar(h)


def entropy_decomposition(mc, normalized=False):
    """Split predictive entropy into expected entropy (aleatoric) and MI (epistemic).

    ``mutual_information`` is computed as the difference so the identity
    ``H = EH + MI`` holds to rounding; it is clamped at zero only when the
    difference is negative by round-off (< 1e-12).
    """
    s = _samples(mc)
    h = np.maximum(_entropy(s.mean(axis=-2)), 0.0)
    eh = np.maximum(_entropy(s), 0.0).mean(axis=-1)
    mi = h - eh
    mi = np.where((mi < 0) & (mi > -1e-12), 0.0, mi)
    if normalized:
        scale = np.log(s.shape[-1])
        h, eh, mi = h / scale, eh / scale, mi / scale
    return EntropyDecomposition(_scalar(h), _scalar(eh), _scalar(mi))


def argmax_lowest(p):
    """Argmax along the last axis; ties resolve to the lowest class index."""
    return np.argmax(np.asarray(p), axis=-1)


def variation_ratio(mc):
    """``1 - f/T`` with ``f`` the vote count of the modal predicted class.

    Both the per-sample argmax and the modal class break ties toward the
    lowest class index.
    """
    s = _samples(mc)
    votes = argmax_lowest(s)  # (..., T)
    k = s.shape[-1]
    counts = (votes[..., None] == np.arange(k)).sum(axis=-2)  # (..., K)
    f = counts.max(axis=-1)
    return _scalar(1.0 - f / s.shape[-2])


def per_example_summary(dataset):
    """Per-example uncertainty statistics as a dict of ``(N,)`` arrays."""
    if dataset.kind == "point":
        probs = dataset.point_probs()
        h = predictive_entropy(probs)
        return {
            "max_prob": probs.max(axis=-1),
            "predicted_class": argmax_lowest(probs),
            "predictive_entropy": np.atleast_1d(h),
            "normalized_entropy": np.atleast_1d(predictive_entropy(probs, normalized=True)),
        }
    samples = dataset.prediction.samples
    probs = samples.mean(axis=-2)
    dec = entropy_decomposition(samples)
    return {
        "max_prob": probs.max(axis=-1),
        "predicted_class": argmax_lowest(probs),
        "predictive_entropy": np.atleast_1d(dec.predictive_entropy),
        "expected_entropy": np.atleast_1d(dec.expected_entropy),
        "mutual_information": np.atleast_1d(dec.mutual_information),
        "normalized_entropy": np.atleast_1d(dec.predictive_entropy) / np.log(samples.shape[-1]),
        "variation_ratio": np.atleast_1d(variation_ratio(samples)),
    }
