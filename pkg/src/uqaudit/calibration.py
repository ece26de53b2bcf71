"""Scoring rules and calibration diagnostics.

Classification metrics accept point or Monte-Carlo datasets; MC samples are
averaged into the predictive distribution first. Binning everywhere uses
equal-width bins on ``[0, 1]``: value ``v`` goes to bin ``floor(v * S)`` and
``v == 1`` goes to the last bin.
"""

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import kernels
from .core import CLASSIFICATION, REGRESSION, McRegressionSet
from .errors import DegenerateComponent, InfiniteLoss, NoTailMass, UndefinedRatio, UnnormalizedStatistic
from .metrics_classification import argmax_lowest, predictive_entropy
from .metrics_regression import mixture_cdf

DEFAULT_BINS = 10


@dataclass(frozen=True)
class CalibrationBin:
    lower: float
    upper: float
    count: int
    mean_statistic: float | None  # None for an empty bin
    empirical_rate: float | None


@dataclass(frozen=True)
class ReliabilityBinning:
    bins: list
    total: int

    def to_csv(self):
        """Reliability-diagram table: ``bin_lower,bin_upper,count,mean_confidence,accuracy``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_lower", "bin_upper", "count", "mean_confidence", "accuracy"])
        for b in self.bins:
            w.writerow([repr(b.lower), repr(b.upper), b.count,
                        "" if b.mean_statistic is None else repr(b.mean_statistic),
                        "" if b.empirical_rate is None else repr(b.empirical_rate)])
        return buf.getvalue()


@dataclass(frozen=True)
class PavpuCounts:
    n_ac: int
    n_au: int
    n_ic: int
    n_iu: int


@dataclass(frozen=True)
class PavpuResult:
    counts: PavpuCounts
    p_accurate_given_certain: float | None
    p_uncertain_given_inaccurate: float | None
    pavpu: float
    threshold: float


def _require_classification(dataset):
    if dataset.task != CLASSIFICATION:
        raise TypeError("this metric needs a classification dataset")


def _true_class_probs(dataset):
    probs = dataset.point_probs()
    return probs, probs[np.arange(len(dataset)), dataset.labels]


def nll(dataset):
    """Mean negative log-probability of the true class (nats)."""
    _require_classification(dataset)
    _, p_true = _true_class_probs(dataset)
    zero = np.flatnonzero(p_true <= 0)
    if zero.size:
        ids = [dataset.ids[i] for i in zero[:5]]
        raise InfiniteLoss(f"true-class probability is 0 for {zero.size} example(s), e.g. {ids}")
    return float(-np.log(p_true).mean())


def brier(dataset):
    """Mean over examples of ``(1/K) * sum_k (p_k - onehot_k)**2``."""
    _require_classification(dataset)
    probs = dataset.point_probs()
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(dataset)), dataset.labels] = 1.0
    return float(((probs - onehot) ** 2).mean(axis=1).mean())


def bin_index(values, n_bins):
    idx = np.floor(np.asarray(values, dtype=np.float64) * n_bins).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def _binned_gap(stat, hit, n_bins):
    """Weighted |rate - mean stat| over equal-width bins of ``stat``."""
    if n_bins < 1:
        raise ValueError("need at least one bin")
    n = stat.shape[0]
    counts, stat_sum, hit_sum = kernels.bin_accumulate(bin_index(stat, n_bins), stat, hit, n_bins)
    bins = []
    error = 0.0
    for s in range(n_bins):
        c = int(counts[s])
        if c:
            mean_stat = stat_sum[s] / c
            rate = hit_sum[s] / c
            error += (c / n) * abs(rate - mean_stat)
            bins.append(CalibrationBin(s / n_bins, (s + 1) / n_bins, c, float(mean_stat), float(rate)))
        else:
            bins.append(CalibrationBin(s / n_bins, (s + 1) / n_bins, 0, None, None))
    return ReliabilityBinning(bins, n), float(error)


def reliability(dataset, n_bins=DEFAULT_BINS):
    """Reliability binning over max-probability confidence, and the ECE."""
    _require_classification(dataset)
    probs = dataset.point_probs()
    conf = probs.max(axis=1)
    correct = (argmax_lowest(probs) == dataset.labels).astype(np.float64)
    return _binned_gap(conf, correct, n_bins)


def ece(dataset, n_bins=DEFAULT_BINS):
    return reliability(dataset, n_bins)[1]


def default_uncertainty(dataset):
    """Predictive entropy divided by ``ln K`` for each example."""
    return np.atleast_1d(predictive_entropy(dataset.point_probs(), normalized=True))


def _check_unit(u):
    u = np.asarray(u, dtype=np.float64)
    if np.any(~((u >= 0) & (u <= 1))):
        raise UnnormalizedStatistic("uncertainty statistic must lie in [0, 1]")
    return u


def uce(dataset, uncertainty=None, n_bins=DEFAULT_BINS):
    """Uncertainty calibration error: weighted |error rate - mean uncertainty| per bin.

    Returns ``(ReliabilityBinning, uce)``; bins hold mean uncertainty and error rate.
    """
    _require_classification(dataset)
    u = default_uncertainty(dataset) if uncertainty is None else _check_unit(uncertainty)
    if u.shape != (len(dataset),):
        raise ValueError("need one uncertainty value per example")
    wrong = (argmax_lowest(dataset.point_probs()) != dataset.labels).astype(np.float64)
    return _binned_gap(u, wrong, n_bins)


def _ratio(num, den, name):
    if den == 0:
        warnings.warn(f"{name} undefined: denominator is 0", UndefinedRatio, stacklevel=3)
        return None
    return num / den


def pavpu(dataset, uncertainty=None, threshold=0.5):
    """Accuracy-versus-uncertainty counts and the PAvPU ratios.

    An example is *certain* when its uncertainty is strictly below
    ``threshold``. Ratios with a zero denominator come back as ``None`` with an
    :class:`~uqaudit.errors.UndefinedRatio` warning.
    """
    _require_classification(dataset)
    if not 0 <= threshold <= 1:
        raise ValueError("threshold must lie in [0, 1]")
    u = default_uncertainty(dataset) if uncertainty is None else _check_unit(uncertainty)
    accurate = argmax_lowest(dataset.point_probs()) == dataset.labels
    certain = u < threshold
    counts = PavpuCounts(
        n_ac=int(np.sum(accurate & certain)),
        n_au=int(np.sum(accurate & ~certain)),
        n_ic=int(np.sum(~accurate & certain)),
        n_iu=int(np.sum(~accurate & ~certain)),
    )
    return pavpu_from_counts(counts, threshold)


def pavpu_from_counts(counts, threshold=None):
    total = counts.n_ac + counts.n_au + counts.n_ic + counts.n_iu
    return PavpuResult(
        counts,
        _ratio(counts.n_ac, counts.n_ac + counts.n_ic, "p(accurate | certain)"),
        _ratio(counts.n_iu, counts.n_ic + counts.n_iu, "p(uncertain | inaccurate)"),
        (counts.n_ac + counts.n_iu) / total,
        threshold,
    )


def pit(dataset):
    """Probability integral transform of each target under its predictive mixture."""
    if dataset.task != REGRESSION:
        raise TypeError("PIT needs a regression dataset")
    pred = dataset.prediction
    return np.atleast_1d(mixture_cdf(McRegressionSet(pred.means, pred.variances), dataset.labels))


def rce(pit_values, n_bins=DEFAULT_BINS):
    """Regression calibration error: ``sum_s (|B_s|/N) * |1/S - |B_s|/N|``."""
    v = _check_unit(pit_values)
    if n_bins < 1:
        raise ValueError("need at least one bin")
    n = v.shape[0]
    counts = np.bincount(bin_index(v, n_bins), minlength=n_bins)
    frac = counts / n
    return float(np.sum(frac * np.abs(1.0 / n_bins - frac)))


def tail_counts(pit_values, tau):
    v = np.asarray(pit_values, dtype=np.float64)
    return int(np.sum(v < tau)), int(np.sum(v >= 1.0 - tau))


def tce(pit_values, tau=0.05):
    """Tail calibration error over the two tail bins ``v < tau`` and ``v >= 1 - tau``.

    Each tail's occupancy is compared with ``tau``, its mass under a calibrated
    model: ``sum_s |B_s|/(|B_0|+|B_1|) * |tau - |B_s|/N|``.
    """
    if not 0 < tau < 0.5:
        raise ValueError("tau must lie in (0, 0.5)")
    v = _check_unit(pit_values)
    n = v.shape[0]
    b0, b1 = tail_counts(v, tau)
    if b0 + b1 == 0:
        raise NoTailMass(f"no PIT values in either tail at tau={tau}")
    total = b0 + b1
    return float(sum((b / total) * abs(tau - b / n) for b in (b0, b1)))


def ks_uniform_distance(values):
    """Kolmogorov-Smirnov distance between the empirical CDF of ``values`` and U(0, 1)."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = v.shape[0]
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - v), np.max(v - (i - 1) / n)))


def group_reliability(dataset, n_bins=DEFAULT_BINS):
    """ECE computed separately on each sensitive group; ``None`` for an absent group."""
    out = {}
    for g in (0, 1):
        idx = np.flatnonzero(dataset.groups == g)
        out[g] = reliability(dataset.subset(idx), n_bins)[1] if idx.size else None
    return out


def mixture_nll(dataset):
    """Mean negative log predictive density of regression targets under their mixtures."""
    if dataset.task != REGRESSION:
        raise TypeError("mixture_nll needs a regression dataset")
    pred = dataset.prediction
    var = pred.variances
    if np.any(~(var > 0)):
        raise DegenerateComponent("mixture components need strictly positive variance")
    y = dataset.labels[:, None]
    log_comp = -0.5 * (np.log(2.0 * np.pi * var) + (y - pred.means) ** 2 / var)
    log_dens = special.logsumexp(log_comp, axis=1) - np.log(var.shape[1])
    return float(-log_dens.mean())
