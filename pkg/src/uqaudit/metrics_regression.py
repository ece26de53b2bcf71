"""Summaries of equal-weight Gaussian-mixture predictive distributions.

A Monte-Carlo regression prediction is T Gaussian components ``(mu_t, var_t)``.
Arrays are ``(..., T)``; functions broadcast over leading axes.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import McRegressionSet
from .errors import DegenerateComponent

_BRACKET_SDS = 10.0
_NEG_GUARD = 1e-12


@dataclass(frozen=True)
class VarianceDecomposition:
    mean: np.ndarray | float
    aleatoric_variance: np.ndarray | float
    epistemic_variance: np.ndarray | float
    total_variance: np.ndarray | float


@dataclass(frozen=True)
class DistributionSummary:
    percentiles: list  # [(level, value), ...]
    interval: tuple  # (lower, upper, coverage)
    quartiles: tuple  # (q1, median, q3)
    whiskers: tuple  # (low, high)

    def as_dict(self):
        return {
            "percentiles": [[lvl, val] for lvl, val in self.percentiles],
            "interval": {"lower": self.interval[0], "upper": self.interval[1],
                         "coverage": self.interval[2]},
            "quartiles": {"q1": self.quartiles[0], "median": self.quartiles[1],
                          "q3": self.quartiles[2]},
            "whiskers": {"low": self.whiskers[0], "high": self.whiskers[1]},
        }


def _components(mc, variances=None):
    if isinstance(mc, McRegressionSet):
        return mc.means, mc.variances
    return np.asarray(mc, dtype=np.float64), np.asarray(variances, dtype=np.float64)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def mixture_moments(mc, variances=None):
    """Mean and variance decomposition of the mixture.

    ``aleatoric = mean(var_t)``, ``epistemic = mean(mu_t**2) - mean(mu_t)**2``.
    A negative epistemic term smaller than 1e-12 in magnitude is float
    cancellation and is clamped to zero.
    """
    means, var = _components(mc, variances)
    mu = means.mean(axis=-1)
    aleatoric = var.mean(axis=-1)
    epistemic = (means * means).mean(axis=-1) - mu * mu
    epistemic = np.where((epistemic < 0) & (epistemic > -_NEG_GUARD), 0.0, epistemic)
    return VarianceDecomposition(_scalar(mu), _scalar(aleatoric), _scalar(epistemic),
                                 _scalar(aleatoric + epistemic))


def _require_positive(var):
    if np.any(~(var > 0)):
        raise DegenerateComponent("mixture components need strictly positive variance")


def mixture_cdf(mc, y, variances=None):
    """``mean_t Phi((y - mu_t) / sigma_t)``; broadcasts ``y`` against the batch shape."""
    means, var = _components(mc, variances)
    _require_positive(var)
    batch = np.broadcast_shapes(means.shape[:-1], np.shape(y))
    t = means.shape[-1]
    m = np.broadcast_to(means, batch + (t,)).reshape(-1, t)
    s = np.sqrt(np.broadcast_to(var, batch + (t,)).reshape(-1, t))
    yy = np.broadcast_to(np.asarray(y, dtype=np.float64), batch).reshape(-1)
    return _scalar(kernels.mixture_cdf(m, s, yy).reshape(batch))


def mixture_percentile(mc, level, variances=None):
    """Value below which a fraction ``level`` of the mixture mass lies.

    Bisection on ``[min mu - 10 max sigma, max mu + 10 max sigma]`` run to the
    resolution of double precision (well inside 1e-9 of the component scale).
    """
    means, var = _components(mc, variances)
    _require_positive(var)
    level = np.asarray(level, dtype=np.float64)
    if np.any((level <= 0) | (level >= 1)):
        raise ValueError("percentile levels must lie strictly inside (0, 1)")
    batch = np.broadcast_shapes(means.shape[:-1], level.shape)
    t = means.shape[-1]
    m = np.broadcast_to(means, batch + (t,)).reshape(-1, t)
    s = np.sqrt(np.broadcast_to(var, batch + (t,)).reshape(-1, t))
    q = np.broadcast_to(level, batch).reshape(-1)
    smax = s.max(axis=1)
    lo = m.min(axis=1) - _BRACKET_SDS * smax
    hi = m.max(axis=1) + _BRACKET_SDS * smax
    tol = 1e-12 * smax
    return _scalar(kernels.mixture_quantile(m, s, q, lo, hi, tol).reshape(batch))


def distribution_summary(mc, percentile_levels=(0.025, 0.25, 0.5, 0.75, 0.975),
                         coverage=0.95, variances=None):
    """Percentiles, central interval, quartiles and 1.5 IQR box-plot whiskers.

    Works on a single mixture (``(T,)`` arrays).
    """
    means, var = _components(mc, variances)
    if means.ndim != 1:
        raise ValueError("distribution_summary takes a single mixture; loop over examples")
    if not 0 < coverage < 1:
        raise ValueError("coverage must lie in (0, 1)")
    levels = sorted(float(v) for v in percentile_levels)
    tail = (1.0 - coverage) / 2.0
    wanted = np.array(levels + [tail, 1.0 - tail, 0.25, 0.5, 0.75])
    values = mixture_percentile(means, wanted, variances=var)
    values = np.maximum.accumulate(values[: len(levels)]).tolist() + values[len(levels):].tolist()
    pct = list(zip(levels, values[: len(levels)]))
    lower, upper, q1, med, q3 = values[len(levels):]
    iqr = q3 - q1
    return DistributionSummary(pct, (lower, upper, coverage), (q1, med, q3),
                               (q1 - 1.5 * iqr, q3 + 1.5 * iqr))


def central_interval(mc, coverage=0.95, variances=None):
    """Vectorised ``(lower, upper)`` central interval over a batch of mixtures."""
    means, var = _components(mc, variances)
    tail = (1.0 - coverage) / 2.0
    lower = mixture_percentile(means, np.full(means.shape[:-1], tail), variances=var)
    upper = mixture_percentile(means, np.full(means.shape[:-1], 1.0 - tail), variances=var)
    return lower, upper
