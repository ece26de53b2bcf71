"""Group-fairness audit for binary classifiers with a binary sensitive attribute.

Group ``A = 0`` is treated as the unprivileged group, and signed gaps are
``group 0 - group 1``.

Sensitive-attribute noise follows the mutually contaminated model: an
example whose true group is ``g`` is observed in the other group with
probability ``rho_g``, independently of everything else.
"""

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .core import CLASSIFICATION
from .errors import (
    MissingGroup,
    NoiseTooLarge,
    SingleGroupOnly,
    UncorrectedMetric,
    UndefinedConditional,
)
from .rng import CounterRng

DEFAULT_DECISION_THRESHOLD = 0.5


@dataclass(frozen=True)
class GroupStats:
    count: int
    positive_rate: float
    true_positive_rate: float | None  # None when the group has no Y=1 examples
    false_positive_rate: float | None
    n_label_positive: int
    n_label_negative: int


@dataclass(frozen=True)
class GroupRates:
    group0: GroupStats | None
    group1: GroupStats | None
    decision_threshold: float

    def to_dict(self):
        return {"decision_threshold": self.decision_threshold,
                "group0": None if self.group0 is None else asdict(self.group0),
                "group1": None if self.group1 is None else asdict(self.group1)}


@dataclass(frozen=True)
class DisparityReport:
    dp_gap: float | None
    eq_gap: float | None
    eo_gap: float | None

    def to_dict(self):
        return {
            "dp_gap": self.dp_gap,
            "eq_gap": self.eq_gap,
            "eo_gap": self.eo_gap,
            "abs_dp_gap": None if self.dp_gap is None else abs(self.dp_gap),
            "abs_eq_gap": None if self.eq_gap is None else abs(self.eq_gap),
        }


@dataclass(frozen=True)
class NoiseRates:
    rho0: float
    rho1: float

    def __post_init__(self):
        for name in ("rho0", "rho1"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.rho0 + self.rho1 >= 1:
            raise NoiseTooLarge(f"rho0 + rho1 = {self.rho0 + self.rho1} must be < 1")


def predicted_positive(dataset, decision_threshold=DEFAULT_DECISION_THRESHOLD):
    if dataset.task != CLASSIFICATION or dataset.n_classes != 2:
        raise TypeError("fairness metrics need a binary classification dataset")
    return dataset.point_probs()[:, 1] >= decision_threshold


def _stats(yhat, y):
    pos, neg = y == 1, y == 0
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    return GroupStats(
        count=int(yhat.size),
        positive_rate=float(yhat.mean()),
        true_positive_rate=float(yhat[pos].mean()) if n_pos else None,
        false_positive_rate=float(yhat[neg].mean()) if n_neg else None,
        n_label_positive=n_pos,
        n_label_negative=n_neg,
    )


def rates_from_arrays(yhat, labels, groups, decision_threshold=DEFAULT_DECISION_THRESHOLD):
    """Per-group rates from boolean predictions, binary labels and groups."""
    yhat = np.asarray(yhat, dtype=bool)
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    if np.any((groups != 0) & (groups != 1)):
        raise MissingGroup("every example needs a sensitive group of 0 or 1")
    out = []
    for g in (0, 1):
        m = groups == g
        if not m.any():
            warnings.warn(f"no examples in group {g}; gaps are undefined", SingleGroupOnly, stacklevel=3)
            out.append(None)
        else:
            out.append(_stats(yhat[m], labels[m]))
    return GroupRates(out[0], out[1], float(decision_threshold))


def group_rates(dataset, decision_threshold=DEFAULT_DECISION_THRESHOLD):
    """Positive, true-positive and false-positive rates per group.

    ``Y_hat = 1`` iff ``p_1 >= decision_threshold``.
    """
    if not dataset.has_groups:
        missing = [dataset.ids[i] for i in np.flatnonzero(dataset.groups < 0)[:5]]
        raise MissingGroup(f"examples without a sensitive group, e.g. {missing}")
    yhat = predicted_positive(dataset, decision_threshold)
    return rates_from_arrays(yhat, dataset.labels, dataset.groups, decision_threshold)


def _gap(a, b, name):
    if a is None or b is None:
        warnings.warn(f"{name} undefined: a conditioning stratum is empty", UndefinedConditional,
                      stacklevel=3)
        return None
    return a - b


def disparity(rates):
    """Demographic parity, equal opportunity and equalized odds gaps."""
    g0, g1 = rates.group0, rates.group1
    if g0 is None or g1 is None:
        warnings.warn("a group is absent; all gaps undefined", UndefinedConditional, stacklevel=2)
        return DisparityReport(None, None, None)
    dp = g0.positive_rate - g1.positive_rate
    eq = _gap(g0.true_positive_rate, g1.true_positive_rate, "equal opportunity gap")
    fpr = _gap(g0.false_positive_rate, g1.false_positive_rate, "false positive rate gap")
    eo = None if eq is None or fpr is None else abs(eq) + abs(fpr)
    return DisparityReport(dp, eq, eo)


def contaminate(dataset, noise, seed):
    """Copy of ``dataset`` whose groups are flipped with probability ``rho_{true group}``."""
    if not dataset.has_groups:
        raise MissingGroup("contamination needs every example to carry a group")
    return dataset.with_groups(contaminate_groups(dataset.groups, noise, seed))


def contaminate_groups(groups, noise, seed):
    groups = np.asarray(groups, dtype=np.int64)
    rho = np.array([noise.rho0, noise.rho1])
    flip = CounterRng(seed).uniform(groups.shape[0]) < rho[groups]
    return np.where(flip, 1 - groups, groups)


def dp_scaling_factor(noise, observed_group0_share=None):
    """Ratio of the expected observed DP gap to the true one.

    Without ``observed_group0_share`` this is ``1 - rho0 - rho1``, exact when
    the noise is symmetric and the true groups are balanced. Given the observed
    share ``q0`` of group 0 the exact factor is
    ``(q0 - rho1) * (q1 - rho0) / ((1 - rho0 - rho1) * q0 * q1)``.
    """
    if noise.rho0 + noise.rho1 >= 1:
        raise NoiseTooLarge(f"rho0 + rho1 = {noise.rho0 + noise.rho1} must be < 1")
    base = 1.0 - noise.rho0 - noise.rho1
    if observed_group0_share is None:
        return base
    q0 = float(observed_group0_share)
    q1 = 1.0 - q0
    if not (q0 > noise.rho1 and q1 > noise.rho0):
        raise ValueError("observed group share is inconsistent with the noise rates")
    return (q0 - noise.rho1) * (q1 - noise.rho0) / (base * q0 * q1)


def corrected_dp(observed_gap, noise, observed_group0_share=None):
    """Estimate the true DP gap from one measured on noisy groups."""
    return observed_gap / dp_scaling_factor(noise, observed_group0_share)


def representation_gap(uncertainty, groups):
    """Mean of a per-example uncertainty statistic per group, and group 1 minus group 0.

    Higher epistemic uncertainty on one group's held-out examples points to
    that group being under-represented in training.
    """
    u = np.asarray(uncertainty, dtype=np.float64)
    groups = np.asarray(groups)
    means = {g: (float(u[groups == g].mean()) if np.any(groups == g) else None) for g in (0, 1)}
    diff = None if None in means.values() else means[1] - means[0]
    return {"group0_mean": means[0], "group1_mean": means[1], "group1_minus_group0": diff}


def audit(dataset, decision_threshold=DEFAULT_DECISION_THRESHOLD, noise=None):
    """Full fairness report with keys rates, gaps, noise_assumption, corrected_dp, warnings."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rates = group_rates(dataset, decision_threshold)
        gaps = disparity(rates)
    notes = [str(w.message) for w in caught]
    corrected = None
    if noise is not None:
        q0 = float(np.mean(dataset.groups == 0))
        corrected = {"dp_gap": None, "dp_gap_share_adjusted": None,
                     "scaling_factor": dp_scaling_factor(noise),
                     "observed_group0_share": q0}
        if gaps.dp_gap is not None:
            corrected["dp_gap"] = corrected_dp(gaps.dp_gap, noise)
            try:
                corrected["dp_gap_share_adjusted"] = corrected_dp(gaps.dp_gap, noise, q0)
            except ValueError as exc:
                notes.append(str(exc))
        msg = "EQ and EO gaps are reported uncorrected under sensitive-attribute noise"
        warnings.warn(msg, UncorrectedMetric, stacklevel=2)
        notes.append(msg)
    return {
        "rates": rates.to_dict(),
        "gaps": gaps.to_dict(),
        "noise_assumption": None if noise is None else {"rho0": noise.rho0, "rho1": noise.rho1,
                                                        "model": "mutually_contaminated"},
        "corrected_dp": corrected,
        "warnings": notes,
    }
