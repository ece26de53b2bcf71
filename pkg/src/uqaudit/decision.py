"""Bayes-optimal actions under a loss matrix, with a reject option."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import CategoricalDistribution, McRegressionSet
from .errors import ArityMismatch, MalformedFile
from .rng import CounterRng

DEFAULT_REJECT = 0.05
REGRESSION_DRAWS = 10_000


@dataclass(frozen=True, eq=False)
class LossMatrix:
    """``cost[a, k]`` is the cost of taking action ``a`` when the outcome is class ``k``."""

    actions: tuple
    outcomes: tuple
    cost: np.ndarray

    def __post_init__(self):
        cost = np.array(self.cost, dtype=np.float64)
        object.__setattr__(self, "actions", tuple(str(a) for a in self.actions))
        object.__setattr__(self, "outcomes", tuple(str(o) for o in self.outcomes))
        if not self.actions:
            raise ValueError("a loss matrix needs at least one action")
        if cost.shape != (len(self.actions), len(self.outcomes)):
            raise ValueError(f"cost shape {cost.shape} does not match "
                             f"{len(self.actions)} actions x {len(self.outcomes)} outcomes")
        if not np.all(np.isfinite(cost)) or np.any(cost < 0):
            raise ValueError("costs must be finite and non-negative")
        cost.setflags(write=False)
        object.__setattr__(self, "cost", cost)

    @classmethod
    def zero_one(cls, n_classes, names=None):
        names = names or [str(k) for k in range(n_classes)]
        return cls(names, names, 1.0 - np.eye(n_classes))

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(obj["actions"], obj["outcomes"], obj["cost"])
        except (KeyError, TypeError) as exc:
            raise MalformedFile(f"loss matrix needs actions, outcomes and cost: {exc}") from None

    @classmethod
    def from_json(cls, path):
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedFile(f"{path}: {exc}") from None
        try:
            return cls.from_dict(obj)
        except ValueError as exc:
            raise MalformedFile(f"{path}: {exc}") from None

    def to_dict(self):
        return {"actions": list(self.actions), "outcomes": list(self.outcomes),
                "cost": self.cost.tolist()}


@dataclass(frozen=True)
class Decision:
    kind: str  # "predict" or "abstain"
    action: str | None
    action_index: int | None
    expected_losses: tuple
    error_estimate: float


def _probs(dist):
    if isinstance(dist, CategoricalDistribution):
        return dist.probs
    return np.asarray(dist, dtype=np.float64)


def expected_loss(dist, loss):
    """Expected cost of every action, ``sum_k L(a|k) p_k``; shape ``(..., A)``."""
    p = _probs(dist)
    if p.shape[-1] != len(loss.outcomes):
        raise ArityMismatch(f"distribution has {p.shape[-1]} outcomes, loss matrix {len(loss.outcomes)}")
    return p @ loss.cost.T


def _abstains(max_prob, threshold):
    return max_prob < 1.0 - threshold


def optimal_action(dist, loss):
    el = expected_loss(dist, loss)
    if el.ndim != 1:
        raise ValueError("optimal_action takes one distribution; use decide_batch for many")
    a = int(np.argmin(el))  # first minimum = declaration order tie-break
    return Decision("predict", loss.actions[a], a, tuple(float(v) for v in el),
                    float(1.0 - _probs(dist).max()))


def reject(dist, loss, threshold=DEFAULT_REJECT):
    """Abstain when the estimated error probability ``1 - max_k p_k`` exceeds ``threshold``.

    The comparison is evaluated as ``max_k p_k < 1 - threshold`` so that a
    boundary probability such as 0.95 is not pushed over by the rounding of
    ``1 - 0.95``.
    """
    if not 0 <= threshold <= 1:
        raise ValueError("threshold must lie in [0, 1]")
    d = optimal_action(dist, loss)
    if _abstains(_probs(dist).max(), threshold):
        return Decision("abstain", None, None, d.expected_losses, d.error_estimate)
    return d


@dataclass(frozen=True)
class BatchDecisions:
    action_index: np.ndarray  # -1 where abstaining
    expected_losses: np.ndarray
    error_estimate: np.ndarray

    @property
    def abstain(self):
        return self.action_index < 0


def decide_batch(probs, loss, threshold=None):
    """Vectorised :func:`reject` (or :func:`optimal_action` when ``threshold`` is None)."""
    p = _probs(probs)
    el = expected_loss(p, loss)
    action = np.argmin(el, axis=-1)
    err = 1.0 - p.max(axis=-1)
    if threshold is not None:
        if not 0 <= threshold <= 1:
            raise ValueError("threshold must lie in [0, 1]")
        action = np.where(_abstains(p.max(axis=-1), threshold), -1, action)
    return BatchDecisions(action, el, err)


@dataclass(frozen=True)
class CoveragePoint:
    threshold: float
    coverage: float
    mean_cost: float | None  # None when every example abstained
    abstentions: int


def coverage_curve(dataset, loss, thresholds):
    """Coverage and realised mean cost on accepted examples for each threshold.

    Outcome ``k`` of the loss matrix is class index ``k`` of the dataset.
    """
    probs = dataset.point_probs()
    el = expected_loss(probs, loss)
    action = np.argmin(el, axis=-1)
    max_prob = probs.max(axis=-1)
    realised = loss.cost[action, dataset.labels]
    n = len(dataset)
    out = []
    for thr in thresholds:
        if not 0 <= thr <= 1:
            raise ValueError("thresholds must lie in [0, 1]")
        accepted = ~_abstains(max_prob, thr)
        k = int(accepted.sum())
        mean_cost = float(realised[accepted].mean()) if k else None
        out.append(CoveragePoint(float(thr), k / n, mean_cost, n - k))
    return out


def sample_mixture(mc, n_draws, seed, variances=None):
    """Draws from one equal-weight Gaussian mixture using the in-repo RNG."""
    if isinstance(mc, McRegressionSet):
        means, var = mc.means, mc.variances
    else:
        means, var = np.asarray(mc, dtype=np.float64), np.asarray(variances, dtype=np.float64)
    rng = CounterRng(seed)
    comp = rng.integers(means.shape[-1], size=n_draws)
    return means[comp] + np.sqrt(var[comp]) * rng.normal(n_draws)


def regression_expected_loss(mc, actions, loss_fn, seed=0, n_draws=REGRESSION_DRAWS, variances=None):
    """Monte-Carlo expected loss of finite ``actions`` against a regression mixture.

    ``loss_fn(action, y)`` must accept an array of target draws ``y``.
    """
    y = sample_mixture(mc, n_draws, seed, variances)
    return np.array([float(np.mean(loss_fn(a, y))) for a in actions])


def regression_optimal_action(mc, actions, loss_fn, seed=0, n_draws=REGRESSION_DRAWS, variances=None):
    el = regression_expected_loss(mc, actions, loss_fn, seed, n_draws, variances)
    a = int(np.argmin(el))
    return actions[a], el
