"""Deep ensembles and MC dropout on top of :mod:`uqaudit.lab.mlp`."""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..core import McClassificationSet, McRegressionSet
from ..rng import CounterRng, split_seed
from .mlp import (
    MlpParameters,
    TrainConfig,
    _check_input,
    forward,
    head_distribution,
    train_mlp,
    with_seed,
)

DEFAULT_MEMBERS = 15


@dataclass(eq=False)
class MlpEnsemble:
    members: list
    config: TrainConfig
    head: str
    member_seeds: tuple

    def __len__(self):
        return len(self.members)

    def to_dict(self):
        cfg = asdict(self.config)
        cfg["hidden_widths"] = list(cfg["hidden_widths"])
        return {
            "schema": 1,
            "kind": "ensemble",
            "head": self.head,
            "config": cfg,
            "member_seeds": [str(s) for s in self.member_seeds],
            "members": [m.to_dict() for m in self.members],
        }

    @classmethod
    def from_dict(cls, obj):
        members = [MlpParameters.from_dict(m) for m in obj["members"]]
        return cls(members, TrainConfig(**obj["config"]), obj["head"],
                   tuple(int(s) for s in obj["member_seeds"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def member_seeds(master_seed, n_members):
    return tuple(split_seed(master_seed, i) for i in range(n_members))


def train_ensemble(x, y, n_members=DEFAULT_MEMBERS, config=None, head="heteroscedastic",
                   n_classes=None, n_jobs=1):
    """Train ``n_members`` networks from seeds ``split_seed(config.seed, i)``.

    Members are independent, so ``n_jobs > 1`` trains them on a thread pool;
    they are collected by index and the result does not depend on ``n_jobs``.
    """
    if n_members < 1:
        raise ValueError("need at least one member")
    config = config or TrainConfig()
    seeds = member_seeds(config.seed, n_members)
    if head == "softmax" and n_classes is None:
        n_classes = int(np.max(y)) + 1

    def fit(seed):
        return train_mlp(x, y, with_seed(config, seed), head, n_classes)

    if n_jobs == 1:
        members = [fit(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            members = list(pool.map(fit, seeds))
    return MlpEnsemble(members, config, head, seeds)


def _stack(outputs, head):
    if head == "softmax":
        return McClassificationSet(np.stack(outputs, axis=1))
    means = np.stack([m for m, _ in outputs], axis=1)
    variances = np.stack([v for _, v in outputs], axis=1)
    return McRegressionSet(means, variances)


def predict(ensemble, x):
    """One predictive sample per member, ordered by member index.

    Returns a batched :class:`McRegressionSet` (``(N, M)``) or
    :class:`McClassificationSet` (``(N, M, K)``).
    """
    x = _check_input(ensemble.members[0], x)
    outputs = [head_distribution(m, forward(m, x)[0]) for m in ensemble.members]
    return _stack(outputs, ensemble.head)


def mc_dropout_predict(model, x, n_samples, rate, seed):
    """``n_samples`` stochastic forward passes with Bernoulli dropout on both hidden layers.

    Each hidden unit is kept with probability ``1 - rate`` independently per
    example and pass, and kept units are scaled by ``1 / (1 - rate)``.
    """
    if not 0 <= rate < 1:
        raise ValueError("dropout rate must lie in [0, 1)")
    if n_samples < 1:
        raise ValueError("need at least one sample")
    x = _check_input(model, x)
    rng = CounterRng(seed)
    keep = 1.0 - rate
    widths = model.config.hidden_widths
    outputs = []
    for _ in range(n_samples):
        masks = [(rng.uniform((x.shape[0], w)) < keep) / keep for w in widths]
        outputs.append(head_distribution(model, forward(model, x, masks)[0]))
    return _stack(outputs, model.head)
