"""Small probabilistic model zoo that produces Monte-Carlo prediction sets."""

from .demo import epistemic_contrast, run_demo
from .ensemble import MlpEnsemble, mc_dropout_predict, member_seeds, predict, train_ensemble
from .mlp import HEADS, MlpParameters, TrainConfig, loss_and_grad, train_mlp
from .synth import (
    LabData,
    bayes_classify,
    synth_classification,
    synth_group_shift,
    synth_regression,
)

__all__ = [
    "HEADS",
    "LabData",
    "MlpEnsemble",
    "MlpParameters",
    "TrainConfig",
    "bayes_classify",
    "epistemic_contrast",
    "loss_and_grad",
    "mc_dropout_predict",
    "member_seeds",
    "predict",
    "run_demo",
    "synth_classification",
    "synth_group_shift",
    "synth_regression",
    "train_ensemble",
    "train_mlp",
]
