"""Uncertainty quantification, calibration, decision and fairness audits."""

from ._accel import backend, set_backend
from .core import (
    CategoricalDistribution,
    Dataset,
    GaussianComponent,
    LabeledExample,
    McClassificationSet,
    McRegressionSet,
    Violation,
    parse_predictions,
    validate,
    write_predictions,
)

__version__ = "0.1.0"

__all__ = [
    "CategoricalDistribution",
    "Dataset",
    "GaussianComponent",
    "LabeledExample",
    "McClassificationSet",
    "McRegressionSet",
    "Violation",
    "backend",
    "parse_predictions",
    "set_backend",
    "validate",
    "write_predictions",
]
