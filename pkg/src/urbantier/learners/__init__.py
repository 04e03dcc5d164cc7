"""Binary probabilistic base learners: logistic, random forest, GBDT."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .ensemble import GBDTModel, RandomForestModel, fit_gbdt, fit_random_forest
from .logistic import LogisticModel, fit_logistic, loss_and_grad, sigmoid
from .spec import BinaryLearnerSpec
from .tree import BinMapper, DecisionTree, grow_tree

__all__ = [
    "BinaryLearnerSpec", "BinMapper", "DecisionTree", "grow_tree",
    "LogisticModel", "RandomForestModel", "GBDTModel",
    "fit_logistic", "fit_random_forest", "fit_gbdt", "fit_binary",
    "model_from_dict", "feature_gain", "loss_and_grad", "sigmoid",
]


def fit_binary(X: np.ndarray, y: np.ndarray, spec: BinaryLearnerSpec):
    """Dispatch to the learner named by ``spec.kind``."""
    if spec.kind == "logistic":
        return fit_logistic(X, y, l2_penalty=spec.l2_penalty)
    if spec.kind == "random_forest":
        return fit_random_forest(X, y, spec)
    return fit_gbdt(X, y, spec)


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "logistic":
        return LogisticModel.from_dict(d)
    if kind == "random_forest":
        return RandomForestModel.from_dict(d)
    if kind == "gbdt":
        return GBDTModel.from_dict(d)
    raise DataError(f"unknown model kind {kind!r}")


def feature_gain(model, feature_names) -> dict:
    """Total split gain per feature name over all trees of an ensemble."""
    if not hasattr(model, "feature_gains"):
        raise DataError("feature gain is defined for tree ensembles only")
    gains = model.feature_gains(len(feature_names))
    return {name: float(g) for name, g in zip(feature_names, gains)}
