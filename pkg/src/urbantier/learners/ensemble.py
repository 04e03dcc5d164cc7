"""Random forest and gradient-boosted tree ensembles on histogram trees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import FitError
from .logistic import sigmoid
from .spec import BinaryLearnerSpec
from .tree import BinMapper, DecisionTree, grow_tree


def _tree_rngs(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


@dataclass
class RandomForestModel:
    trees: list = field(default_factory=list)
    oob_score: float | None = None

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise FitError("empty forest")
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def feature_gains(self, n_features: int) -> np.ndarray:
        return np.sum([t.feature_gains(n_features) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {"kind": "random_forest", "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestModel":
        return cls([DecisionTree.from_dict(t) for t in d["trees"]])


def fit_random_forest(X: np.ndarray, y: np.ndarray, spec: BinaryLearnerSpec,
                      bootstrap: bool = True) -> RandomForestModel:
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise FitError("random forest needs both classes present")
    n = len(y)
    mapper = BinMapper().fit(X)
    binned = mapper.transform(X)
    # mean-of-y leaves: gradients encode squared-error residuals from zero
    grad = np.ascontiguousarray(-y)
    hess = np.ones(n)

    trees = []
    oob_sum = np.zeros(n)
    oob_cnt = np.zeros(n, dtype=np.int64)
    for rng in _tree_rngs(spec.seed, spec.n_estimators):
        m = max(1, int(round(spec.row_fraction * n)))
        if bootstrap:
            rows = np.sort(rng.integers(0, n, size=m))
        else:
            rows = np.sort(rng.choice(n, size=m, replace=False)) if m < n else np.arange(n)
        tree = grow_tree(binned, mapper.thresholds, grad, hess, rows,
                         growth="level_wise", max_depth=spec.max_depth,
                         num_leaves=spec.num_leaves,
                         min_child_samples=spec.min_child_samples,
                         feature_fraction=spec.feature_fraction, rng=rng,
                         per_split_features=True, leaf_value="mean", y=y)
        trees.append(tree)
        out = np.setdiff1d(np.arange(n), rows)
        if len(out):
            oob_sum[out] += tree.predict(X[out])
            oob_cnt[out] += 1

    model = RandomForestModel(trees)
    covered = oob_cnt > 0
    if covered.any():
        pred = (oob_sum[covered] / oob_cnt[covered]) >= 0.5
        model.oob_score = float(np.mean(pred == (y[covered] >= 0.5)))
    return model


@dataclass
class GBDTModel:
    base_score: float = 0.0
    learning_rate: float = 0.1
    trees: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)

    def decision(self, X: np.ndarray) -> np.ndarray:
        z = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            z += self.learning_rate * t.predict(X)
        return z

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision(X))

    def feature_gains(self, n_features: int) -> np.ndarray:
        if not self.trees:
            return np.zeros(n_features)
        return np.sum([t.feature_gains(n_features) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {"kind": "gbdt", "base_score": self.base_score,
                "learning_rate": self.learning_rate,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "GBDTModel":
        return cls(float(d["base_score"]), float(d["learning_rate"]),
                   [DecisionTree.from_dict(t) for t in d["trees"]])


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    eps = 1e-15
    p = np.clip(p, eps, 1 - eps)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def fit_gbdt(X: np.ndarray, y: np.ndarray, spec: BinaryLearnerSpec) -> GBDTModel:
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise FitError("gbdt needs both classes present")
    n = len(y)
    pos_rate = float(np.mean(y))
    base = float(np.log(pos_rate / (1.0 - pos_rate)))
    model = GBDTModel(base_score=base, learning_rate=spec.learning_rate)

    mapper = BinMapper().fit(X)
    binned = mapper.transform(X)
    z = np.full(n, base)
    model.train_loss.append(_log_loss(y, sigmoid(z)))
    for rng in _tree_rngs(spec.seed, spec.n_estimators):
        p = sigmoid(z)
        grad = np.ascontiguousarray(p - y)
        hess = np.ascontiguousarray(p * (1.0 - p))
        if spec.row_fraction < 1.0:
            m = max(1, int(round(spec.row_fraction * n)))
            rows = np.sort(rng.choice(n, size=m, replace=False))
        else:
            rows = np.arange(n)
        tree = grow_tree(binned, mapper.thresholds, grad, hess, rows,
                         growth=spec.growth, max_depth=spec.max_depth,
                         num_leaves=spec.num_leaves,
                         min_child_samples=spec.min_child_samples,
                         feature_fraction=spec.feature_fraction, rng=rng,
                         per_split_features=False)
        if not np.all(np.isfinite([node.value for node in tree.nodes])):
            raise FitError("non-finite leaf value; check hyperparameters")
        model.trees.append(tree)
        z += spec.learning_rate * tree.predict(X)
        loss = _log_loss(y, sigmoid(z))
        if not np.isfinite(loss):
            raise FitError("non-finite training loss; check hyperparameters")
        model.train_loss.append(loss)
    return model
