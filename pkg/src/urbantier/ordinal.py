"""Ordinal classification via threshold decomposition into binary subproblems.

Threshold model k predicts P(label > k); class probabilities come from
monotonizing the cumulative estimates and differencing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import FeatureMatrix, LabeledDataset, OrdinalBinning
from .errors import FitError, SchemaError
from .learners import BinaryLearnerSpec, fit_binary, model_from_dict
from .resampling import SmoteSpec, smote


def derive_seed(seed: int, k: int) -> int:
    """Deterministic per-threshold seed, independent of fit order."""
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def monotonize(cum: np.ndarray) -> np.ndarray:
    """Sequential front-to-back clamp c_k <- min(c_{k-1}, c_k), with c_{-1}=1.

    Idempotent; identity on already non-increasing inputs.
    """
    out = np.clip(np.asarray(cum, dtype=np.float64), 0.0, 1.0).copy()
    np.minimum.accumulate(out, axis=-1, out=out)
    return out


def reconstruct(cum: np.ndarray) -> np.ndarray:
    """Class probabilities from cumulative P(y > k) estimates.

    p_0 = 1 - c_0; p_k = c_{k-1} - c_k; p_{K-1} = c_{K-2}.
    """
    c = monotonize(np.atleast_2d(cum))
    ones = np.ones((c.shape[0], 1))
    zeros = np.zeros((c.shape[0], 1))
    ext = np.hstack([ones, c, zeros])
    probs = ext[:, :-1] - ext[:, 1:]
    if cum.ndim == 1:
        return probs[0]
    return probs


@dataclass
class OrdinalModel:
    n_classes: int
    column_names: list
    impute_medians: np.ndarray
    threshold_models: list
    learner_spec: BinaryLearnerSpec
    binning: OrdinalBinning | None = None

    def _check_schema(self, features: FeatureMatrix) -> np.ndarray:
        missing = [c for c in self.column_names if c not in features.column_names]
        extra = [c for c in features.column_names if c not in self.column_names]
        if missing or extra:
            raise SchemaError(
                f"feature schema mismatch: missing={missing!r} extra={extra!r}"
            )
        idx = [features.column_names.index(c) for c in self.column_names]
        X = features.values[:, idx].astype(np.float64, copy=True)
        for j in range(X.shape[1]):
            nan = np.isnan(X[:, j])
            if nan.any():
                X[nan, j] = self.impute_medians[j]
        return X

    def cumulative(self, features: FeatureMatrix) -> np.ndarray:
        X = self._check_schema(features)
        return np.column_stack([m.predict_score(X) for m in self.threshold_models])

    def predict_proba(self, features: FeatureMatrix) -> np.ndarray:
        return reconstruct(self.cumulative(features))

    def predict_class(self, features: FeatureMatrix) -> np.ndarray:
        # argmax returns the first maximum: ties break toward the lower class
        return np.argmax(self.predict_proba(features), axis=1)

    def to_dict(self) -> dict:
        d = {
            "n_classes": self.n_classes,
            "columns": list(self.column_names),
            "impute_medians": self.impute_medians.tolist(),
            "learner_spec": self.learner_spec.to_dict(),
            "threshold_models": [m.to_dict() for m in self.threshold_models],
        }
        if self.binning is not None:
            d["binning"] = self.binning.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OrdinalModel":
        return cls(
            n_classes=int(d["n_classes"]),
            column_names=list(d["columns"]),
            impute_medians=np.asarray(d["impute_medians"], dtype=np.float64),
            threshold_models=[model_from_dict(m) for m in d["threshold_models"]],
            learner_spec=BinaryLearnerSpec.from_dict(d["learner_spec"]),
            binning=OrdinalBinning.from_dict(d["binning"]) if "binning" in d else None,
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)

    @classmethod
    def load(cls, path) -> "OrdinalModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit_ordinal(data: LabeledDataset, learner: BinaryLearnerSpec,
                resampler: SmoteSpec | None = None, seed: int = 0) -> OrdinalModel:
    """Fit K-1 binary threshold models, one per 'label > k' subproblem.

    SMOTE (when given) is applied per threshold, to training rows only.
    """
    K = data.binning.n_classes
    if K < 2:
        raise FitError("ordinal fitting needs at least 2 classes")
    present = set(np.unique(data.labels).tolist())
    absent = sorted(set(range(K)) - present)
    if absent:
        raise FitError(f"classes {absent} absent from training labels")

    X = data.features.values.astype(np.float64, copy=True)
    with np.errstate(all="ignore"):
        medians = np.array([np.nanmedian(X[:, j]) if not np.isnan(X[:, j]).all() else 0.0
                            for j in range(X.shape[1])])
    for j in range(X.shape[1]):
        nan = np.isnan(X[:, j])
        if nan.any():
            X[nan, j] = medians[j]

    models = []
    for k in range(K - 1):
        yk = (data.labels > k).astype(np.int64)
        if len(np.unique(yk)) < 2:
            raise FitError(f"threshold {k}: single class after relabeling")
        Xk, ybin = X, yk
        sk = derive_seed(seed, k)
        if resampler is not None:
            Xk, ybin = smote(X, yk, SmoteSpec(resampler.k_neighbors,
                                              resampler.target_ratio, seed=sk))
        try:
            model = fit_binary(Xk, ybin, learner.with_seed(sk))
        except FitError as exc:
            raise FitError(f"threshold {k}: {exc}") from exc
        models.append(model)

    return OrdinalModel(
        n_classes=K,
        column_names=list(data.features.column_names),
        impute_medians=medians,
        threshold_models=models,
        learner_spec=learner,
        binning=data.binning,
    )
