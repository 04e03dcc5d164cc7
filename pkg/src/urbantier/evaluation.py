"""Cross-validated evaluation: stratified folds, accuracy, ROC-AUC,
normalized confusion matrices and misclassification profiles."""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .dataset import FeatureMatrix, LabeledDataset
from .errors import DataError
from .learners import BinaryLearnerSpec, feature_gain
from .ordinal import fit_ordinal
from .resampling import SmoteSpec

N_PROFILE_BINS = 20


def stratified_kfold(labels, k: int, seed: int = 0):
    """k disjoint validation index sets with per-class counts differing by <= 1."""
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if k < 2:
        raise DataError("k must be >= 2")
    if k > n:
        raise DataError(f"k={k} exceeds {n} rows")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    offset = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < k:
            warnings.warn(f"class {cls} has {len(idx)} rows, fewer than k={k}")
        idx = idx[rng.permutation(len(idx))]
        for j, i in enumerate(idx):
            folds[(j + offset) % k].append(int(i))
        offset = (offset + len(idx)) % k
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) == 0 or len(y_true) != len(y_pred):
        raise DataError("accuracy needs equal non-empty label vectors")
    return float(np.mean(y_true == y_pred))


def roc_auc_binary(y_true, scores) -> float | None:
    """Mann-Whitney rank AUC with ties counted 0.5; None when one class absent."""
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(y_true == 1))
    n_neg = len(y_true) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores, method="average")
    pos_rank_sum = float(np.sum(ranks[y_true == 1]))
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_auc_macro_ovr(y_true, proba) -> float:
    """Unweighted mean of one-vs-rest AUCs; classes absent here are skipped."""
    y_true = np.asarray(y_true, dtype=np.int64)
    proba = np.atleast_2d(np.asarray(proba, dtype=np.float64))
    if len(np.unique(y_true)) < 2:
        raise DataError("macro OvR AUC needs at least 2 distinct classes")
    aucs = []
    for c in range(proba.shape[1]):
        auc = roc_auc_binary((y_true == c).astype(int), proba[:, c])
        if auc is None:
            warnings.warn(f"class {c} absent; excluded from macro AUC")
        else:
            aucs.append(auc)
    return float(np.mean(aucs))


def confusion_matrix_normalized(y_true, y_pred, n_classes: int):
    """Row-stochastic confusion matrix; zero-support rows stay all-zero and
    are returned as the second element."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    counts = np.zeros((n_classes, n_classes), dtype=np.float64)
    for t, p in zip(y_true, y_pred):
        counts[t, p] += 1
    support = counts.sum(axis=1)
    unsupported = [int(i) for i in np.flatnonzero(support == 0)]
    out = np.zeros_like(counts)
    for i in range(n_classes):
        if support[i] > 0:
            out[i] = counts[i] / support[i]
    return out, unsupported


def misclassification_profile(dataset: LabeledDataset, predictions, feature_names):
    """Equal-width 20-bin histograms of each named feature, split by
    correct vs misclassified rows, per true class."""
    y_true = dataset.labels
    y_pred = np.asarray(predictions, dtype=np.int64)
    correct = y_true == y_pred
    profile = {"features": [], "n_misclassified": int(np.sum(~correct))}
    if profile["n_misclassified"] == 0:
        profile["note"] = "no misclassified rows"
    for name in feature_names:
        col = dataset.features.column(name)
        finite = np.isfinite(col)
        if not finite.any():
            raise DataError(f"feature {name!r} has no finite values")
        lo, hi = float(np.min(col[finite])), float(np.max(col[finite]))
        if hi == lo:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, N_PROFILE_BINS + 1)
        per_class = {}
        for c in range(dataset.binning.n_classes):
            in_c = (y_true == c) & finite
            hc, _ = np.histogram(col[in_c & correct], bins=edges)
            hm, _ = np.histogram(col[in_c & ~correct], bins=edges)
            per_class[str(c)] = {"correct": hc.tolist(), "incorrect": hm.tolist()}
        profile["features"].append({
            "name": name, "bin_edges": edges.tolist(), "classes": per_class,
        })
    return profile


@dataclass
class EvalReport:
    n_classes: int
    fold_accuracy: list
    fold_auc: list
    confusion: list
    confusion_unsupported: list
    importances: dict
    profile: dict
    pooled_accuracy: float
    pooled_auc: float

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracy))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.fold_accuracy))

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.fold_auc))

    @property
    def std_auc(self) -> float:
        return float(np.std(self.fold_auc))

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "fold_accuracy": self.fold_accuracy,
            "fold_auc": self.fold_auc,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
            "best_fold_accuracy": float(np.max(self.fold_accuracy)),
            "best_fold_auc": float(np.max(self.fold_auc)),
            "pooled_accuracy": self.pooled_accuracy,
            "pooled_auc": self.pooled_auc,
            "confusion_normalized": self.confusion,
            "confusion_unsupported_rows": self.confusion_unsupported,
            "feature_importance": self.importances,
            "misclassification_profile": self.profile,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)


def top_importances(gains: dict, top_m: int = 15) -> dict:
    """Highest-gain features, normalized so the reported values sum to 1
    over all features (then truncated)."""
    total = sum(gains.values())
    if total <= 0:
        return {}
    items = sorted(gains.items(), key=lambda kv: (-kv[1], kv[0]))[:top_m]
    return {k: v / total for k, v in items if v > 0}


def cross_validate(dataset: LabeledDataset, learner: BinaryLearnerSpec,
                   resampler: SmoteSpec | None = None, k: int = 5, seed: int = 0,
                   profile_features=None, top_m: int = 15, jobs: int = 1,
                   folds=None) -> EvalReport:
    """Stratified k-fold evaluation of the ordinal model.

    ``folds`` may be passed explicitly (grid search shares one assignment
    across trials); otherwise they derive from ``seed``.
    """
    n = dataset.features.n_rows
    K = dataset.binning.n_classes
    if folds is None:
        folds = stratified_kfold(dataset.labels, k, seed)

    def run_fold(args):
        fold_id, val_idx = args
        train_idx = np.setdiff1d(np.arange(n), val_idx)
        train = LabeledDataset(
            FeatureMatrix([dataset.features.row_ids[i] for i in train_idx],
                          list(dataset.features.column_names),
                          dataset.features.values[train_idx]),
            dataset.labels[train_idx], dataset.binning)
        try:
            model = fit_ordinal(train, learner, resampler, seed=seed)
        except Exception as exc:
            raise type(exc)(f"fold {fold_id}: {exc}") from exc
        val = FeatureMatrix([dataset.features.row_ids[i] for i in val_idx],
                            list(dataset.features.column_names),
                            dataset.features.values[val_idx])
        proba = model.predict_proba(val)
        return model, proba

    tasks = list(enumerate(folds))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_fold, tasks))
    else:
        results = [run_fold(t) for t in tasks]

    y_pred = np.empty(n, dtype=np.int64)
    proba_all = np.zeros((n, K))
    fold_acc, fold_auc = [], []
    gain_total: dict = {}
    for (fold_id, val_idx), (model, proba) in zip(tasks, results):
        pred = np.argmax(proba, axis=1)
        y_pred[val_idx] = pred
        proba_all[val_idx] = proba
        yv = dataset.labels[val_idx]
        fold_acc.append(accuracy(yv, pred))
        fold_auc.append(roc_auc_macro_ovr(yv, proba))
        if learner.kind in ("random_forest", "gbdt"):
            for m in model.threshold_models:
                for name, g in feature_gain(m, model.column_names).items():
                    gain_total[name] = gain_total.get(name, 0.0) + g

    confusion, unsupported = confusion_matrix_normalized(dataset.labels, y_pred, K)
    if profile_features is None:
        profile_features = [c for c in dataset.features.column_names
                            if c.startswith("geo:")]
    profile = misclassification_profile(dataset, y_pred, profile_features)
    return EvalReport(
        n_classes=K,
        fold_accuracy=fold_acc,
        fold_auc=fold_auc,
        confusion=confusion.tolist(),
        confusion_unsupported=unsupported,
        importances=top_importances(gain_total, top_m),
        profile=profile,
        pooled_accuracy=accuracy(dataset.labels, y_pred),
        pooled_auc=roc_auc_macro_ovr(dataset.labels, proba_all),
    )
