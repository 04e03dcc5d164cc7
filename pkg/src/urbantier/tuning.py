"""Exhaustive grid search over GBDT hyperparameters."""

from __future__ import annotations

import csv
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import ConfigError, UrbantierError
from .evaluation import cross_validate, stratified_kfold
from .learners import BinaryLearnerSpec
from .resampling import SmoteSpec

GRID_FIELDS = ("n_estimators", "max_depth", "learning_rate", "num_leaves",
               "min_child_samples", "feature_fraction", "row_fraction")


@dataclass(frozen=True)
class GridSpec:
    n_estimators: tuple = (100,)
    max_depth: tuple = (6,)
    learning_rate: tuple = (0.1,)
    num_leaves: tuple = (31,)
    min_child_samples: tuple = (5,)
    feature_fraction: tuple = (1.0,)
    row_fraction: tuple = (1.0,)
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        for name in GRID_FIELDS:
            vals = getattr(self, name)
            if not vals:
                raise ConfigError(f"grid list {name} is empty")
            object.__setattr__(self, name, tuple(vals))

    @property
    def size(self) -> int:
        out = 1
        for name in GRID_FIELDS:
            out *= len(getattr(self, name))
        return out

    def combinations(self):
        lists = [getattr(self, name) for name in GRID_FIELDS]
        for combo in itertools.product(*lists):
            yield dict(zip(GRID_FIELDS, combo))

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        kw = {name: tuple(d[name]) for name in GRID_FIELDS if name in d}
        if "k" in d:
            kw["k"] = int(d["k"])
        if "seed" in d:
            kw["seed"] = int(d["seed"])
        return cls(**kw)


@dataclass
class Trial:
    params: dict
    status: str = "ok"
    mean_accuracy: float | None = None
    std_accuracy: float | None = None
    mean_auc: float | None = None
    std_auc: float | None = None
    error: str | None = None


@dataclass
class GridSearchResult:
    trials: list
    best: BinaryLearnerSpec | None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(list(GRID_FIELDS) +
                       ["status", "mean_accuracy", "std_accuracy",
                        "mean_auc", "std_auc"])
            for t in self.trials:
                row = [t.params[f] for f in GRID_FIELDS]
                row.append(t.status)
                row += ["" if v is None else repr(v) for v in
                        (t.mean_accuracy, t.std_accuracy, t.mean_auc, t.std_auc)]
                w.writerow(row)


def grid_search(dataset, grid: GridSpec, resampler: SmoteSpec | None = None,
                base_learner: BinaryLearnerSpec | None = None,
                jobs: int = 1) -> GridSearchResult:
    """Evaluate every grid cell with a fold assignment fixed once per search.

    Winner: highest mean accuracy, ties by higher mean AUC, then the
    lexicographically smaller hyperparameter tuple (enumeration order).
    Failed trials are recorded and excluded from ranking.
    """
    if base_learner is None:
        base_learner = BinaryLearnerSpec(kind="gbdt", growth="leaf_wise")
    folds = stratified_kfold(dataset.labels, grid.k, grid.seed)

    combos = list(grid.combinations())

    def run(params):
        trial = Trial(params=params)
        try:
            spec = BinaryLearnerSpec(**{**base_learner.to_dict(), **params})
            report = cross_validate(dataset, spec, resampler, k=grid.k,
                                    seed=grid.seed, folds=folds,
                                    profile_features=[])
            trial.mean_accuracy = report.mean_accuracy
            trial.std_accuracy = report.std_accuracy
            trial.mean_auc = report.mean_auc
            trial.std_auc = report.std_auc
        except UrbantierError as exc:
            trial.status = "failed"
            trial.error = str(exc)
        return trial

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(run, combos))
    else:
        trials = [run(p) for p in combos]

    best_spec = None
    best_key = None
    for i, t in enumerate(trials):
        if t.status != "ok":
            continue
        key = (-t.mean_accuracy, -t.mean_auc, i)  # enumeration order is lexicographic
        if best_key is None or key < best_key:
            best_key = key
            best_spec = BinaryLearnerSpec(**{**base_learner.to_dict(), **t.params})
    return GridSearchResult(trials=trials, best=best_spec)
