"""SMOTE oversampling for binary training sets."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigError, ResamplingError


@dataclass(frozen=True)
class SmoteSpec:
    k_neighbors: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ConfigError("k_neighbors must be >= 1")
        if not (0.0 < self.target_ratio <= 1.0):
            raise ConfigError("target_ratio must be in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SmoteSpec":
        return cls(**d)


def _neighbor_table(Xm: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest minority neighbors per minority row,
    self excluded, distance ties broken by lower row index."""
    d2 = np.sum((Xm[:, None, :] - Xm[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def smote(X: np.ndarray, y: np.ndarray, spec: SmoteSpec):
    """Augment the minority class by interpolating toward nearest neighbors.

    Original rows come first in the output, unchanged; the minority count
    afterwards is round(target_ratio * majority count).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    counts = np.bincount(y, minlength=2)
    minority = int(np.argmin(counts))
    majority = 1 - minority
    n_min, n_maj = int(counts[minority]), int(counts[majority])
    if n_min < 2:
        raise ResamplingError(f"minority class has {n_min} sample(s); need >= 2")

    needed = int(round(spec.target_ratio * n_maj)) - n_min
    if needed <= 0:
        return X.copy(), y.copy()

    k = spec.k_neighbors
    if k > n_min - 1:
        warnings.warn(f"k_neighbors={k} clamped to {n_min - 1} (minority size {n_min})")
        k = n_min - 1

    min_idx = np.flatnonzero(y == minority)
    Xm = X[min_idx]
    neighbors = _neighbor_table(Xm, k)

    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(n_min)
    synth = np.empty((needed, X.shape[1]))
    for i in range(needed):
        r = order[i % n_min]
        nb = neighbors[r, rng.integers(0, k)]
        lam = rng.random()
        synth[i] = Xm[r] + lam * (Xm[nb] - Xm[r])
    X_out = np.vstack([X, synth])
    y_out = np.concatenate([y, np.full(needed, minority, dtype=np.int64)])
    return X_out, y_out
