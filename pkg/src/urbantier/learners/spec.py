"""Hyperparameter spec shared by all binary base learners."""

from __future__ import annotations

from dataclasses import dataclass, asdict

from ..errors import ConfigError

KINDS = ("logistic", "random_forest", "gbdt")
GROWTHS = ("level_wise", "leaf_wise")


@dataclass(frozen=True)
class BinaryLearnerSpec:
    kind: str = "gbdt"
    n_estimators: int = 100
    max_depth: int = 6
    learning_rate: float = 0.1
    num_leaves: int = 31
    min_child_samples: int = 5
    feature_fraction: float = 1.0
    row_fraction: float = 1.0
    l2_penalty: float = 1.0
    growth: str = "leaf_wise"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown learner kind {self.kind!r}")
        if self.growth not in GROWTHS:
            raise ConfigError(f"unknown growth mode {self.growth!r}")
        if self.n_estimators < 0 or self.max_depth < 1 or self.num_leaves < 1:
            raise ConfigError("counts must be >= 1 (n_estimators >= 0)")
        if self.min_child_samples < 1:
            raise ConfigError("min_child_samples must be >= 1")
        if not (0.0 < self.feature_fraction <= 1.0):
            raise ConfigError("feature_fraction must be in (0, 1]")
        if not (0.0 < self.row_fraction <= 1.0):
            raise ConfigError("row_fraction must be in (0, 1]")
        if self.learning_rate < 0.0:
            raise ConfigError("learning_rate must be >= 0")
        if self.l2_penalty < 0.0:
            raise ConfigError("l2_penalty must be >= 0")

    def with_seed(self, seed: int) -> "BinaryLearnerSpec":
        return BinaryLearnerSpec(**{**asdict(self), "seed": seed})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BinaryLearnerSpec":
        return cls(**d)
