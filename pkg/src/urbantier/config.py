"""Pipeline configuration: one JSON document, flags override fields."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

from .dataset import OrdinalBinning
from .errors import ConfigError
from .learners import BinaryLearnerSpec
from .resampling import SmoteSpec
from .tuning import GridSpec

SOURCES = ("survey", "embed_sat", "embed_gsv", "seg", "geo")

DEFAULT_PATHS = {
    "households": "households.csv",
    "rasters_dir": "rasters",
    "seg_dir": "seg",
    "features_dir": "features",
    "cache_dir": "cache",
    "out_dir": "out",
}


@dataclass
class PipelineConfig:
    seed: int = 0
    target: str = "water"
    binning: OrdinalBinning | None = None
    sources: tuple = ("survey", "seg", "geo")
    settings: list | None = None          # optional list of source subsets
    survey_attributes: list | None = None  # None = all attribute columns
    learner: BinaryLearnerSpec = field(default_factory=BinaryLearnerSpec)
    smote: SmoteSpec | None = field(default_factory=SmoteSpec)
    cv_k: int = 5
    grid: GridSpec | None = None
    synth: dict = field(default_factory=lambda: {
        "size": 2000, "n_classes": 4, "signal_strength": 0.9})
    fetch: dict = field(default_factory=dict)
    profile_features: list | None = None
    paths: dict = field(default_factory=lambda: dict(DEFAULT_PATHS))
    base_dir: str = "."
    raw: dict = field(default_factory=dict)

    def path(self, key: str) -> str:
        p = self.paths.get(key, DEFAULT_PATHS[key])
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def validate(self):
        if self.target not in ("water", "income"):
            raise ConfigError(f"target must be water or income, got {self.target!r}")
        bad = [s for s in self.sources if s not in SOURCES]
        if bad:
            raise ConfigError(f"unknown feature sources {bad!r}")
        if not self.sources:
            raise ConfigError("at least one feature source must be enabled")
        if self.cv_k < 2:
            raise ConfigError("cv_k must be >= 2")
        return self

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode()).hexdigest()[:16]

    def provenance(self, version: str) -> dict:
        return {"config_hash": self.config_hash(), "seed": self.seed,
                "version": version}


def load_config(path: str | None, overrides: dict | None = None) -> PipelineConfig:
    raw = {}
    base_dir = "."
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        base_dir = os.path.dirname(os.path.abspath(path))
    overrides = overrides or {}
    merged = {**raw, **{k: v for k, v in overrides.items() if v is not None}}

    cfg = PipelineConfig(base_dir=base_dir, raw=merged)
    cfg.seed = int(merged.get("seed", 0))
    cfg.target = merged.get("target", "water")
    if "binning" in merged:
        cfg.binning = OrdinalBinning.from_dict(merged["binning"])
    cfg.sources = tuple(merged.get("sources", ["survey", "seg", "geo"]))
    cfg.settings = merged.get("settings")
    cfg.survey_attributes = merged.get("survey_attributes")
    if "learner" in merged:
        cfg.learner = BinaryLearnerSpec.from_dict(merged["learner"])
    if "smote" in merged:
        cfg.smote = (SmoteSpec.from_dict(merged["smote"])
                     if merged["smote"] is not None else None)
    cfg.cv_k = int(merged.get("cv_k", 5))
    if merged.get("grid"):
        g = dict(merged["grid"])
        g.setdefault("k", cfg.cv_k)
        g.setdefault("seed", cfg.seed)
        cfg.grid = GridSpec.from_dict(g)
    cfg.synth = {**cfg.synth, **merged.get("synth", {})}
    cfg.fetch = merged.get("fetch", {})
    cfg.profile_features = merged.get("profile_features")
    cfg.paths = {**DEFAULT_PATHS, **merged.get("paths", {})}
    if "out" in overrides and overrides["out"] is not None:
        cfg.paths["out_dir"] = overrides["out"]
    return cfg.validate()
