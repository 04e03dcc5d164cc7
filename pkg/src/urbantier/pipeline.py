"""End-to-end pipeline steps shared by the CLI and the test suite."""

from __future__ import annotations

import csv
import glob
import json
import logging
import os

import numpy as np
from PIL import Image

from . import __version__
from .config import SOURCES, PipelineConfig
from .dataset import (FeatureMatrix, OrdinalBinning, SurveyEncoder, join_features,
                      make_labeled_dataset, read_households, write_households)
from .errors import ConfigError, DataError
from .evaluation import cross_validate
from .fetch import FetchConfig, fetch_images, read_manifest, write_fetch_log
from .geoimagery import CovariateRaster, build_geo_features, segmentation_proportions
from .ordinal import OrdinalModel, fit_ordinal
from .synth import generate_synthetic_city
from .tuning import grid_search

log = logging.getLogger("urbantier")

DEFAULT_BINNINGS = {
    "income": OrdinalBinning("income", (10000.0, 20000.0, 50000.0),
                             ("0-10K", "10-20K", "20-50K", ">50K")),
    "water": OrdinalBinning("water", (8.0, 15.0, 25.0),
                            ("0-8KL", "8-15KL", "15-25KL", ">25KL")),
}


def binning_for(cfg: PipelineConfig) -> OrdinalBinning:
    return cfg.binning if cfg.binning is not None else DEFAULT_BINNINGS[cfg.target]


def write_json(obj: dict, path: str, cfg: PipelineConfig | None = None) -> None:
    if cfg is not None:
        obj = {**obj, "provenance": cfg.provenance(__version__)}
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
    os.replace(tmp, path)


def write_provenance_sidecar(path: str, cfg: PipelineConfig) -> None:
    write_json(cfg.provenance(__version__), path + ".provenance.json")


def run_synth(cfg: PipelineConfig) -> dict:
    city = generate_synthetic_city(
        size=int(cfg.synth["size"]),
        n_classes=int(cfg.synth["n_classes"]),
        seed=cfg.seed,
        signal_strength=float(cfg.synth["signal_strength"]),
    )
    hh_path = cfg.path("households")
    os.makedirs(os.path.dirname(hh_path) or ".", exist_ok=True)
    tmp = hh_path + ".tmp"
    write_households(city.records, tmp)
    os.replace(tmp, hh_path)
    write_provenance_sidecar(hh_path, cfg)

    rasters_dir = cfg.path("rasters_dir")
    os.makedirs(rasters_dir, exist_ok=True)
    for r in city.rasters:
        p = os.path.join(rasters_dir, f"{r.name}.asc")
        r.save(p + ".tmp")
        os.replace(p + ".tmp", p)

    seg_dir = cfg.path("seg_dir")
    os.makedirs(seg_dir, exist_ok=True)
    for rid, pixels in city.seg_images.items():
        p = os.path.join(seg_dir, f"{rid}.png")
        Image.fromarray(pixels, mode="L").save(p + ".tmp", format="PNG")
        os.replace(p + ".tmp", p)

    log.info("synth: %d households, %d rasters, %d segmentation maps",
             len(city.records), len(city.rasters), len(city.seg_images))
    return {"households": hh_path, "rasters_dir": rasters_dir, "seg_dir": seg_dir,
            "n_households": len(city.records)}


def load_rasters(cfg: PipelineConfig) -> list:
    paths = sorted(glob.glob(os.path.join(cfg.path("rasters_dir"), "*.asc")))
    return [CovariateRaster.load(p) for p in paths]


def feature_csv_path(cfg: PipelineConfig, source: str) -> str:
    return os.path.join(cfg.path("features_dir"), f"features_{source}.csv")


def run_ingest(cfg: PipelineConfig) -> dict:
    records = read_households(cfg.path("households"))
    feat_dir = cfg.path("features_dir")
    os.makedirs(feat_dir, exist_ok=True)
    stats = {"n_households": len(records)}

    attrs = cfg.survey_attributes
    if attrs is None:
        attrs = sorted({a for r in records for a in r.attributes})
    survey = SurveyEncoder(attrs).fit(records).transform(records)
    _write_features(survey, feature_csv_path(cfg, "survey"), cfg)
    stats["survey_columns"] = len(survey.column_names)

    rasters = load_rasters(cfg)
    if rasters:
        geo = build_geo_features(records, rasters)
        _write_features(geo, feature_csv_path(cfg, "geo"), cfg)
        stats["geo_columns"] = len(geo.column_names)

    seg_dir = cfg.path("seg_dir")
    seg_paths = sorted(glob.glob(os.path.join(seg_dir, "*.png")))
    if seg_paths:
        ids, rows = [], []
        for p in seg_paths:
            summary = segmentation_proportions(p)
            ids.append(summary.image_id)
            rows.append(summary.proportions)
        seg = FeatureMatrix(ids, [f"seg:class_{i}" for i in range(len(rows[0]))],
                            np.array(rows))
        _write_features(seg, feature_csv_path(cfg, "seg"), cfg)
        stats["seg_columns"] = len(seg.column_names)
        known = {r.id for r in records}
        stats["seg_coverage"] = sum(1 for i in ids if i in known) / max(len(records), 1)

    log.info("ingest: %s", stats)
    return stats


def _write_features(fm: FeatureMatrix, path: str, cfg: PipelineConfig) -> None:
    fm.to_csv(path + ".tmp")
    os.replace(path + ".tmp", path)
    write_provenance_sidecar(path, cfg)


def assemble_features(cfg: PipelineConfig, sources) -> FeatureMatrix:
    mats = []
    for src in SOURCES:           # canonical order, independent of config order
        if src in sources:
            p = feature_csv_path(cfg, src)
            if not os.path.exists(p):
                raise ConfigError(f"feature file missing for source {src!r}: {p}")
            mats.append(FeatureMatrix.from_csv(p))
    if not mats:
        raise ConfigError("no feature sources enabled")
    return join_features(mats, policy="inner")


def assemble_dataset(cfg: PipelineConfig, sources=None):
    records = read_households(cfg.path("households"))
    features = assemble_features(cfg, sources or cfg.sources)
    return make_labeled_dataset(records, features, binning_for(cfg), cfg.target)


def run_train(cfg: PipelineConfig) -> str:
    dataset = assemble_dataset(cfg)
    model = fit_ordinal(dataset, cfg.learner, cfg.smote, seed=cfg.seed)
    out_dir = cfg.path("out_dir")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"model_{cfg.target}.json")
    write_json(model.to_dict(), path, cfg)
    log.info("train: %d rows, model -> %s", dataset.features.n_rows, path)
    return path


def run_evaluate(cfg: PipelineConfig, jobs: int = 1) -> dict:
    out_dir = cfg.path("out_dir")
    os.makedirs(out_dir, exist_ok=True)
    settings = cfg.settings or [list(cfg.sources)]
    summary_rows = []
    report_paths = []
    for setting in settings:
        name = "+".join(s for s in SOURCES if s in setting)
        dataset = assemble_dataset(cfg, setting)
        report = cross_validate(dataset, cfg.learner, cfg.smote, k=cfg.cv_k,
                                seed=cfg.seed, jobs=jobs,
                                profile_features=cfg.profile_features)
        path = os.path.join(out_dir, f"report_{cfg.target}_{name}.json")
        write_json(report.to_dict(), path, cfg)
        report_paths.append(path)
        summary_rows.append([name, repr(report.mean_accuracy), repr(report.std_accuracy),
                             repr(report.mean_auc), repr(report.std_auc),
                             repr(float(np.max(report.fold_accuracy))),
                             repr(float(np.max(report.fold_auc)))])
        log.info("evaluate[%s]: acc=%.3f auc=%.3f", name,
                 report.mean_accuracy, report.mean_auc)
    summary_path = os.path.join(out_dir, f"evaluation_summary_{cfg.target}.csv")
    tmp = summary_path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["setting", "mean_accuracy", "std_accuracy", "mean_auc",
                    "std_auc", "best_fold_accuracy", "best_fold_auc"])
        w.writerows(summary_rows)
    os.replace(tmp, summary_path)
    write_provenance_sidecar(summary_path, cfg)
    return {"reports": report_paths, "summary": summary_path}


def run_tune(cfg: PipelineConfig, jobs: int = 1) -> dict:
    if cfg.grid is None:
        raise ConfigError("tune requires a 'grid' section in the config")
    dataset = assemble_dataset(cfg)
    result = grid_search(dataset, cfg.grid, cfg.smote, base_learner=cfg.learner,
                         jobs=jobs)
    out_dir = cfg.path("out_dir")
    os.makedirs(out_dir, exist_ok=True)
    table_path = os.path.join(out_dir, f"trials_{cfg.target}.csv")
    result.write_csv(table_path + ".tmp")
    os.replace(table_path + ".tmp", table_path)
    write_provenance_sidecar(table_path, cfg)
    best_path = os.path.join(out_dir, f"best_spec_{cfg.target}.json")
    if result.best is None:
        raise ConfigError("every grid trial failed")
    write_json(result.best.to_dict(), best_path, cfg)
    return {"table": table_path, "best": best_path}


def run_predict(cfg: PipelineConfig, model_path: str | None = None) -> str:
    out_dir = cfg.path("out_dir")
    if model_path is None:
        model_path = os.path.join(out_dir, f"model_{cfg.target}.json")
    model = OrdinalModel.load(model_path)
    features = assemble_features(cfg, cfg.sources)
    features = FeatureMatrix(features.row_ids,
                             list(features.column_names), features.values)
    proba = model.predict_proba(features)
    classes = np.argmax(proba, axis=1)
    labels = (model.binning.class_labels if model.binning is not None
              else [str(i) for i in range(model.n_classes)])
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"predictions_{cfg.target}.csv")
    tmp = path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "class_index", "class_label"] +
                   [f"prob_{i}" for i in range(model.n_classes)])
        for rid, c, p in zip(features.row_ids, classes, proba):
            w.writerow([rid, int(c), labels[int(c)]] + [repr(float(x)) for x in p])
    os.replace(tmp, path)
    write_provenance_sidecar(path, cfg)
    log.info("predict: %d rows -> %s", len(features.row_ids), path)
    return path


def run_fetch(cfg: PipelineConfig) -> dict:
    f = cfg.fetch
    if "endpoint_template" not in f:
        raise ConfigError("fetch requires fetch.endpoint_template in the config")
    manifest_path = f.get("manifest")
    if manifest_path is None:
        raise ConfigError("fetch requires fetch.manifest in the config")
    if not os.path.isabs(manifest_path):
        manifest_path = os.path.join(cfg.base_dir, manifest_path)
    manifest = read_manifest(manifest_path)
    fetch_cfg = FetchConfig(
        endpoint_template=f["endpoint_template"],
        cache_dir=cfg.path("cache_dir"),
        api_key_env=f.get("api_key_env", "URBANTIER_API_KEY"),
        rate_limit=float(f.get("rate_limit", 0.0)),
        retries=int(f.get("retries", 3)),
        backoff_base=float(f.get("backoff_base", 0.5)),
        crop_pixels=int(f.get("crop_pixels", 20)),
        max_parallel=int(f.get("max_parallel", 4)),
    )
    entries = fetch_images(manifest, fetch_cfg)
    out_dir = cfg.path("out_dir")
    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, "fetch_log.csv")
    write_fetch_log(entries, log_path + ".tmp")
    os.replace(log_path + ".tmp", log_path)
    counts = {}
    for e in entries:
        counts[e.status] = counts.get(e.status, 0) + 1
    log.info("fetch: %s", counts)
    return {"log": log_path, "counts": counts}
