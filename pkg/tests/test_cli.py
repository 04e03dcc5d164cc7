import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from urbantier.cli import main


def write_config(tmp_path, **extra):
    cfg = {
        "seed": 7,
        "target": "water",
        "sources": ["survey", "seg", "geo"],
        "cv_k": 3,
        "synth": {"size": 240, "n_classes": 4, "signal_strength": 0.9},
        "learner": {"kind": "gbdt", "n_estimators": 20, "max_depth": 4,
                    "num_leaves": 15},
        "smote": None,
    }
    cfg.update(extra)
    p = tmp_path / "config.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def run(args, **kw):
    result = CliRunner().invoke(main, args, catch_exceptions=False, **kw)
    assert result.exit_code == 0, result.output
    return result


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("ws")
    cfg = write_config(tmp)
    run(["--config", cfg, "synth"])
    run(["--config", cfg, "ingest"])
    return tmp, cfg


class TestPipelineCommands:
    def test_synth_and_ingest_outputs(self, workspace):
        tmp, _ = workspace
        assert (tmp / "households.csv").exists()
        assert len(list((tmp / "rasters").glob("*.asc"))) == 4
        assert len(list((tmp / "seg").glob("*.png"))) == 240
        for src in ("survey", "seg", "geo"):
            p = tmp / "features" / f"features_{src}.csv"
            assert p.exists()
            assert (tmp / "features" / f"features_{src}.csv.provenance.json").exists()

    def test_train_then_predict(self, workspace):
        tmp, cfg = workspace
        run(["--config", cfg, "train"])
        model_path = tmp / "out" / "model_water.json"
        assert model_path.exists()
        artifact = json.loads(model_path.read_text())
        assert artifact["n_classes"] == 4
        assert "provenance" in artifact

        run(["--config", cfg, "predict"])
        pred = (tmp / "out" / "predictions_water.csv").read_text().splitlines()
        header = pred[0].split(",")
        assert header == ["id", "class_index", "class_label",
                          "prob_0", "prob_1", "prob_2", "prob_3"]
        assert len(pred) == 241
        row = pred[1].split(",")
        assert row[2] in ("0-8KL", "8-15KL", "15-25KL", ">25KL")
        probs = np.array([float(x) for x in row[3:]])
        assert abs(probs.sum() - 1.0) < 1e-9
        assert int(row[1]) == int(np.argmax(probs))

    def test_train_predict_fits_training_data_well(self, workspace):
        # in-sample accuracy of the saved artifact should beat chance by far
        tmp, cfg = workspace
        run(["--config", cfg, "train"])
        run(["--config", cfg, "predict"])
        hh = (tmp / "households.csv").read_text().splitlines()
        cols = hh[0].split(",")
        idx_id, idx_w = cols.index("id"), cols.index("water_kl")
        edges = (8.0, 15.0, 25.0)
        truth = {}
        for line in hh[1:]:
            parts = line.split(",")
            truth[parts[idx_id]] = sum(float(parts[idx_w]) > e for e in edges)
        pred = (tmp / "out" / "predictions_water.csv").read_text().splitlines()
        hits = sum(int(line.split(",")[1]) == truth[line.split(",")[0]]
                   for line in pred[1:])
        assert hits / len(truth) > 0.6

    def test_evaluate_reports_and_summary(self, workspace):
        tmp, cfg = workspace
        run(["--config", cfg, "evaluate"])
        report_path = tmp / "out" / "report_water_survey+seg+geo.json"
        assert report_path.exists()
        report = json.loads(report_path.read_text())
        assert len(report["fold_accuracy"]) == 3
        assert report["mean_accuracy"] > 0.5
        summary = (tmp / "out" / "evaluation_summary_water.csv").read_text()
        lines = summary.splitlines()
        assert lines[0].startswith("setting,mean_accuracy")
        assert lines[1].startswith("survey+seg+geo,")

    def test_evaluate_multiple_settings(self, tmp_path):
        cfg = write_config(
            tmp_path,
            synth={"size": 150, "n_classes": 3, "signal_strength": 0.9},
            settings=[["survey"], ["survey", "geo"]],
        )
        run(["--config", cfg, "synth"])
        run(["--config", cfg, "ingest"])
        run(["--config", cfg, "evaluate"])
        out = tmp_path / "out"
        assert (out / "report_water_survey.json").exists()
        assert (out / "report_water_survey+geo.json").exists()
        lines = (out / "evaluation_summary_water.csv").read_text().splitlines()
        assert len(lines) == 3

    def test_tune_writes_table_and_best(self, workspace):
        tmp, cfg_path = workspace
        cfg = write_config(
            tmp, grid={"n_estimators": [5, 15], "max_depth": [3]})
        run(["--config", cfg, "tune"])
        table = (tmp / "out" / "trials_water.csv").read_text().splitlines()
        assert len(table) == 3
        best = json.loads((tmp / "out" / "best_spec_water.json").read_text())
        assert best["n_estimators"] in (5, 15)

    def test_report_renders_svgs(self, workspace):
        tmp, cfg = workspace
        run(["--config", cfg, "evaluate"])
        result = run(["--config", cfg, "report"])
        svgs = list((tmp / "out").glob("report_*.svg"))
        assert svgs, result.output
        for p in svgs:
            assert p.read_text().lstrip().startswith("<svg")


class TestDeterminism:
    def test_full_run_byte_identical_across_jobs(self, tmp_path):
        outputs = {}
        for name, jobs in (("a", 1), ("b", 3)):
            d = tmp_path / name
            d.mkdir()
            cfg = write_config(
                d, synth={"size": 150, "n_classes": 3, "signal_strength": 0.8})
            run(["--config", cfg, "synth"])
            run(["--config", cfg, "ingest"])
            run(["--config", cfg, "--jobs", str(jobs), "evaluate"])
            run(["--config", cfg, "train"])
            run(["--config", cfg, "predict"])
            blob = {}
            for rel in ("households.csv", "features/features_survey.csv",
                        "out/report_water_survey+seg+geo.json",
                        "out/evaluation_summary_water.csv",
                        "out/model_water.json", "out/predictions_water.csv"):
                blob[rel] = (d / rel).read_bytes()
            outputs[name] = blob
        assert outputs["a"] == outputs["b"]

    def test_seed_override_changes_synth(self, tmp_path):
        cfg = write_config(
            tmp_path, synth={"size": 120, "n_classes": 3, "signal_strength": 0.5})
        run(["--config", cfg, "synth"])
        first = (tmp_path / "households.csv").read_bytes()
        run(["--config", cfg, "--seed", "99", "synth"])
        assert (tmp_path / "households.csv").read_bytes() != first


class TestErrors:
    def test_missing_features_is_clean_error(self, tmp_path):
        cfg = write_config(tmp_path)
        run(["--config", cfg, "synth"])
        result = CliRunner().invoke(main, ["--config", cfg, "train"])
        assert result.exit_code == 1
        assert "error:" in result.output

    def test_tune_without_grid_fails(self, tmp_path):
        cfg = write_config(tmp_path)
        run(["--config", cfg, "synth"])
        run(["--config", cfg, "ingest"])
        result = CliRunner().invoke(main, ["--config", cfg, "tune"])
        assert result.exit_code == 1
        assert "grid" in result.output
