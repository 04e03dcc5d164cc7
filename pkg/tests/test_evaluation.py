import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from urbantier.dataset import FeatureMatrix, LabeledDataset, OrdinalBinning
from urbantier.errors import DataError
from urbantier.evaluation import (accuracy, confusion_matrix_normalized,
                                  cross_validate, misclassification_profile,
                                  roc_auc_binary, roc_auc_macro_ovr,
                                  stratified_kfold)
from urbantier.learners import BinaryLearnerSpec
from urbantier.resampling import SmoteSpec


def brute_force_auc(y, s):
    """Oracle: pairwise positive-vs-negative comparisons, ties count 0.5."""
    pos = [si for yi, si in zip(y, s) if yi == 1]
    neg = [si for yi, si in zip(y, s) if yi == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0
               for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


class TestStratifiedKFold:
    def test_balanced_exact_division(self):
        labels = np.repeat([0, 1, 2, 3], 25)
        folds = stratified_kfold(labels, 5, seed=0)
        for f in folds:
            assert len(f) == 20
            assert np.bincount(labels[f], minlength=4).tolist() == [5, 5, 5, 5]

    def test_partition(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 3, 83)
        folds = stratified_kfold(labels, 4, seed=2)
        allidx = np.concatenate(folds)
        assert sorted(allidx.tolist()) == list(range(83))

    def test_small_class_counts_differ_at_most_one(self):
        # oracle: direct counting of the 7-row class across 5 folds
        labels = np.array([0] * 43 + [1] * 7)
        folds = stratified_kfold(labels, 5, seed=3)
        counts = [int(np.sum(labels[f] == 1)) for f in folds]
        assert set(counts) <= {1, 2}
        assert sum(counts) == 7

    def test_class_smaller_than_k_warns(self):
        labels = np.array([0] * 20 + [1] * 3)
        with pytest.warns(UserWarning, match="fewer than k"):
            stratified_kfold(labels, 5, seed=0)

    def test_k_greater_than_n_rejected(self):
        with pytest.raises(DataError):
            stratified_kfold(np.array([0, 1]), 3)

    def test_deterministic(self):
        labels = np.random.default_rng(4).integers(0, 4, 60)
        a = stratified_kfold(labels, 5, seed=7)
        b = stratified_kfold(labels, 5, seed=7)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))


class TestAccuracy:
    def test_identical(self):
        assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0

    def test_disjoint(self):
        assert accuracy([0, 0], [1, 1]) == 0.0

    def test_three_of_four(self):
        assert accuracy([0, 1, 2, 3], [0, 1, 1, 3]) == 0.75

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            accuracy([], [])


class TestRocAuc:
    def test_spec_example(self):
        assert roc_auc_binary([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == 0.75

    def test_perfect_separation(self):
        assert roc_auc_binary([0, 0, 1], [0.1, 0.2, 0.9]) == 1.0

    def test_all_ties(self):
        assert roc_auc_binary([0, 1, 0, 1], [0.5] * 4) == 0.5

    def test_single_class_is_missing(self):
        assert roc_auc_binary([1, 1], [0.2, 0.4]) is None

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 100000))
    def test_rank_statistic_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 60))
        y = rng.integers(0, 2, n)
        if len(np.unique(y)) < 2:
            y[0], y[1] = 0, 1
        s = np.round(rng.random(n), 2)   # coarse grid forces ties
        assert abs(roc_auc_binary(y, s) - brute_force_auc(y, s)) < 1e-12

    def test_complement_symmetry(self):
        rng = np.random.default_rng(5)
        y = rng.integers(0, 2, 40)
        y[:2] = [0, 1]
        s = rng.random(40)
        assert abs(roc_auc_binary(1 - y, s) - (1 - roc_auc_binary(y, s))) < 1e-12

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(6)
        y = rng.integers(0, 2, 30)
        y[:2] = [0, 1]
        s = rng.random(30)
        assert roc_auc_binary(y, s) == roc_auc_binary(y, np.exp(3 * s))


class TestMacroOvr:
    def test_k2_reduces_to_binary(self):
        y = np.array([0, 1, 0, 1, 1])
        p1 = np.array([0.2, 0.8, 0.4, 0.7, 0.6])
        proba = np.column_stack([1 - p1, p1])
        assert roc_auc_macro_ovr(y, proba) == roc_auc_binary(y, p1)

    def test_perfect_probabilities(self):
        y = np.array([0, 1, 2, 0, 1, 2])
        proba = np.eye(3)[y]
        assert roc_auc_macro_ovr(y, proba) == 1.0

    def test_uniform_probabilities_give_half(self):
        y = np.array([0, 1, 2, 1, 0, 2])
        proba = np.full((6, 3), 1 / 3)
        assert roc_auc_macro_ovr(y, proba) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            roc_auc_macro_ovr(np.zeros(4, dtype=int), np.full((4, 2), 0.5))

    def test_absent_class_excluded_with_warning(self):
        y = np.array([0, 1, 0, 1])
        proba = np.full((4, 3), 1 / 3)
        with pytest.warns(UserWarning, match="absent"):
            roc_auc_macro_ovr(y, proba)


class TestConfusion:
    def test_perfect_is_identity(self):
        m, unsupported = confusion_matrix_normalized([0, 1, 2], [0, 1, 2], 3)
        assert np.array_equal(m, np.eye(3))
        assert unsupported == []

    def test_zero_support_row_flagged(self):
        m, unsupported = confusion_matrix_normalized([0, 0], [1, 1], 2)
        assert m.tolist() == [[0, 1], [0, 0]]
        assert unsupported == [1]

    def test_rows_stochastic_on_random_data(self):
        rng = np.random.default_rng(7)
        yt = rng.integers(0, 4, 200)
        yp = rng.integers(0, 4, 200)
        m, unsupported = confusion_matrix_normalized(yt, yp, 4)
        for i in range(4):
            if i not in unsupported:
                assert abs(m[i].sum() - 1.0) < 1e-9


def toy_dataset(n=120, K=4, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    x = rng.permutation(n).astype(float)
    labels = (x * K // n).astype(int)
    if noise:
        flip = rng.random(n) < noise
        labels[flip] = rng.integers(0, K, int(flip.sum()))
    extra = rng.normal(size=n)
    fm = FeatureMatrix([f"r{i}" for i in range(n)],
                       ["geo:nightlight", "geo:pop_density"],
                       np.column_stack([x, extra]))
    binning = OrdinalBinning("t", tuple(range(1, K)),
                             tuple(str(i) for i in range(K)))
    return LabeledDataset(fm, labels, binning)


class TestProfile:
    def test_zero_misclassifications(self):
        ds = toy_dataset()
        profile = misclassification_profile(ds, ds.labels, ["geo:nightlight"])
        assert profile["n_misclassified"] == 0
        assert "note" in profile
        total_correct = sum(sum(c["correct"])
                            for c in profile["features"][0]["classes"].values())
        assert total_correct == ds.features.n_rows

    def test_counts_sum_to_row_counts(self):
        ds = toy_dataset(seed=1)
        rng = np.random.default_rng(2)
        preds = ds.labels.copy()
        flip = rng.random(len(preds)) < 0.3
        preds[flip] = (preds[flip] + 1) % 4
        profile = misclassification_profile(ds, preds, ["geo:nightlight"])
        feat = profile["features"][0]
        n_correct = sum(sum(c["correct"]) for c in feat["classes"].values())
        n_wrong = sum(sum(c["incorrect"]) for c in feat["classes"].values())
        assert n_correct == int(np.sum(preds == ds.labels))
        assert n_wrong == int(np.sum(preds != ds.labels))

    def test_range_covers_min_max(self):
        ds = toy_dataset(seed=3)
        edges = misclassification_profile(ds, ds.labels,
                                          ["geo:nightlight"])["features"][0]["bin_edges"]
        col = ds.features.column("geo:nightlight")
        assert edges[0] <= col.min() and edges[-1] >= col.max()
        assert len(edges) == 21

    def test_unknown_feature_rejected(self):
        ds = toy_dataset()
        with pytest.raises(DataError):
            misclassification_profile(ds, ds.labels, ["geo:nope"])


class TestCrossValidate:
    def test_pure_signal_duplicated_rows(self):
        # every x value appears in several rows, so each fold's validation
        # values are also present in training
        x = np.tile(np.arange(24, dtype=float), 5)
        labels = (x * 4 // 24).astype(int)
        fm = FeatureMatrix([f"r{i}" for i in range(len(x))],
                           ["geo:nightlight"], x[:, None])
        binning = OrdinalBinning("t", (1, 2, 3), ("0", "1", "2", "3"))
        ds = LabeledDataset(fm, labels, binning)
        spec = BinaryLearnerSpec(n_estimators=30, min_child_samples=1)
        report = cross_validate(ds, spec, SmoteSpec(), k=5, seed=0)
        assert all(a == 1.0 for a in report.fold_accuracy)

    def test_deterministic_under_seed_and_jobs(self):
        ds = toy_dataset(n=100, K=3, seed=5, noise=0.2)
        spec = BinaryLearnerSpec(n_estimators=10, min_child_samples=2)
        a = cross_validate(ds, spec, SmoteSpec(), k=4, seed=3, jobs=1)
        b = cross_validate(ds, spec, SmoteSpec(), k=4, seed=3, jobs=4)
        assert a.to_dict() == b.to_dict()

    def test_each_row_validated_once(self):
        labels = np.random.default_rng(6).integers(0, 3, 90)
        folds = stratified_kfold(labels, 5, seed=1)
        seen = np.concatenate(folds)
        assert len(seen) == len(set(seen.tolist())) == 90

    def test_confusion_diagonal_matches_pooled_accuracy(self):
        ds = toy_dataset(n=120, K=4, seed=7, noise=0.3)
        spec = BinaryLearnerSpec(n_estimators=10, min_child_samples=2)
        report = cross_validate(ds, spec, None, k=4, seed=2)
        conf = np.array(report.confusion)
        support = np.bincount(ds.labels, minlength=4)
        weighted_diag = float(np.sum(conf.diagonal() * support) / support.sum())
        assert abs(weighted_diag - report.pooled_accuracy) < 1e-9
