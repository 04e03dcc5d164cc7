import numpy as np
import pytest

from urbantier.errors import ResamplingError
from urbantier.resampling import SmoteSpec, smote


def brute_force_neighbors(Xm, i, k):
    """Oracle: exhaustive pairwise distances, ties by lower index."""
    d = np.sqrt(np.sum((Xm - Xm[i]) ** 2, axis=1))
    d[i] = np.inf
    return list(np.argsort(d, kind="stable")[:k])


def on_segment(s, a, b, tol=1e-9):
    """s == a + lam*(b - a) for some lam in [0, 1]."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0:
        return np.allclose(s, a, atol=tol)
    lam = float((s - a) @ ab) / denom
    return -tol <= lam <= 1 + tol and np.allclose(a + lam * ab, s, atol=tol)


class TestSmote:
    def test_midpoint_between_two_points(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [6.0, 5.0],
                      [5.0, 6.0], [6.0, 6.0]])
        y = np.array([1, 1, 0, 0, 0, 0])
        Xo, yo = smote(X, y, SmoteSpec(k_neighbors=1, seed=0))
        synth = Xo[len(X):]
        assert len(synth) == 2              # minority 2 -> 4
        for s in synth:
            assert on_segment(s, X[0], X[1])

    def test_identical_minority_points_give_identical_synthetics(self):
        X = np.vstack([np.zeros((3, 2)), np.ones((8, 2)) * 4])
        y = np.array([1] * 3 + [0] * 8)
        Xo, yo = smote(X, y, SmoteSpec(k_neighbors=2, seed=1))
        assert np.all(Xo[len(X):] == 0.0)

    def test_synthetics_lie_on_true_neighbor_segments(self):
        # oracle: brute-force nearest-neighbor recheck per synthetic point
        rng = np.random.default_rng(2)
        for trial in range(30):
            n_min = int(rng.integers(4, 15))
            n_maj = int(rng.integers(n_min + 5, 40))
            d = int(rng.integers(2, 6))
            Xm = rng.normal(size=(n_min, d))
            Xj = rng.normal(loc=3.0, size=(n_maj, d))
            X = np.vstack([Xm, Xj])
            y = np.array([1] * n_min + [0] * n_maj)
            k = int(rng.integers(1, n_min))
            Xo, yo = smote(X, y, SmoteSpec(k_neighbors=k, seed=trial))
            for s in Xo[len(X):]:
                found = False
                for i in range(n_min):
                    for j in brute_force_neighbors(Xm, i, k):
                        if on_segment(s, Xm[i], Xm[j]):
                            found = True
                            break
                    if found:
                        break
                assert found

    def test_originals_preserved_and_first(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(20, 3))
        y = np.array([1] * 5 + [0] * 15)
        Xo, yo = smote(X, y, SmoteSpec(k_neighbors=4, seed=4))
        assert np.array_equal(Xo[:20], X)
        assert np.array_equal(yo[:20], y)

    def test_target_ratio(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(50, 2))
        y = np.array([1] * 10 + [0] * 40)
        for ratio in (0.5, 0.75, 1.0):
            Xo, yo = smote(X, y, SmoteSpec(target_ratio=ratio, seed=6))
            assert np.sum(yo == 1) == round(ratio * 40)

    def test_no_op_when_ratio_already_met(self):
        X = np.arange(8, dtype=float)[:, None]
        y = np.array([0, 1] * 4)
        Xo, yo = smote(X, y, SmoteSpec())
        assert np.array_equal(Xo, X)

    def test_minority_below_two_rejected(self):
        X = np.arange(5, dtype=float)[:, None]
        y = np.array([1, 0, 0, 0, 0])
        with pytest.raises(ResamplingError):
            smote(X, y, SmoteSpec())

    def test_k_clamped_with_warning(self):
        X = np.vstack([np.eye(3), np.full((9, 3), 5.0)])
        y = np.array([1] * 3 + [0] * 9)
        with pytest.warns(UserWarning, match="clamped"):
            Xo, yo = smote(X, y, SmoteSpec(k_neighbors=10, seed=7))
        assert np.sum(yo == 1) == 9

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(30, 4))
        y = np.array([1] * 8 + [0] * 22)
        a = smote(X, y, SmoteSpec(seed=9))
        b = smote(X, y, SmoteSpec(seed=9))
        assert np.array_equal(a[0], b[0])

    def test_convex_hull_componentwise(self):
        rng = np.random.default_rng(10)
        Xm = rng.normal(size=(6, 3))
        X = np.vstack([Xm, rng.normal(4, 1, size=(20, 3))])
        y = np.array([1] * 6 + [0] * 20)
        Xo, _ = smote(X, y, SmoteSpec(seed=11))
        lo, hi = Xm.min(axis=0), Xm.max(axis=0)
        synth = Xo[len(X):]
        assert np.all(synth >= lo - 1e-12) and np.all(synth <= hi + 1e-12)
