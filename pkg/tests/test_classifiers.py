import numpy as np
import pytest

from veridict.classifiers import (ClassifierSpec, SingleClassError, fit_rf, fit_svm, fit_trivial, grow_tree,
                                  load_model, predict, predict_score, save_model, train_model)

from conftest import blobs, make_fm, xor


def exhaustive_stump(X, y):
    """Lowest weighted Gini impurity over every feature and every midpoint threshold."""
    best = np.inf
    n = len(y)
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for lo, hi in zip(vals[:-1], vals[1:]):
            left = X[:, j] <= (lo + hi) / 2
            imp = 0.0
            for part in (y[left], y[~left]):
                p = part.mean()
                imp += len(part) * 2 * p * (1 - p)
            best = min(best, imp / n)
    return best


def stump_impurity(tree, X, y):
    leaves = tree.apply(X)
    imp = 0.0
    for leaf in np.unique(leaves):
        part = y[leaves == leaf]
        p = part.mean()
        imp += len(part) * 2 * p * (1 - p)
    return imp / len(y)


def accuracy(m, X, y):
    return np.mean(predict(m, X) == y)


def test_svm_separable_blobs():
    X, y = blobs(400, margin=2.0)
    m = fit_svm((X, y), c=10.0)
    assert accuracy(m, X, y) >= 0.99


def test_svm_xor_is_chance():
    X, y = xor(4000, seed=1)
    Xt, yt = xor(4000, seed=2)
    m = fit_svm((X, y))
    assert abs(accuracy(m, Xt, yt) - 0.5) <= 0.05


def test_svm_duplicate_rows_same_boundary():
    X, y = blobs(100, margin=0.5, seed=3)
    a = fit_svm((X, y))
    b = fit_svm((np.vstack([X, X]), np.r_[y, y]))
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-6)
    assert abs(a.bias - b.bias) < 1e-6


def test_svm_scaling_with_matching_c():
    X, y = blobs(100, margin=0.5, seed=4)
    s = 3.0
    a = fit_svm((X, y), c=1.0)
    b = fit_svm((s * X, y), c=1.0 / s**2)
    np.testing.assert_allclose(a.weights, s * b.weights, rtol=1e-8, atol=1e-10)
    assert b.bias == pytest.approx(a.bias, abs=1e-9)


def test_svm_score_linear_along_weights():
    X, y = blobs(100, seed=5)
    m = fit_svm((X, y))
    u = m.weights / np.linalg.norm(m.weights)
    t = np.linspace(-3, 3, 7)
    scores = predict_score(m, t[:, None] * u)
    np.testing.assert_allclose(np.diff(scores), np.diff(scores)[0], rtol=1e-9)


def test_svm_seed_independent():
    X, y = blobs(60, seed=6)
    np.testing.assert_array_equal(fit_svm((X, y), seed=1).weights, fit_svm((X, y), seed=2).weights)


def test_rf_xor():
    X, y = xor(400, seed=1)
    Xt, yt = xor(1000, seed=2)
    m = fit_rf((X, y), n_trees=100, max_depth=6, seed=0)
    assert accuracy(m, Xt, yt) >= 0.95
    s = predict_score(m, Xt)
    assert s.min() >= 0 and s.max() <= 1
    assert 0.85 <= m.oob_accuracy <= 1.0


def test_stump_matches_exhaustive_search():
    rng = np.random.default_rng(0)
    for trial in range(25):
        n, d = int(rng.integers(10, 60)), int(rng.integers(1, 5))
        X = rng.normal(size=(n, d))
        y = (X @ rng.normal(size=d) + rng.normal(0, 0.7, n) > 0).astype(int)
        if len(np.unique(y)) < 2:
            continue
        m = fit_rf((X, y), n_trees=1, max_depth=1, mtry=d, bootstrap=False, seed=trial)
        tree = m.trees[0]
        assert tree.depth == 1
        assert stump_impurity(tree, X, y) == pytest.approx(exhaustive_stump(X, y), abs=1e-12)


def test_pure_node_stops():
    X = np.arange(10.0)[:, None]
    tree = grow_tree(X, np.zeros(10, dtype=int), np.random.default_rng(0))
    assert tree.n_nodes == 1
    tree = grow_tree(X, (X[:, 0] > 4).astype(int), np.random.default_rng(0))
    assert tree.n_nodes == 3


def test_rf_parallel_equals_serial():
    X, y = xor(200, seed=3)
    a = fit_rf((X, y), n_trees=20, seed=5)
    b = fit_rf((X, y), n_trees=20, seed=5, n_jobs=2)
    np.testing.assert_array_equal(predict_score(a, X), predict_score(b, X))
    assert a.oob_accuracy == b.oob_accuracy


def test_rf_needs_both_classes():
    with pytest.raises(SingleClassError):
        fit_rf((np.zeros((4, 1)), np.zeros(4)))
    with pytest.raises(SingleClassError):
        fit_svm((np.zeros((4, 1)), np.ones(4)))


def test_trivial_constant_score():
    X = np.random.default_rng(0).normal(size=(10, 2))
    m = fit_trivial((X, np.r_[np.zeros(6), np.ones(4)]))
    assert np.all(predict_score(m, X) == 0) and np.all(predict(m, X) == 0)
    # tie goes to truth
    assert fit_trivial((X, np.r_[np.zeros(5), np.ones(5)])).majority == 0


@pytest.mark.parametrize("kind", ["trivial", "svm", "rf"])
def test_save_load_round_trip(tmp_path, kind):
    X, y = xor(100)
    fm = make_fm(X * [1, 10] + [0, 5], y)
    m = train_model(fm, ClassifierSpec(kind, n_trees=10), seed=1)
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    np.testing.assert_array_equal(predict_score(back, fm.values), predict_score(m, fm.values))
    assert back.feature_names == m.feature_names


def test_wrong_width_rejected():
    X, y = blobs(20)
    m = fit_svm((X, y))
    with pytest.raises(ValueError):
        predict(m, np.zeros((2, 3)))
