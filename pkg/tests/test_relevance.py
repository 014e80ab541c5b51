import numpy as np
import pytest

from veridict.classifiers import ClassifierSpec
from veridict.relevance import (FeatureRanking, n_selected, pca_reduce, pca_with_components,
                                permutation_importance, select_top_fraction)

from conftest import make_fm


def label_copy_fm(seed, n=80, n_noise=5):
    rng = np.random.default_rng(seed)
    y = rng.permutation(np.arange(n) % 2)
    X = np.column_stack([y + rng.normal(0, 0.01, n), rng.normal(size=(n, n_noise))])
    return make_fm(X, y, ["copy"] + [f"noise{i}" for i in range(n_noise)])


def test_label_copy_ranked_first():
    hits = sum(permutation_importance(label_copy_fm(s), n_repeats=3, seed=s).names[0] == "copy"
               for s in range(100))
    assert hits >= 95


def test_noise_importance_near_zero():
    vals = []
    for s in range(50):
        rng = np.random.default_rng(1000 + s)
        n = 80
        y = rng.permutation(np.arange(n) % 2)
        X = np.column_stack([y + rng.normal(0, 0.8, n), rng.normal(size=n)])
        r = permutation_importance(make_fm(X, y, ["signal", "noise"]), n_repeats=5, seed=s)
        vals.append(r.importance("noise"))
    assert abs(np.mean(vals)) <= 0.02


def test_redundant_copies_share_importance():
    single, double = [], []
    for s in range(20):
        rng = np.random.default_rng(s)
        n = 120
        y = rng.permutation(np.arange(n) % 2)
        sig = y + rng.normal(0, 0.4, n)
        noise = rng.normal(size=n)
        r1 = permutation_importance(make_fm(np.column_stack([sig, noise]), y, ["a", "n"]), n_repeats=5, seed=s)
        r2 = permutation_importance(make_fm(np.column_stack([sig, sig, noise]), y, ["a", "b", "n"]),
                                    n_repeats=5, seed=s)
        single.append(r1.importance("a"))
        double.append(max(r2.importance("a"), r2.importance("b")))
    assert np.mean(double) < np.mean(single)


def test_rf_ranker_and_determinism():
    fm = label_copy_fm(7)
    spec = ClassifierSpec("rf", n_trees=20)
    a = permutation_importance(fm, spec, n_repeats=2, seed=3)
    b = permutation_importance(fm, spec, n_repeats=2, seed=3)
    assert a.entries == b.entries and a.names[0] == "copy"


def test_column_order_does_not_matter():
    fm = label_copy_fm(2)
    rev = fm.columns(list(reversed(fm.feature_names)))
    a = permutation_importance(fm, n_repeats=3, seed=1)
    b = permutation_importance(rev, n_repeats=3, seed=1)
    assert a.names == b.names
    for n in a.names:
        assert a.importance(n) == pytest.approx(b.importance(n), abs=1e-12)


def test_ranking_rejects_bad_input():
    fm = label_copy_fm(0)
    with pytest.raises(ValueError):
        permutation_importance(fm, ClassifierSpec("trivial"))
    with pytest.raises(ValueError):
        permutation_importance(fm, n_repeats=0)


def test_n_selected_arithmetic():
    assert n_selected(126, 0.25) == 32
    assert n_selected(140, 0.3) == 42
    assert n_selected(10, 1.0) == 10
    assert n_selected(10, 0.01) == 1
    with pytest.raises(ValueError):
        n_selected(10, 0.0)


def test_select_nesting_and_order():
    rng = np.random.default_rng(0)
    r = FeatureRanking(tuple((f"f{i}", float(v)) for i, v in enumerate(rng.normal(size=37))), "svm", 1)
    fracs = np.linspace(0.01, 1.0, 60)
    for f1 in fracs:
        for f2 in fracs[fracs >= f1]:
            a, b = select_top_fraction(r, f1), select_top_fraction(r, f2)
            assert b[:len(a)] == a
    assert select_top_fraction(r, 1.0) == r.names
    top = r.names[0]
    assert top in select_top_fraction(r, 0.3)


def test_ranking_csv_round_trip(tmp_path):
    r = FeatureRanking((("b", 0.1), ("a", 0.1), ("c", 0.3)), "svm", 2)
    assert r.names == ["c", "a", "b"] and r.rank_of("b") == 3
    r.write_csv(tmp_path / "r.csv")
    assert FeatureRanking.read_csv(tmp_path / "r.csv").entries == r.entries


def test_pca_rank_one():
    t = np.random.default_rng(0).normal(size=50)
    X = np.outer(t, [1.0, 2.0, -1.0])
    reduced, proj = pca_reduce(make_fm(X, np.arange(50) % 2), 0.95)
    assert reduced.shape == (50, 1)
    np.testing.assert_allclose(proj.inverse(reduced.values), X, atol=1e-10)


def test_pca_isotropic_needs_both():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(5000, 2))
    reduced, proj = pca_reduce(make_fm(X, np.arange(5000) % 2), 0.95)
    assert reduced.shape[1] == 2
    # eigen oracle: ratios match the sample covariance eigenvalues
    ev = np.sort(np.linalg.eigvalsh(np.cov(X.T)))[::-1]
    np.testing.assert_allclose(proj.explained_ratio, ev / ev.sum(), rtol=1e-10)


def test_reconstruction_error_monotone():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(100, 6)) @ rng.normal(size=(6, 6))
    fm = make_fm(X, np.arange(100) % 2)
    errs = []
    for k in range(1, 7):
        p = pca_with_components(fm, k)
        errs.append(np.sum((p.inverse(p.transform(X)) - X) ** 2))
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-12 * np.sum(X ** 2)


def test_pca_train_reference_only():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 3))
    fm = make_fm(X, np.arange(40) % 2)
    _, p1 = pca_reduce(fm, 0.9, reference=np.arange(30))
    X2 = X.copy()
    X2[30:] *= 100
    _, p2 = pca_reduce(make_fm(X2, np.arange(40) % 2), 0.9, reference=np.arange(30))
    np.testing.assert_array_equal(p1.components, p2.components)
