"""Permutation feature importance, top-fraction selection and PCA reduction."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierSpec, SingleClassError, predict, train_model
from .features import FeatureMatrix
from .splits import stratified_split, stream

# best-performing retained fractions per corpus
FRACTION_PRESETS = {"RL": 0.30, "BxL": 0.30, "BgL": 0.20, "MU": 0.80}


@dataclass(frozen=True)
class FeatureRanking:
    entries: tuple[tuple[str, float], ...]
    classifier_tag: str
    n_repeats: int
    baseline_accuracy: float = float("nan")

    def __post_init__(self):
        ordered = tuple(sorted(self.entries, key=lambda e: (-e[1], e[0])))
        object.__setattr__(self, "entries", ordered)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def importance(self, name: str) -> float:
        return dict(self.entries)[name]

    def rank_of(self, name: str) -> int:
        """1-based position of ``name``."""
        return self.names.index(name) + 1

    def write_csv(self, path: str | os.PathLike):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("name", "importance"))
            for n, v in self.entries:
                w.writerow((n, repr(float(v))))

    @classmethod
    def read_csv(cls, path, classifier_tag="svm", n_repeats=0) -> "FeatureRanking":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [(r["name"], float(r["importance"])) for r in csv.DictReader(fh)]
        return cls(tuple(rows), classifier_tag, n_repeats)


def permutation_importance(fm: FeatureMatrix, clf: ClassifierSpec | None = None, n_repeats: int = 10,
                           seed: int = 0, train_frac: float = 0.7) -> FeatureRanking:
    """Held-out accuracy drop when one feature is shuffled among the held-out rows.

    One stratified split is drawn per seed; the classifier (with its scaler) is
    fitted on the training part only. Each (feature, repeat) shuffle draws from
    its own stream keyed by the feature name, so results do not depend on
    column order or evaluation order.
    """
    clf = clf or ClassifierSpec("svm")
    if clf.kind not in ("svm", "rf"):
        raise ValueError("permutation importance supports svm and rf rankers")
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    y = fm.labels
    if len(np.unique(y)) < 2:
        raise SingleClassError("permutation importance needs both classes")
    train, test = stratified_split(y, train_frac, stream(seed, "split"))
    model = train_model(fm.rows(train), clf, seed=seed)
    X_test, y_test = fm.values[test], y[test]
    base = float(np.mean(predict(model, X_test) == y_test))
    entries = []
    for j, name in enumerate(fm.feature_names):
        drops = np.empty(n_repeats)
        for r in range(n_repeats):
            rng = stream(seed, "perm", name, r)
            Xp = X_test.copy()
            Xp[:, j] = Xp[rng.permutation(len(test)), j]
            drops[r] = base - np.mean(predict(model, Xp) == y_test)
        entries.append((name, float(drops.mean())))
    return FeatureRanking(tuple(entries), clf.kind, n_repeats, base)


def n_selected(n_features: int, fraction: float) -> int:
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    # rounding guards against 0.3 * 140 = 42.000000000000007
    return min(n_features, math.ceil(round(fraction * n_features, 9)))


def select_top_fraction(r: FeatureRanking, fraction: float) -> list[str]:
    if not r.entries:
        raise ValueError("ranking is empty")
    return r.names[:n_selected(len(r.entries), fraction)]


@dataclass(frozen=True, eq=False)
class PcaProjection:
    mean: np.ndarray
    components: np.ndarray  # (k, d), rows orthonormal
    explained_ratio: np.ndarray  # per retained component

    def transform(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean) @ self.components.T

    def inverse(self, scores) -> np.ndarray:
        return np.asarray(scores) @ self.components + self.mean


def _pca_basis(values):
    mean = values.mean(axis=0)
    _, s, vt = np.linalg.svd(values - mean, full_matrices=False)
    var = s * s
    total = var.sum()
    ratio = var / total if total > 0 else np.zeros_like(var)
    return mean, vt, ratio


def pca_reduce(fm: FeatureMatrix, variance_threshold: float = 0.95, reference=None):
    """Project onto the fewest principal components explaining ``variance_threshold``.

    Components are estimated from ``reference`` rows (all rows by default) and
    applied to every row.
    """
    if not 0.0 < variance_threshold <= 1.0:
        raise ValueError("variance_threshold must lie in (0, 1]")
    ref = np.arange(fm.shape[0]) if reference is None else np.asarray(reference)
    mean, vt, ratio = _pca_basis(fm.values[ref])
    cum = np.cumsum(ratio)
    k = int(np.searchsorted(cum, variance_threshold - 1e-12) + 1) if cum[-1] > 0 else 1
    k = min(k, len(ratio))
    proj = PcaProjection(mean, vt[:k], ratio[:k])
    names = tuple(f"pc{i + 1}" for i in range(k))
    reduced = FeatureMatrix(proj.transform(fm.values), names, fm.labels, fm.sample_ids,
                            fm.dataset_ids, ("pca",) * k)
    return reduced, proj


def pca_with_components(fm: FeatureMatrix, k: int):
    """PCA with a fixed component count (for reconstruction studies)."""
    mean, vt, ratio = _pca_basis(fm.values)
    return PcaProjection(mean, vt[:k], ratio[:k])
