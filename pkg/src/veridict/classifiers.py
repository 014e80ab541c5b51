"""Trivial baseline, linear SVM and random forest.

Deception (label 1) is the positive class. Every model exposes a real-valued
score that grows with deception confidence; ``predict`` thresholds it and
resolves ties towards truth.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .features import FeatureMatrix, Scaler

MODEL_FORMAT = "veridict-model"
MODEL_VERSION = 1
KINDS = ("trivial", "svm", "rf")


class SingleClassError(ValueError):
    """Training data contains only one label."""


def _require_two_classes(y):
    if len(np.unique(y)) < 2:
        raise SingleClassError("training data must contain both truth and deception samples")


# ------------------------------------------------------------------ trees

@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Flat binary tree. ``feature[i] == -1`` marks a leaf; rows go left when ``x <= threshold``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) training class counts

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return node

    def predict(self, X) -> np.ndarray:
        c = self.counts[self.apply(X)]
        return (c[:, 1] > c[:, 0]).astype(np.int64)

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "counts")}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["feature"], dtype=np.int64), np.asarray(d["threshold"], dtype=float),
                   np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["counts"], dtype=np.int64).reshape(-1, 2))


def _gini_sum(n1, n):
    # n * gini(node) for binary counts
    p = n1 / n
    return n * (2.0 * p * (1.0 - p))


def best_split(X, y, features):
    """Best (feature, threshold, weighted child impurity) over ``features``; None if no split exists."""
    best = None
    n = len(y)
    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        distinct = np.nonzero(xs[1:] > xs[:-1])[0]
        if distinct.size == 0:
            continue
        cum1 = np.cumsum(ys)
        n_left = distinct + 1
        left1 = cum1[distinct]
        right1 = cum1[-1] - left1
        score = _gini_sum(left1, n_left) + _gini_sum(right1, n - n_left)
        k = int(np.argmin(score))
        if best is None or score[k] < best[2] - 1e-12:
            thr = 0.5 * (xs[distinct[k]] + xs[distinct[k] + 1])
            if not thr < xs[distinct[k] + 1]:
                thr = xs[distinct[k]]
            best = (int(j), float(thr), float(score[k]))
    return best


def grow_tree(X, y, rng: np.random.Generator, max_depth=None, mtry=None, min_leaf=1) -> DecisionTree:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    d = X.shape[1]
    mtry = d if mtry is None else max(1, min(int(mtry), d))
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        n1 = int(y[idx].sum())
        counts.append((len(idx) - n1, n1))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n0, n1 = counts[node]
        if n0 == 0 or n1 == 0 or len(idx) < 2 * min_leaf:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        Xn, yn = X[idx], y[idx]
        perm = rng.permutation(d)
        split = best_split(Xn, yn, perm[:mtry])
        if split is None and mtry < d:
            # every sampled feature is constant here; fall back to the rest
            split = best_split(Xn, yn, perm[mtry:])
        if split is None:
            continue
        j, thr, _ = split
        mask = Xn[:, j] <= thr
        if mask.sum() < min_leaf or (~mask).sum() < min_leaf:
            continue
        feature[node], threshold[node] = j, thr
        li, ri = idx[mask], idx[~mask]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return DecisionTree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=float),
                        np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                        np.array(counts, dtype=np.int64).reshape(-1, 2))


# ------------------------------------------------------------------ model

@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: str
    feature_names: tuple[str, ...]
    scaler: Scaler | None = None
    majority: int = 0
    weights: np.ndarray | None = None
    bias: float = 0.0
    trees: tuple[DecisionTree, ...] = ()
    threshold: float = 0.0
    params: dict = field(default_factory=dict)
    oob_accuracy: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "svm" and len(self.weights) != len(self.feature_names):
            raise ValueError("weight vector length differs from feature count")
        if self.kind == "rf":
            d = len(self.feature_names)
            for t in self.trees:
                if np.any(t.feature >= d):
                    raise ValueError("tree splits on an unknown feature")


def _prepare(m: TrainedModel, rows) -> np.ndarray:
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(m.feature_names):
        raise ValueError(f"model expects {len(m.feature_names)} features, got {X.shape[1]}")
    return m.scaler.transform(X) if m.scaler is not None else X


def predict_score(m: TrainedModel, rows) -> np.ndarray:
    X = _prepare(m, rows)
    if m.kind == "trivial":
        return np.full(len(X), float(m.majority))
    if m.kind == "svm":
        return X @ m.weights + m.bias
    votes = np.zeros(len(X))
    for t in m.trees:
        votes += t.predict(X)
    return votes / len(m.trees)


def predict(m: TrainedModel, rows) -> np.ndarray:
    return (predict_score(m, rows) > m.threshold).astype(np.int64)


def _xy(fm):
    if isinstance(fm, FeatureMatrix):
        return fm.values, fm.labels, fm.feature_names
    X, y = fm
    X = np.asarray(X, dtype=float)
    return X, np.asarray(y, dtype=np.int64), tuple(f"x{i}" for i in range(X.shape[1]))


def fit_trivial(fm) -> TrainedModel:
    X, y, names = _xy(fm)
    if len(y) == 0:
        raise ValueError("cannot fit on empty data")
    majority = int(y.sum() * 2 > len(y))
    return TrainedModel("trivial", names, majority=majority, threshold=0.5)


def fit_svm(fm, c: float = 1.0, seed: int = 0, epochs: int = 1000) -> TrainedModel:
    """Linear SVM on ``(1/(2c))||w||^2 + mean hinge`` by full-batch subgradient descent.

    The weight step is ``c / t`` (Pegasos schedule) and the bias step
    ``1 / sqrt(t)``; the returned parameters average the second half of the
    iterates. Full-batch updates make the fit independent of ``seed`` and of
    row duplication.
    """
    if not c > 0:
        raise ValueError("c must be > 0")
    X, y, names = _xy(fm)
    _require_two_classes(y)
    lam = 1.0 / c
    s = 2.0 * y - 1.0
    n, d = X.shape
    w, b = np.zeros(d), 0.0
    w_avg, b_avg, n_avg = np.zeros(d), 0.0, 0
    start = epochs // 2
    for t in range(1, epochs + 1):
        active = s * (X @ w + b) < 1.0
        g_w = lam * w - (s[active] @ X[active]) / n
        g_b = -s[active].sum() / n
        w = w - g_w / (lam * t)
        b = b - g_b / math.sqrt(t)
        if t > start:
            w_avg += w
            b_avg += b
            n_avg += 1
    return TrainedModel("svm", names, weights=w_avg / n_avg, bias=b_avg / n_avg, threshold=0.0,
                        params={"c": c, "epochs": epochs, "seed": seed})


def _fit_one_tree(X, y, seed_seq, bootstrap, max_depth, mtry, min_leaf):
    rng = np.random.default_rng(seed_seq)
    n = len(y)
    idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
    tree = grow_tree(X[idx], y[idx], rng, max_depth=max_depth, mtry=mtry, min_leaf=min_leaf)
    in_bag = np.zeros(n, dtype=bool)
    in_bag[idx] = True
    return tree, in_bag


def fit_rf(fm, n_trees: int = 100, max_depth: int | None = None, mtry: int | None = None,
           seed: int = 0, min_leaf: int = 1, bootstrap: bool = True, n_jobs: int = 1) -> TrainedModel:
    """Random forest of Gini trees; ``mtry`` defaults to ceil(sqrt(d))."""
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X, y, names = _xy(fm)
    _require_two_classes(y)
    d = X.shape[1]
    mtry = math.ceil(math.sqrt(d)) if mtry is None else mtry
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    args = (bootstrap, max_depth, mtry, min_leaf)
    if n_jobs == 1:
        fitted = [_fit_one_tree(X, y, s, *args) for s in seeds]
    else:
        fitted = Parallel(n_jobs=n_jobs)(delayed(_fit_one_tree)(X, y, s, *args) for s in seeds)
    trees = tuple(t for t, _ in fitted)
    oob = None
    if bootstrap:
        votes = np.zeros(len(y))
        seen = np.zeros(len(y))
        for t, in_bag in fitted:
            out = ~in_bag
            if out.any():
                votes[out] += t.predict(X[out])
                seen[out] += 1
        ok = seen > 0
        if ok.any():
            pred = (votes[ok] / seen[ok] > 0.5).astype(np.int64)
            oob = float(np.mean(pred == y[ok]))
    return TrainedModel("rf", names, trees=trees, threshold=0.5, oob_accuracy=oob,
                        params={"n_trees": n_trees, "max_depth": max_depth, "mtry": mtry,
                                "min_leaf": min_leaf, "bootstrap": bootstrap, "seed": seed})


@dataclass(frozen=True)
class ClassifierSpec:
    """Which classifier to fit and with what hyperparameters."""

    kind: str = "svm"
    c: float = 1.0
    epochs: int = 1000
    n_trees: int = 100
    max_depth: int | None = None
    mtry: int | None = None
    min_leaf: int = 1
    n_jobs: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier {self.kind!r}; choose from {KINDS}")

    def fit(self, fm, seed: int = 0) -> TrainedModel:
        if self.kind == "trivial":
            return fit_trivial(fm)
        if self.kind == "svm":
            return fit_svm(fm, c=self.c, seed=seed, epochs=self.epochs)
        return fit_rf(fm, n_trees=self.n_trees, max_depth=self.max_depth, mtry=self.mtry,
                      seed=seed, min_leaf=self.min_leaf, n_jobs=self.n_jobs)


def train_model(fm: FeatureMatrix, spec: ClassifierSpec, seed: int = 0) -> TrainedModel:
    """Fit a scaler on ``fm`` then the classifier; the model applies the scaler itself."""
    scaler = Scaler.fit(fm.values)
    model = spec.fit(fm.with_values(scaler.transform(fm.values)), seed=seed)
    return _with_scaler(model, scaler)


def _with_scaler(m: TrainedModel, scaler: Scaler | None) -> TrainedModel:
    return TrainedModel(m.kind, m.feature_names, scaler, m.majority, m.weights, m.bias, m.trees,
                        m.threshold, m.params, m.oob_accuracy)


# ------------------------------------------------------------- persistence

def model_to_dict(m: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": m.kind,
        "feature_names": list(m.feature_names),
        "scaler": m.scaler.to_dict() if m.scaler is not None else None,
        "threshold": m.threshold,
        "params": m.params,
        "majority": m.majority,
        "weights": m.weights.tolist() if m.weights is not None else None,
        "bias": m.bias,
        "trees": [t.to_dict() for t in m.trees],
        "oob_accuracy": m.oob_accuracy,
    }


def model_from_dict(d: dict) -> TrainedModel:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError("not a model document")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')}")
    return TrainedModel(
        d["kind"], tuple(d["feature_names"]),
        Scaler.from_dict(d["scaler"]) if d.get("scaler") else None,
        int(d.get("majority", 0)),
        np.asarray(d["weights"], dtype=float) if d.get("weights") is not None else None,
        float(d.get("bias", 0.0)),
        tuple(DecisionTree.from_dict(t) for t in d.get("trees", [])),
        float(d["threshold"]), dict(d.get("params", {})), d.get("oob_accuracy"))


def save_model(m: TrainedModel, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(m), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
