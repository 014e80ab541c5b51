"""Evaluation protocols: repeated random splits, leave-one-out, cross-dataset.

All fitted state (feature ranking, selection, standardisation, PCA, model)
is estimated from the training rows of each split only.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .classifiers import (ClassifierSpec, SingleClassError, TrainedModel, model_from_dict,
                          model_to_dict, predict_score, train_model)
from .data import Dataset
from .features import FeatureMatrix, Scaler
from .metrics import Confusion, RocCurve, confusion, roc_auc
from .relevance import PcaProjection, pca_reduce, permutation_importance, select_top_fraction
from .sequence import SequenceSpec, TrainResult, dataset_to_batch
from .splits import stratified_split, stream

logger = logging.getLogger(__name__)

PLAN_KINDS = ("repeated-random", "leave-one-out", "cross-dataset", "resubstitution")
MAX_REDRAWS = 100


@dataclass(frozen=True)
class SplitPlan:
    kind: str = "repeated-random"
    train_frac: float = 0.7
    n_repeats: int = 50
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.kind not in PLAN_KINDS:
            raise ValueError(f"unknown plan kind {self.kind!r}; choose from {PLAN_KINDS}")
        if self.kind == "repeated-random" and not 0.0 < self.train_frac < 1.0:
            raise ValueError("train_frac must lie in (0, 1)")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")


@dataclass(frozen=True)
class SelectionSpec:
    """Optional top-fraction feature selection and/or PCA inside each training split."""

    fraction: float | None = None
    ranker: ClassifierSpec = field(default_factory=lambda: ClassifierSpec("svm"))
    n_repeats: int = 10
    pca_threshold: float | None = None


# --------------------------------------------------------------- pipeline

@dataclass(frozen=True, eq=False)
class Pipeline:
    """Column selection, optional PCA and a classifier, fitted together."""

    columns: tuple[str, ...]
    model: TrainedModel
    pca_scaler: Scaler | None = None
    pca: PcaProjection | None = None

    def score(self, fm: FeatureMatrix) -> np.ndarray:
        X = fm.columns(self.columns).values
        if self.pca is not None:
            X = self.pca.transform(self.pca_scaler.transform(X))
        return predict_score(self.model, X)

    def predict(self, fm: FeatureMatrix) -> np.ndarray:
        return (self.score(fm) > self.model.threshold).astype(np.int64)

    def to_dict(self):
        if self.pca is not None:
            raise ValueError("PCA pipelines are not persisted")
        return {"columns": list(self.columns), "model": model_to_dict(self.model)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["columns"]), model_from_dict(d["model"]))


def fit_pipeline(fm: FeatureMatrix, clf: ClassifierSpec, selection: SelectionSpec | None = None,
                 seed: int = 0) -> Pipeline:
    selection = selection or SelectionSpec()
    columns = fm.feature_names
    if selection.fraction is not None and selection.fraction < 1.0:
        ranking = permutation_importance(fm, selection.ranker, selection.n_repeats, seed)
        columns = tuple(select_top_fraction(ranking, selection.fraction))
    sub = fm.columns(columns)
    if selection.pca_threshold is not None:
        scaler = Scaler.fit(sub.values)
        reduced, proj = pca_reduce(sub.with_values(scaler.transform(sub.values)), selection.pca_threshold)
        return Pipeline(tuple(columns), train_model(reduced, clf, seed), scaler, proj)
    return Pipeline(tuple(columns), train_model(sub, clf, seed))


# ----------------------------------------------------------------- report

@dataclass
class RepeatResult:
    index: int
    seed: int
    n_train: int
    n_test: int
    accuracy: float
    f1: float
    mcc: float
    auc: float | None
    confusion: Confusion
    majority_prevalence: float
    n_features: int


def _summary(values) -> dict:
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return {"mean": None, "median": None, "std": None}
    return {"mean": float(v.mean()), "median": float(np.median(v)), "std": float(v.std())}


@dataclass
class EvalReport:
    protocol: dict
    repeats: list[RepeatResult]
    confusion: Confusion
    roc: RocCurve | None
    redraws: int = 0

    @property
    def accuracies(self) -> list[float]:
        return [r.accuracy for r in self.repeats]

    @property
    def aggregate(self) -> dict:
        return {m: _summary(getattr(r, m) for r in self.repeats)
                for m in ("accuracy", "f1", "mcc", "auc")}

    @property
    def auc(self) -> float | None:
        return self.roc.auc if self.roc is not None else None

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "aggregate": self.aggregate,
            "pooled": {"confusion": self.confusion.to_dict(), "accuracy": self.confusion.accuracy,
                       "f1": self.confusion.f1, "mcc": self.confusion.mcc, "auc": self.auc},
            "redraws": self.redraws,
            "repeats": [dict(asdict(r), confusion=r.confusion.to_dict()) for r in self.repeats],
        }

    def write_json(self, path: str | os.PathLike):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def write_roc_csv(self, path: str | os.PathLike):
        if self.roc is None:
            raise ValueError("no ROC curve: pooled test labels had a single class")
        write_roc_csv(self.roc, path)

    def write_repeats_csv(self, path: str | os.PathLike):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("repeat", "seed", "n_train", "n_test", "accuracy", "f1", "mcc", "auc"))
            for r in self.repeats:
                w.writerow((r.index, r.seed, r.n_train, r.n_test, repr(r.accuracy), repr(r.f1),
                            repr(r.mcc), "" if r.auc is None else repr(r.auc)))


def write_roc_csv(roc: RocCurve, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("fpr", "tpr", "threshold"))
        for f, t, th in zip(roc.fpr, roc.tpr, roc.thresholds):
            w.writerow((repr(float(f)), repr(float(t)), repr(float(th))))


# --------------------------------------------------------------- protocol

class _Task:
    """Uniform fit/score access for feature-matrix and sequence classifiers."""

    def __init__(self, data, clf, selection):
        self.clf = clf
        self.selection = selection
        if isinstance(clf, SequenceSpec):
            if not isinstance(data, Dataset):
                raise TypeError("sequence classifiers need a Dataset")
            self.X, self.y = dataset_to_batch(data, clf.length)
            self.fm = None
        else:
            if isinstance(data, Dataset):
                raise TypeError("discriminative classifiers need a FeatureMatrix")
            self.fm = data
            self.y = data.labels

    def __len__(self):
        return len(self.y)

    def fit_score(self, train, test, seed, other: "_Task | None" = None):
        target = other or self
        if self.fm is None:
            res: TrainResult = self.clf.fit(self.X[train], self.y[train], seed)
            return res.predict_score(target.X[test]), 0.5, self.X.shape[2]
        pipe = fit_pipeline(self.fm.rows(train), self.clf, self.selection, seed)
        return pipe.score(target.fm.rows(test)), pipe.model.threshold, len(pipe.columns)


def _evaluate(task, train, test, seed, index, target=None) -> RepeatResult:
    target = target or task
    if len(test) == 0:
        raise ValueError("test split has zero samples")
    scores, thr, n_feat = task.fit_score(train, test, seed, target)
    y = target.y[test]
    pred = (scores > thr).astype(np.int64)
    c = confusion(y, pred)
    auc = roc_auc(scores, y).auc if len(np.unique(y)) == 2 else None
    prev = max(y.mean(), 1 - y.mean())
    return RepeatResult(index, seed, len(train), len(test), c.accuracy, c.f1, c.mcc, auc, c,
                        float(prev), n_feat), scores, y


def _describe(plan, clf, selection) -> dict:
    return {"plan": asdict(plan), "classifier": {"type": type(clf).__name__, **asdict(clf)},
            "selection": asdict(selection) if selection else None}


def _repeat_split(y, plan, r):
    redraws = 0
    for attempt in range(MAX_REDRAWS):
        rng = stream(plan.seed, "repeat", r, attempt)
        train, test = stratified_split(y, plan.train_frac, rng, plan.stratified)
        if len(np.unique(y[train])) == 2:
            return train, test, int(rng.integers(0, 2**31 - 1)), redraws
        redraws += 1
    raise SingleClassError(f"repeat {r}: no two-class training split after {MAX_REDRAWS} draws")


def _finish(protocol, outcomes, redraws=0) -> EvalReport:
    repeats = [o[0] for o in outcomes]
    total = Confusion()
    for r in repeats:
        total = total + r.confusion
    scores = np.concatenate([o[1] for o in outcomes])
    labels = np.concatenate([o[2] for o in outcomes])
    roc = roc_auc(scores, labels) if len(np.unique(labels)) == 2 else None
    return EvalReport(protocol, repeats, total, roc, redraws)


def run_protocol(data, plan: SplitPlan, clf: ClassifierSpec | SequenceSpec,
                 selection: SelectionSpec | None = None, test_data=None, n_jobs: int = 1) -> EvalReport:
    """Run ``plan`` on a FeatureMatrix (discriminative) or Dataset (sequence model).

    ``test_data`` is the evaluation corpus for the cross-dataset protocol.
    """
    task = _Task(data, clf, selection)
    protocol = _describe(plan, clf, selection)
    n = len(task)
    if plan.kind == "cross-dataset":
        if test_data is None:
            raise ValueError("cross-dataset evaluation needs test_data")
        target = _Task(test_data, clf, selection)
        if len(np.unique(task.y)) < 2:
            raise SingleClassError("training corpus has a single class")
        out = _evaluate(task, np.arange(n), np.arange(len(target)), plan.seed, 0, target)
        return _finish(protocol, [out])
    if plan.kind == "resubstitution":
        if len(np.unique(task.y)) < 2 and not getattr(clf, "kind", None) == "trivial":
            raise SingleClassError("training data has a single class")
        idx = np.arange(n)
        return _finish(protocol, [_evaluate(task, idx, idx, plan.seed, 0)])
    if plan.kind == "leave-one-out":
        jobs = []
        for i in range(n):
            train = np.r_[0:i, i + 1:n]
            if len(np.unique(task.y[train])) < 2:
                raise SingleClassError(f"leaving out row {i} leaves a single-class training set")
            jobs.append((train, np.array([i]), int(stream(plan.seed, "loo", i).integers(0, 2**31 - 1)), i))
        redraws = 0
    else:
        jobs, redraws = [], 0
        for r in range(plan.n_repeats):
            train, test, seed, k = _repeat_split(task.y, plan, r)
            redraws += k
            jobs.append((train, test, seed, r))
    if redraws:
        logger.info("%d single-class training splits redrawn", redraws)
    if n_jobs == 1:
        outcomes = [_evaluate(task, *j) for j in jobs]
    else:
        outcomes = Parallel(n_jobs=n_jobs)(delayed(_evaluate)(task, *j) for j in jobs)
    return _finish(protocol, outcomes, redraws)
