"""Binary classification metrics (deception = positive) and agreement statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def matrix(self) -> np.ndarray:
        """Rows are actual (truth, deception), columns predicted (truth, deception)."""
        return np.array([[self.tn, self.fp], [self.fn, self.tp]])

    @property
    def accuracy(self) -> float:
        if self.n == 0:
            raise ValueError("empty confusion matrix")
        return (self.tp + self.tn) / self.n

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        # precision + recall == 0 (no true positives) is reported as 0, not NaN
        d = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / d if self.tp else 0.0

    @property
    def mcc(self) -> float:
        marg = [(self.tp + self.fp), (self.tp + self.fn), (self.tn + self.fp), (self.tn + self.fn)]
        if 0 in marg:
            return 0.0
        return (self.tp * self.tn - self.fp * self.fn) / math.sqrt(math.prod(float(m) for m in marg))

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(labels, preds) -> Confusion:
    y = np.asarray(labels, dtype=np.int64)
    p = np.asarray(preds, dtype=np.int64)
    if y.shape != p.shape:
        raise ValueError("labels and predictions differ in length")
    if y.size == 0:
        raise ValueError("empty input")
    if not (np.isin(y, (0, 1)).all() and np.isin(p, (0, 1)).all()):
        raise ValueError("labels and predictions must be 0/1")
    return Confusion(int(np.sum((y == 1) & (p == 1))), int(np.sum((y == 0) & (p == 1))),
                     int(np.sum((y == 1) & (p == 0))), int(np.sum((y == 0) & (p == 0))))


def accuracy(c: Confusion) -> float:
    return c.accuracy


def f1(c: Confusion) -> float:
    return c.f1


def mcc(c: Confusion) -> float:
    return c.mcc


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


def roc_auc(scores, labels) -> RocCurve:
    """ROC points from a sweep over the unique scores and the trapezoidal AUC.

    A row is called positive when its score is >= the threshold; the first
    point (threshold +inf) is (0, 0) and the last is (1, 1).
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    last_of_group = np.r_[np.nonzero(np.diff(s_sorted))[0], len(s) - 1]
    tp = np.cumsum(y_sorted)[last_of_group]
    fp = (last_of_group + 1) - tp
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thr = np.r_[np.inf, s_sorted[last_of_group]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thr, auc)


def mann_whitney_auc(scores, labels) -> float:
    """P(random positive outscores random negative), ties counting one half, via mid-ranks."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    r = rankdata(s)
    u = r[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def ccc(x, y) -> float:
    """Concordance correlation coefficient with population moments."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("ccc needs two equal-length series of length >= 2")
    n = x.size
    mx, my = x.mean(), y.mean()
    # sums rather than means: one division, so small integer cases come out exact
    dx, dy = x - mx, y - my
    sxx, syy = dx @ dx, dy @ dy
    denom = sxx + syy + n * (mx - my) ** 2
    if denom == 0:
        return 1.0
    if sxx == 0 and syy == 0:
        return 0.0
    return float(2.0 * (dx @ dy) / denom)


@dataclass(frozen=True)
class LinearFit:
    r: float
    slope: float
    intercept: float
    n: int


def correlate(x, y) -> LinearFit:
    """Pearson r and the least-squares line y = slope * x + intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("correlate needs two equal-length series of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    if sxx == 0:
        raise ValueError("x is constant")
    syy = dy @ dy
    slope = (dx @ dy) / sxx
    r = 0.0 if syy == 0 else float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    return LinearFit(r, float(slope), float(y.mean() - slope * x.mean()), int(x.size))
