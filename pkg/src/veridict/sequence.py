"""Bidirectional LSTM sequence-to-class model trained with explicit BPTT.

Each direction is a single-layer LSTM (gate order input, forget, output,
candidate). The last forward state and the last backward state (which has
seen the sequence start) are concatenated and mapped to a logistic score.
"""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Sample
from .metrics import ccc, roc_auc

logger = logging.getLogger(__name__)

LOSSES = ("MAE", "BCE", "MSE")
BCE_EPS = 1e-7


class TrainingDivergedError(RuntimeError):
    pass


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# ------------------------------------------------------------- resampling

def resample_series(values, length: int) -> np.ndarray:
    """Linear interpolation of a (T, d) array onto ``length`` evenly spaced steps."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] < 2:
        raise ValueError("need at least two frames to resample")
    if length < 2:
        raise ValueError("sequence length must be >= 2")
    src = np.linspace(0.0, 1.0, v.shape[0])
    dst = np.linspace(0.0, 1.0, length)
    return np.stack([np.interp(dst, src, v[:, j]) for j in range(v.shape[1])], axis=1)


@dataclass(frozen=True, eq=False)
class SequenceScaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, batch: np.ndarray) -> "SequenceScaler":
        flat = batch.reshape(-1, batch.shape[-1])
        std = flat.std(axis=0)
        return cls(flat.mean(axis=0), np.where(np.ptp(flat, axis=0) > 0, std, 0.0))

    def transform(self, batch):
        scale = np.where(self.std > 0, self.std, 1.0)
        return (np.asarray(batch, dtype=float) - np.where(self.std > 0, self.mean, 0.0)) / scale


def resample_sample(s: Sample, length: int, scaler: SequenceScaler | None = None) -> np.ndarray:
    if s.n_frames < 2:
        raise ValueError(f"sample {s.sample_id} has a single frame")
    out = resample_series(s.data, length)
    return scaler.transform(out) if scaler is not None else out


def dataset_to_batch(ds: Dataset, length: int) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([resample_sample(s, length) for s in ds.samples])
    return X, ds.labels


# ------------------------------------------------------------------ net

PARAM_NAMES = ("Wf", "bf", "Wb", "bb", "v", "c")


@dataclass(eq=False)
class BiLSTM:
    n_inputs: int
    hidden: int = 32
    params: dict = field(default_factory=dict)

    @classmethod
    def init(cls, n_inputs: int, hidden: int = 32, seed: int = 0) -> "BiLSTM":
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(n_inputs + hidden)
        p = {}
        for d in ("f", "b"):
            p["W" + d] = rng.normal(0.0, scale, (n_inputs + hidden, 4 * hidden))
            b = np.zeros(4 * hidden)
            b[hidden:2 * hidden] = 1.0  # forget-gate bias
            p["b" + d] = b
        p["v"] = rng.normal(0.0, 1.0 / np.sqrt(2 * hidden), 2 * hidden)
        p["c"] = np.zeros(1)
        return cls(n_inputs, hidden, p)

    def copy(self) -> "BiLSTM":
        return BiLSTM(self.n_inputs, self.hidden, {k: v.copy() for k, v in self.params.items()})

    def swapped(self) -> "BiLSTM":
        """Same net with forward and backward roles exchanged."""
        p = {k: v.copy() for k, v in self.params.items()}
        p["Wf"], p["Wb"] = p["Wb"], p["Wf"]
        p["bf"], p["bb"] = p["bb"], p["bf"]
        H = self.hidden
        p["v"] = np.r_[p["v"][H:], p["v"][:H]]
        return BiLSTM(self.n_inputs, H, p)

    # -- forward / backward over one direction
    def _run(self, X, W, b):
        n, L, _ = X.shape
        H = self.hidden
        h = np.zeros((n, H))
        c = np.zeros((n, H))
        cache = []
        for t in range(L):
            xh = np.concatenate([X[:, t], h], axis=1)
            z = xh @ W + b
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H:2 * H])
            o = _sigmoid(z[:, 2 * H:3 * H])
            g = np.tanh(z[:, 3 * H:])
            c_prev = c
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            cache.append((xh, i, f, o, g, c_prev, tc))
        return h, cache

    def _back(self, cache, dh, W):
        H = self.hidden
        dW = np.zeros_like(W)
        db = np.zeros(W.shape[1])
        dc = np.zeros_like(dh)
        for xh, i, f, o, g, c_prev, tc in reversed(cache):
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            dz = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                do * o * (1.0 - o),
                dc * i * (1.0 - g * g),
            ], axis=1)
            dW += xh.T @ dz
            db += dz.sum(axis=0)
            dh = (dz @ W.T)[:, self.n_inputs:]
            dc = dc * f
        return dW, db

    def forward(self, X, return_cache: bool = False):
        X = np.asarray(X, dtype=float)
        if X.ndim != 3 or X.shape[2] != self.n_inputs:
            raise ValueError(f"expected batch (n, L, {self.n_inputs}), got {X.shape}")
        p = self.params
        hf, cf = self._run(X, p["Wf"], p["bf"])
        hb, cb = self._run(X[:, ::-1], p["Wb"], p["bb"])
        feat = np.concatenate([hf, hb], axis=1)
        scores = _sigmoid(feat @ p["v"] + p["c"][0])
        if return_cache:
            return scores, (cf, cb, feat)
        return scores

    def gradients(self, X, y, kind: str) -> tuple[float, dict]:
        scores, (cf, cb, feat) = self.forward(X, return_cache=True)
        value, dscore = loss(kind, scores, y, with_grad=True)
        dlogit = dscore * scores * (1.0 - scores)
        p = self.params
        H = self.hidden
        grads = {"v": feat.T @ dlogit, "c": np.array([dlogit.sum()])}
        dfeat = np.outer(dlogit, p["v"])
        grads["Wf"], grads["bf"] = self._back(cf, dfeat[:, :H], p["Wf"])
        grads["Wb"], grads["bb"] = self._back(cb, dfeat[:, H:], p["Wb"])
        return value, grads


def loss(kind: str, scores, labels, with_grad: bool = False):
    """MAE, BCE or MSE between scores in (0, 1) and 0/1 labels (batch mean)."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    n = s.size
    if kind == "MAE":
        value = np.mean(np.abs(s - y))
        grad = np.sign(s - y) / n
    elif kind == "MSE":
        value = np.mean((s - y) ** 2)
        grad = 2.0 * (s - y) / n
    elif kind == "BCE":
        sc = np.clip(s, BCE_EPS, 1.0 - BCE_EPS)
        value = -np.mean(y * np.log(sc) + (1.0 - y) * np.log(1.0 - sc))
        inside = (s > BCE_EPS) & (s < 1.0 - BCE_EPS)
        grad = np.where(inside, (sc - y) / (sc * (1.0 - sc)), 0.0) / n
    else:
        raise ValueError(f"unknown loss kind {kind!r}; choose from {LOSSES}")
    return (float(value), grad) if with_grad else float(value)


# --------------------------------------------------------------- training

@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_accuracy: float
    val_ccc: float


@dataclass
class TrainResult:
    net: BiLSTM
    curve: list[EpochRecord]
    scaler: SequenceScaler | None = None

    def predict_score(self, X) -> np.ndarray:
        X = self.scaler.transform(X) if self.scaler is not None else X
        return self.net.forward(X)


def train(net: BiLSTM, X, y, loss_kind: str = "MAE", lr: float = 0.05, momentum: float = 0.9,
          epochs: int = 100, seed: int = 0, X_val=None, y_val=None) -> TrainResult:
    """Full-batch gradient descent with momentum.

    ``seed`` only matters for ``net`` construction, which callers do via
    :meth:`BiLSTM.init`; the update itself is deterministic.
    """
    if loss_kind not in LOSSES:
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise ValueError("training data needs both classes")
    net = net.copy()
    vel = {k: np.zeros_like(v) for k, v in net.params.items()}
    curve = []
    for epoch in range(1, epochs + 1):
        value, grads = net.gradients(X, y, loss_kind)
        if not np.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch} (lr={lr})")
        for k in PARAM_NAMES:
            vel[k] = momentum * vel[k] - lr * grads[k]
            net.params[k] += vel[k]
        if X_val is not None:
            s = net.forward(X_val)
            acc = float(np.mean((s > 0.5) == (np.asarray(y_val) == 1)))
            try:
                agree = ccc(s, y_val)
            except ValueError:
                agree = float("nan")
        else:
            acc = agree = float("nan")
        curve.append(EpochRecord(epoch, value, acc, agree))
    return TrainResult(net, curve)


@dataclass(frozen=True)
class SequenceSpec:
    length: int = 200
    hidden: int = 32
    loss_kind: str = "MAE"
    lr: float = 0.05
    momentum: float = 0.9
    epochs: int = 100

    def fit(self, X, y, seed: int = 0) -> TrainResult:
        X = np.asarray(X, dtype=float)
        scaler = SequenceScaler.fit(X)
        net = BiLSTM.init(X.shape[2], self.hidden, seed)
        res = train(net, scaler.transform(X), y, self.loss_kind, self.lr, self.momentum, self.epochs, seed)
        res.scaler = scaler
        return res


def compare_losses(X_train, y_train, X_val, y_val, hidden: int = 32, lr: float = 0.05,
                   momentum: float = 0.9, epochs: int = 100, seed: int = 0,
                   kinds=LOSSES) -> dict[str, TrainResult]:
    """Train one net per loss kind from identical initial weights."""
    scaler = SequenceScaler.fit(np.asarray(X_train, dtype=float))
    Xt, Xv = scaler.transform(X_train), scaler.transform(X_val)
    net = BiLSTM.init(Xt.shape[2], hidden, seed)
    out = {}
    for kind in kinds:
        res = train(net, Xt, y_train, kind, lr, momentum, epochs, seed, Xv, y_val)
        res.scaler = scaler
        out[kind] = res
    return out


def write_curves(results: dict[str, TrainResult], path: str | os.PathLike):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("loss", "epoch", "train_loss", "val_accuracy", "val_ccc"))
        for kind, res in results.items():
            for r in res.curve:
                w.writerow((kind, r.epoch, repr(r.train_loss), repr(r.val_accuracy), repr(r.val_ccc)))


def validation_auc(res: TrainResult, X_val, y_val) -> float:
    return roc_auc(res.predict_score(X_val), y_val).auc
