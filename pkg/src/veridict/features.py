"""Per-sample statistical features and the feature matrix they form."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset, DataValidationError, Label, ManualFeatureTable, MODALITIES, labels_to_int

STATS = ("mean", "std", "min", "max", "median", "skewness", "kurtosis")


def check_stats(stats: Sequence[str]) -> tuple[str, ...]:
    stats = tuple(stats)
    if not stats:
        raise ValueError("stat set must be non-empty")
    unknown = [s for s in stats if s not in STATS]
    if unknown:
        raise ValueError(f"unknown statistics {unknown}; choose from {STATS}")
    return stats


def summarize_series(x, stats: Sequence[str] = STATS) -> dict[str, float]:
    """Summary statistics of one series.

    ``std`` uses the n-1 denominator (0 for a single value). Skewness is the
    Fisher-Pearson coefficient and kurtosis is excess kurtosis, both from
    population moments and both 0 for a constant series.
    """
    stats = check_stats(stats)
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot summarise an empty series")
    out = {}
    mean = x.mean()
    constant = np.ptp(x) == 0
    d = x - mean
    m2 = np.mean(d * d)
    for s in stats:
        if s == "mean":
            out[s] = float(mean)
        elif s == "std":
            out[s] = 0.0 if x.size == 1 or constant else float(np.std(x, ddof=1))
        elif s == "min":
            out[s] = float(x.min())
        elif s == "max":
            out[s] = float(x.max())
        elif s == "median":
            out[s] = float(np.median(x))
        elif s == "skewness":
            out[s] = 0.0 if constant else float(np.mean(d ** 3) / m2 ** 1.5)
        elif s == "kurtosis":
            out[s] = 0.0 if constant else float(np.mean(d ** 4) / (m2 * m2) - 3.0)
    return out


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    feature_names: tuple[str, ...]
    labels: np.ndarray  # 1 = deception
    sample_ids: tuple[str, ...]
    dataset_ids: tuple[str, ...]
    modalities: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("values must be 2-D")
        names = tuple(self.feature_names)
        if v.shape[1] != len(names) or len(set(names)) != len(names):
            raise ValueError("feature names must be unique and match the column count")
        if not np.all(np.isfinite(v)):
            raise DataValidationError("feature matrix contains non-finite values")
        y = np.asarray(self.labels, dtype=np.int64)
        if y.shape != (v.shape[0],) or len(self.sample_ids) != v.shape[0]:
            raise ValueError("labels/sample_ids must have one entry per row")
        mods = tuple(self.modalities) or ("other",) * len(names)
        if len(mods) != len(names):
            raise ValueError("one modality tag per column")
        v.flags.writeable = False
        y = y.copy()
        y.flags.writeable = False
        for k, val in (("values", v), ("labels", y), ("feature_names", names),
                       ("modalities", mods), ("sample_ids", tuple(self.sample_ids)),
                       ("dataset_ids", tuple(self.dataset_ids))):
            object.__setattr__(self, k, val)

    @property
    def shape(self):
        return self.values.shape

    def rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, values=self.values[idx], labels=self.labels[idx],
                       sample_ids=tuple(self.sample_ids[i] for i in idx),
                       dataset_ids=tuple(self.dataset_ids[i] for i in idx))

    def columns(self, names: Iterable[str]) -> "FeatureMatrix":
        names = list(names)
        pos = {n: i for i, n in enumerate(self.feature_names)}
        missing = [n for n in names if n not in pos]
        if missing:
            raise KeyError(f"unknown features {missing}")
        idx = [pos[n] for n in names]
        return replace(self, values=self.values[:, idx], feature_names=tuple(names),
                       modalities=tuple(self.modalities[i] for i in idx))

    def with_values(self, values) -> "FeatureMatrix":
        return replace(self, values=values)

    def filter_modalities(self, groups: Iterable[str]) -> "FeatureMatrix":
        groups = set(groups)
        bad = groups - set(MODALITIES)
        if bad:
            raise ValueError(f"unknown modality groups {sorted(bad)}")
        keep = [n for n, m in zip(self.feature_names, self.modalities) if m in groups]
        if not keep:
            raise ValueError(f"no columns for modalities {sorted(groups)}")
        return self.columns(keep)

    def write_csv(self, path: str | os.PathLike):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("sample_id", "dataset_id", "label") + self.feature_names)
            for i in range(self.shape[0]):
                lab = Label.DECEPTION.value if self.labels[i] else Label.TRUTH.value
                w.writerow([self.sample_ids[i], self.dataset_ids[i], lab]
                           + [repr(float(v)) for v in self.values[i]])

    @classmethod
    def read_csv(cls, path: str | os.PathLike, modalities: dict[str, str] | None = None) -> "FeatureMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            names = tuple(header[3:])
            ids, dids, labels, rows = [], [], [], []
            for rec in reader:
                ids.append(rec[0])
                dids.append(rec[1])
                labels.append(rec[2])
                rows.append([float(v) for v in rec[3:]])
        mods = tuple((modalities or {}).get(n, _guess_modality(n)) for n in names)
        return cls(np.array(rows, dtype=float).reshape(len(rows), len(names)), names,
                   labels_to_int(labels), tuple(ids), tuple(dids), mods)


def _guess_modality(feature_name: str) -> str:
    base = feature_name.rsplit("_", 1)[0]
    if base.startswith("gaze_"):
        return "gaze"
    if base.startswith("head_"):
        return "pose"
    if base.startswith("AU"):
        return "au"
    if base.startswith("p_") or base in ("valence", "arousal"):
        return "emotion"
    return "other"


def build_feature_matrix(ds: Dataset, stats: Sequence[str] = STATS) -> FeatureMatrix:
    """One row per sample; columns ordered base feature first, then statistic."""
    stats = check_stats(stats)
    if not ds.samples:
        raise DataValidationError("dataset has no samples")
    schema = ds.schema
    if any(s.schema.au_names != schema.au_names for s in ds.samples):
        raise DataValidationError("inconsistent AU sets across samples")
    names, mods = [], []
    for base in schema.base_features:
        for st in stats:
            names.append(f"{base}_{st}")
            mods.append(schema.modality_of(base))
    values = np.empty((len(ds), len(names)))
    for i, s in enumerate(ds.samples):
        row = []
        for j in range(schema.n_base):
            summary = summarize_series(s.data[:, j], stats)
            row.extend(summary[st] for st in stats)
        values[i] = row
    return FeatureMatrix(values, tuple(names), ds.labels, tuple(s.sample_id for s in ds.samples),
                         tuple(s.dataset_id for s in ds.samples), tuple(mods))


def manual_feature_matrix(table: ManualFeatureTable, dataset_id: str = "manual") -> FeatureMatrix:
    return FeatureMatrix(table.values, table.feature_names, labels_to_int(table.labels),
                         table.sample_ids, (dataset_id,) * len(table.sample_ids))


@dataclass(frozen=True, eq=False)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        scale = np.where(self.std > 0, self.std, 1.0)
        shift = np.where(self.std > 0, self.mean, 0.0)
        return (v - shift) / scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))

    @classmethod
    def fit(cls, values) -> "Scaler":
        v = np.asarray(values, dtype=float)
        if v.shape[0] == 0:
            raise ValueError("cannot fit a scaler on zero rows")
        std = v.std(axis=0)
        # columns that are constant up to rounding are left untouched
        std = np.where(np.ptp(v, axis=0) > 0, std, 0.0)
        return cls(v.mean(axis=0), std)


def standardize(fm: FeatureMatrix, reference=None) -> tuple[FeatureMatrix, Scaler]:
    """Z-score every column with the mean/std of the ``reference`` rows (all rows by default)."""
    ref = np.arange(fm.shape[0]) if reference is None else np.asarray(reference, dtype=np.int64)
    if ref.size == 0:
        raise ValueError("reference rows must be non-empty")
    scaler = Scaler.fit(fm.values[ref])
    return fm.with_values(scaler.transform(fm.values)), scaler
