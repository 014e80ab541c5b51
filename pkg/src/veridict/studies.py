"""Descriptive studies: per-label feature distributions, per-sample timelines, AU correlation."""
from __future__ import annotations

import csv
import os
from typing import Sequence

import numpy as np

from .data import Dataset, Label, Sample
from .metrics import LinearFit, correlate

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def feature_distributions(ds: Dataset) -> list[dict]:
    """Quantiles of the per-sample mean of every base feature, split by label."""
    schema = ds.schema
    means = np.stack([s.data.mean(axis=0) for s in ds.samples])
    labels = ds.labels
    rows = []
    for j, name in enumerate(schema.base_features):
        for lab in (Label.TRUTH, Label.DECEPTION):
            v = means[labels == lab.as_int(), j]
            row = {"dataset": ds.dataset_id, "feature": name, "modality": schema.modality_of(name),
                   "label": lab.value, "n": int(v.size)}
            if v.size:
                row["mean"] = float(v.mean())
                row["std"] = float(v.std())
                row.update({f"q{int(q * 100):02d}": float(x) for q, x in zip(QUANTILES, np.quantile(v, QUANTILES))})
            rows.append(row)
    return rows


def feature_timeline(s: Sample, features: Sequence[str] | None = None) -> list[dict]:
    names = list(features) if features else list(s.schema.base_features)
    cols = [s.schema.index(n) for n in names]
    return [{"frame": i, "time_s": i / s.fps, **{n: float(s.data[i, c]) for n, c in zip(names, cols)}}
            for i in range(s.n_frames)]


def frame_correlation(ds: Dataset, x: str = "AU12", y: str = "AU06") -> LinearFit:
    """Pearson r and regression line between two per-frame features pooled over all samples."""
    xs = np.concatenate([s.series(x) for s in ds.samples])
    ys = np.concatenate([s.series(y) for s in ds.samples])
    return correlate(xs, ys)


def write_rows(rows: list[dict], path: str | os.PathLike):
    keys: list[str] = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
