"""Domain types, on-disk ingestion and a seeded synthetic generator.

A sample is stored as a dense ``(n_frames, n_base_features)`` float array whose
column order is given by :class:`FeatureSchema`. Gaze angles are kept in
radians and head-pose angles in degrees; unit conversion happens only while
reading or writing files.
"""
from __future__ import annotations

import csv
import enum
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

logger = logging.getLogger(__name__)

EMOTIONS = ("neutral", "happy", "sad", "surprise", "fear", "disgust", "anger", "contempt")
DEFAULT_AUS = ("AU06", "AU10", "AU12", "AU14", "AU17")
GAZE_FEATURES = ("gaze_yaw", "gaze_pitch")
POSE_FEATURES = ("head_yaw", "head_pitch", "head_roll")
MODALITIES = ("gaze", "au", "pose", "emotion")

MANIFEST_NAME = "manifest.jsonl"
PROB_TOL = 1e-6
AU_MAX = 5.0
MAX_DROP_FRACTION = 0.5


class DataValidationError(ValueError):
    """Input data violates the on-disk format or a domain invariant."""


class Label(str, enum.Enum):
    TRUTH = "truth"
    DECEPTION = "deception"

    @classmethod
    def parse(cls, value: str | "Label") -> "Label":
        if isinstance(value, Label):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DataValidationError(f"unknown label {value!r}") from None

    def as_int(self) -> int:
        """Deception is the positive class."""
        return 1 if self is Label.DECEPTION else 0


def labels_to_int(labels: Iterable[Label | str]) -> np.ndarray:
    return np.array([Label.parse(v).as_int() for v in labels], dtype=np.int64)


@dataclass(frozen=True)
class FeatureSchema:
    """Per-frame column layout and the units used in feature files."""

    au_names: tuple[str, ...] = DEFAULT_AUS
    gaze_unit: str = "rad"
    pose_unit: str = "deg"

    def __post_init__(self):
        object.__setattr__(self, "au_names", tuple(self.au_names))
        if len(set(self.au_names)) != len(self.au_names):
            raise ValueError("duplicate AU names in schema")
        if self.gaze_unit not in ("rad", "deg") or self.pose_unit not in ("rad", "deg"):
            raise ValueError("units must be 'rad' or 'deg'")

    @property
    def emotion_columns(self) -> tuple[str, ...]:
        return tuple(f"p_{e}" for e in EMOTIONS)

    @property
    def base_features(self) -> tuple[str, ...]:
        return (GAZE_FEATURES + POSE_FEATURES + self.au_names
                + self.emotion_columns + ("valence", "arousal"))

    @property
    def n_base(self) -> int:
        return len(self.base_features)

    def modality_of(self, name: str) -> str:
        if name in GAZE_FEATURES:
            return "gaze"
        if name in POSE_FEATURES:
            return "pose"
        if name in self.au_names:
            return "au"
        if name in self.emotion_columns or name in ("valence", "arousal"):
            return "emotion"
        raise KeyError(name)

    def index(self, name: str) -> int:
        return self.base_features.index(name)

    def _slices(self):
        n_au = len(self.au_names)
        au = slice(5, 5 + n_au)
        probs = slice(au.stop, au.stop + len(EMOTIONS))
        return au, probs, probs.stop, probs.stop + 1

    def valid_rows(self, data: np.ndarray) -> np.ndarray:
        """Boolean mask of frames that satisfy every per-frame invariant."""
        data = np.asarray(data, dtype=float)
        au, probs, i_val, i_aro = self._slices()
        with np.errstate(invalid="ignore"):
            ok = np.all(np.isfinite(data), axis=1)
            p = data[:, probs]
            ok &= np.all(p >= 0.0, axis=1)
            ok &= np.abs(p.sum(axis=1) - 1.0) <= PROB_TOL
            a = data[:, au]
            ok &= np.all((a >= 0.0) & (a <= AU_MAX), axis=1)
            for i in (i_val, i_aro):
                ok &= (data[:, i] >= -1.0) & (data[:, i] <= 1.0)
        return ok

    def to_internal(self, data: np.ndarray) -> np.ndarray:
        out = np.array(data, dtype=float)
        if self.gaze_unit == "deg":
            out[:, 0:2] = np.deg2rad(out[:, 0:2])
        if self.pose_unit == "rad":
            out[:, 2:5] = np.rad2deg(out[:, 2:5])
        return out

    def to_file_units(self, data: np.ndarray) -> np.ndarray:
        out = np.array(data, dtype=float)
        if self.gaze_unit == "deg":
            out[:, 0:2] = np.rad2deg(out[:, 0:2])
        if self.pose_unit == "rad":
            out[:, 2:5] = np.deg2rad(out[:, 2:5])
        return out


@dataclass(frozen=True)
class FrameFeatures:
    gaze_yaw: float
    gaze_pitch: float
    head_yaw: float
    head_pitch: float
    head_roll: float
    au_intensities: Mapping[str, float]
    emotion_probs: tuple[float, ...]
    valence: float
    arousal: float

    def __post_init__(self):
        probs = tuple(float(p) for p in self.emotion_probs)
        object.__setattr__(self, "emotion_probs", probs)
        object.__setattr__(self, "au_intensities", dict(self.au_intensities))
        if len(probs) != len(EMOTIONS):
            raise ValueError(f"expected {len(EMOTIONS)} emotion probabilities")
        if min(probs) < 0 or abs(sum(probs) - 1.0) > PROB_TOL:
            raise ValueError("emotion probabilities must be non-negative and sum to 1")
        for v in (self.valence, self.arousal):
            if not -1.0 <= v <= 1.0:
                raise ValueError("valence/arousal outside [-1, 1]")
        for k, v in self.au_intensities.items():
            if not 0.0 <= v <= AU_MAX:
                raise ValueError(f"{k} intensity {v} outside [0, {AU_MAX}]")

    def to_vector(self, schema: FeatureSchema) -> np.ndarray:
        if set(self.au_intensities) != set(schema.au_names):
            raise ValueError("AU keys do not match the schema")
        return np.array(
            [self.gaze_yaw, self.gaze_pitch, self.head_yaw, self.head_pitch, self.head_roll]
            + [self.au_intensities[a] for a in schema.au_names]
            + list(self.emotion_probs) + [self.valence, self.arousal],
            dtype=float,
        )

    @classmethod
    def from_vector(cls, v: Sequence[float], schema: FeatureSchema) -> "FrameFeatures":
        au, probs, i_val, i_aro = schema._slices()
        v = [float(x) for x in v]
        return cls(*v[0:5], dict(zip(schema.au_names, v[au])), tuple(v[probs]), v[i_val], v[i_aro])


@dataclass(frozen=True, eq=False)
class Sample:
    """A labelled per-frame feature time series."""

    sample_id: str
    subject_id: str
    dataset_id: str
    label: Label
    data: np.ndarray
    fps: float = 30.0
    schema: FeatureSchema = field(default_factory=FeatureSchema)

    def __post_init__(self):
        object.__setattr__(self, "label", Label.parse(self.label))
        arr = np.array(self.data, dtype=float)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise DataValidationError(f"sample {self.sample_id}: frames must be non-empty")
        if arr.shape[1] != self.schema.n_base:
            raise DataValidationError(
                f"sample {self.sample_id}: {arr.shape[1]} columns, schema has {self.schema.n_base}")
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise DataValidationError(f"sample {self.sample_id}: fps must be > 0")
        if not self.schema.valid_rows(arr).all():
            raise DataValidationError(f"sample {self.sample_id}: frame violates feature invariants")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_frames(cls, sample_id, subject_id, dataset_id, label, frames: Sequence[FrameFeatures],
                    fps=30.0, schema: FeatureSchema | None = None) -> "Sample":
        schema = schema or FeatureSchema()
        data = np.array([f.to_vector(schema) for f in frames], dtype=float)
        return cls(sample_id, subject_id, dataset_id, label, data, fps, schema)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> list[FrameFeatures]:
        return [FrameFeatures.from_vector(row, self.schema) for row in self.data]

    def series(self, name: str) -> np.ndarray:
        return self.data[:, self.schema.index(name)]

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (self.sample_id == other.sample_id and self.subject_id == other.subject_id
                and self.dataset_id == other.dataset_id and self.label == other.label
                and self.fps == other.fps and self.schema == other.schema
                and np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True)
class SampleDiagnostic:
    sample_id: str
    n_rows: int
    n_dropped: int
    rejected: bool = False

    @property
    def drop_fraction(self) -> float:
        return self.n_dropped / self.n_rows if self.n_rows else 1.0


@dataclass(frozen=True)
class Dataset:
    dataset_id: str
    samples: tuple[Sample, ...]
    diagnostics: tuple[SampleDiagnostic, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        object.__setattr__(self, "diagnostics", tuple(self.diagnostics))
        ids = [s.sample_id for s in self.samples]
        if len(set(ids)) != len(ids):
            raise DataValidationError(f"dataset {self.dataset_id}: duplicate sample ids")
        au_sets = {s.schema.au_names for s in self.samples}
        if len(au_sets) > 1:
            raise DataValidationError(f"dataset {self.dataset_id}: inconsistent AU sets")

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.dataset_id == other.dataset_id and self.samples == other.samples

    __hash__ = None

    @property
    def schema(self) -> FeatureSchema:
        return self.samples[0].schema if self.samples else FeatureSchema()

    @property
    def labels(self) -> np.ndarray:
        return labels_to_int(s.label for s in self.samples)

    def require_both_labels(self):
        present = set(s.label for s in self.samples)
        if present != {Label.TRUTH, Label.DECEPTION}:
            raise DataValidationError(
                f"dataset {self.dataset_id}: training needs both labels, found {sorted(p.value for p in present)}")

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(self.dataset_id, tuple(self.samples[i] for i in indices))


# ---------------------------------------------------------------- ingestion

def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def _read_feature_csv(path: Path, schema: FeatureSchema) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataValidationError(f"{path}: empty feature file") from None
        missing = [c for c in schema.base_features if c not in header]
        if missing:
            raise DataValidationError(f"{path}: missing columns {missing}")
        cols = [header.index(c) for c in schema.base_features]
        rows = []
        for line in reader:
            if not line:
                continue
            if len(line) != len(header):
                rows.append([math.nan] * len(cols))
                continue
            rows.append([_parse_float(line[i]) for i in cols])
    if not rows:
        return np.empty((0, schema.n_base))
    return schema.to_internal(np.array(rows, dtype=float))


def _load_entry(root: Path, entry: dict, dataset_id: str, schema: FeatureSchema):
    for key in ("sample_id", "label", "file"):
        if key not in entry:
            raise DataValidationError(f"manifest entry missing {key!r}: {entry}")
    sid = str(entry["sample_id"])
    label = Label.parse(entry["label"])
    fps = float(entry.get("fps", 30.0))
    raw = _read_feature_csv(root / entry["file"], schema)
    keep = schema.valid_rows(raw) if len(raw) else np.zeros(0, dtype=bool)
    diag = SampleDiagnostic(sid, len(raw), int(len(raw) - keep.sum()))
    if len(raw) == 0 or diag.drop_fraction > MAX_DROP_FRACTION:
        logger.warning("rejecting sample %s: %d of %d frames invalid", sid, diag.n_dropped, diag.n_rows)
        return None, SampleDiagnostic(sid, diag.n_rows, diag.n_dropped, rejected=True)
    sample = Sample(sid, str(entry.get("subject_id", sid)), dataset_id, label,
                    raw[keep], fps, schema)
    return sample, diag


def load_dataset(path: str | os.PathLike, schema: FeatureSchema | None = None,
                 max_workers: int | None = None) -> Dataset:
    """Read a directory holding ``manifest.jsonl`` plus one CSV per sample.

    Frames with non-finite or out-of-range values are dropped in place (order
    of the survivors is kept); a sample losing more than half of its frames is
    rejected and reported in ``Dataset.diagnostics``.
    """
    schema = schema or FeatureSchema()
    root = Path(path)
    manifest = root / MANIFEST_NAME
    if not manifest.is_file():
        raise DataValidationError(f"missing manifest {manifest}")
    entries = []
    with open(manifest, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    entries.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise DataValidationError(f"{manifest}:{lineno}: {exc}") from None
    dataset_ids = {e.get("dataset_id") for e in entries} - {None}
    dataset_id = dataset_ids.pop() if len(dataset_ids) == 1 else root.name
    for e in entries:
        Label.parse(e.get("label"))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(lambda e: _load_entry(root, e, dataset_id, schema), entries))
    results.sort(key=lambda r: r[1].sample_id)
    samples = tuple(s for s, _ in results if s is not None)
    if not samples:
        raise DataValidationError(f"{root}: dataset is empty")
    return Dataset(dataset_id, samples, tuple(d for _, d in results))


def save_dataset(ds: Dataset, path: str | os.PathLike) -> Path:
    """Write ``ds`` in the on-disk format read by :func:`load_dataset`."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    lines = []
    for s in ds.samples:
        fname = f"{s.sample_id}.csv"
        with open(root / fname, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("frame",) + s.schema.base_features)
            for i, row in enumerate(s.schema.to_file_units(s.data)):
                w.writerow([i] + [repr(float(v)) for v in row])
        lines.append(json.dumps({"sample_id": s.sample_id, "subject_id": s.subject_id,
                                 "dataset_id": s.dataset_id, "label": s.label.value,
                                 "fps": s.fps, "file": fname}))
    (root / MANIFEST_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return root


# ------------------------------------------------------------ manual table

@dataclass(frozen=True, eq=False)
class ManualFeatureTable:
    """Hand-annotated per-sample cues (one row per sample)."""

    sample_ids: tuple[str, ...]
    labels: tuple[Label, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray

    @classmethod
    def read_csv(cls, path: str | os.PathLike) -> "ManualFeatureTable":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            names = tuple(n for n in reader.fieldnames or () if n not in ("sample_id", "label"))
            if "label" not in (reader.fieldnames or ()):
                raise DataValidationError(f"{path}: no 'label' column")
            ids, labels, rows = [], [], []
            for i, rec in enumerate(reader):
                ids.append(rec.get("sample_id") or f"row{i}")
                labels.append(Label.parse(rec["label"]))
                rows.append([_parse_float(rec[n]) for n in names])
        values = np.array(rows, dtype=float).reshape(len(rows), len(names))
        if not np.all(np.isfinite(values)):
            raise DataValidationError(f"{path}: non-finite manual feature value")
        return cls(tuple(ids), tuple(labels), names, values)


# -------------------------------------------------------------- synthetic

@dataclass(frozen=True)
class SynthConfig:
    """Shape of a synthetic dataset.

    Deceptive samples get their per-sample head-yaw mean shifted by
    ``effect_deg`` and their arousal noise variance multiplied by
    ``arousal_var_factor``.
    """

    n_samples: int = 200
    n_frames: int = 100
    deception_fraction: float = 0.5
    effect_deg: float = 15.0
    arousal_var_factor: float = 1.5
    fps: float = 30.0
    dataset_id: str = "synthetic"
    au_names: tuple[str, ...] = DEFAULT_AUS

    def __post_init__(self):
        if self.n_samples <= 0 or self.n_frames <= 0:
            raise ValueError("n_samples and n_frames must be positive")
        if not 0.0 <= self.deception_fraction <= 1.0:
            raise ValueError("deception_fraction must lie in [0, 1]")
        if self.arousal_var_factor <= 0 or self.fps <= 0:
            raise ValueError("arousal_var_factor and fps must be positive")


def _ar1(noise: np.ndarray, rho: float) -> np.ndarray:
    # unit-variance AR(1) along the frame axis
    return lfilter([math.sqrt(1 - rho * rho)], [1.0, -rho], noise, axis=1)


def generate_synthetic(config: SynthConfig, seed: int) -> Dataset:
    schema = FeatureSchema(au_names=config.au_names)
    rng = np.random.default_rng(seed)
    n, t = config.n_samples, config.n_frames
    n_dec = int(round(n * config.deception_fraction))
    is_dec = np.zeros(n, dtype=bool)
    is_dec[rng.permutation(n)[:n_dec]] = True

    def channel(mean, sd, rho=0.9):
        return mean[:, None] + sd * _ar1(rng.standard_normal((n, t)), rho)

    yaw_mean = rng.normal(0.0, 8.0, n) + np.where(is_dec, config.effect_deg, 0.0)
    gaze_yaw = channel(rng.normal(0.0, 0.15, n), 0.05)
    gaze_pitch = channel(rng.normal(-0.05, 0.1, n), 0.04)
    head_yaw = channel(yaw_mean, 4.0)
    head_pitch = channel(rng.normal(0.0, 5.0, n), 3.0)
    head_roll = channel(rng.normal(0.0, 3.0, n), 2.0)
    n_au = len(schema.au_names)
    au = np.empty((n, t, 0))
    if n_au:
        au = np.stack([channel(rng.uniform(0.2, 1.5, n), 0.3) for _ in range(n_au)], axis=2)
    au = np.clip(au, 0.0, AU_MAX)
    logits = np.stack([channel(rng.normal(0.0, 1.0, n), 0.5) for _ in EMOTIONS], axis=2)
    logits -= logits.max(axis=2, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=2, keepdims=True)
    valence = np.clip(channel(rng.uniform(-0.5, 0.3, n), 0.15), -1.0, 1.0)
    arousal_sd = 0.15 * np.where(is_dec, math.sqrt(config.arousal_var_factor), 1.0)
    arousal = rng.uniform(0.0, 0.5, n)[:, None] + arousal_sd[:, None] * _ar1(
        rng.standard_normal((n, t)), 0.9)
    arousal = np.clip(arousal, -1.0, 1.0)

    data = np.concatenate(
        [np.stack([gaze_yaw, gaze_pitch, head_yaw, head_pitch, head_roll], axis=2), au, probs,
         valence[:, :, None], arousal[:, :, None]], axis=2)
    width = len(str(n - 1))
    samples = tuple(
        Sample(f"s{i:0{width}d}", f"subj{i:0{width}d}", config.dataset_id,
               Label.DECEPTION if is_dec[i] else Label.TRUTH, data[i], config.fps, schema)
        for i in range(n))
    return Dataset(config.dataset_id, samples)
