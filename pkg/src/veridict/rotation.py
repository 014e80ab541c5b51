"""SO(3) helpers for 6D head-pose outputs.

Euler angles use the intrinsic Z-Y-X (yaw-pitch-roll) convention in degrees:
``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ORTHO_TOL = 1e-9
DEGENERATE_TOL = 1e-12
GIMBAL_TOL = 1e-6


class DegenerateRotationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Rotation:
    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ValueError("rotation must be a finite 3x3 matrix")
        if np.max(np.abs(m.T @ m - np.eye(3))) > ORTHO_TOL or abs(np.linalg.det(m) - 1.0) > ORTHO_TOL:
            raise ValueError("matrix is not a proper rotation")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class EulerYPR:
    yaw: float
    pitch: float
    roll: float


def _wrap180(angle):
    """Wrap degrees into (-180, 180]."""
    a = np.mod(np.asarray(angle, dtype=float) + 180.0, 360.0) - 180.0
    a = np.where(a == -180.0, 180.0, a)
    return a if a.ndim else float(a)


def sixd_to_rotation(a1: Sequence[float], a2: Sequence[float]) -> Rotation:
    """Gram-Schmidt a 6D vector into a rotation whose first two columns span (a1, a2)."""
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    if a1.shape != (3,) or a2.shape != (3,) or not (np.all(np.isfinite(a1)) and np.all(np.isfinite(a2))):
        raise DegenerateRotationError("6D input must be two finite 3-vectors")
    n1 = np.linalg.norm(a1)
    if n1 < DEGENERATE_TOL:
        raise DegenerateRotationError("first 6D column is zero")
    b1 = a1 / n1
    u = a2 - (b1 @ a2) * b1
    nu = np.linalg.norm(u)
    if nu < DEGENERATE_TOL * max(1.0, np.linalg.norm(a2)):
        raise DegenerateRotationError("6D columns are parallel or second column is zero")
    b2 = u / nu
    # one re-orthogonalisation pass keeps |b1.b2| at machine precision
    b2 = b2 - (b1 @ b2) * b1
    b2 /= np.linalg.norm(b2)
    b3 = np.cross(b1, b2)
    return Rotation(np.column_stack([b1, b2, b3]))


def geodesic_distance(r1: Rotation, r2: Rotation) -> float:
    """Angle in radians of the relative rotation, in [0, pi]."""
    cos = (np.trace(r1.m.T @ r2.m) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def euler_to_rotation(e: EulerYPR) -> Rotation:
    y, p, r = np.deg2rad([e.yaw, e.pitch, e.roll])
    cy, sy, cp, sp, cr, sr = np.cos(y), np.sin(y), np.cos(p), np.sin(p), np.cos(r), np.sin(r)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return Rotation(rz @ ry @ rx)


def rotation_to_euler(r: Rotation) -> EulerYPR:
    """Extract yaw/pitch/roll; at gimbal lock roll is 0 and yaw takes the free angle."""
    m = r.m
    sp = float(np.clip(-m[2, 0], -1.0, 1.0))
    if abs(sp) > 1.0 - GIMBAL_TOL:
        pitch = 90.0 if sp > 0 else -90.0
        # with roll = 0: m01 = -sin(yaw), m11 = cos(yaw)
        yaw = np.degrees(np.arctan2(-m[0, 1], m[1, 1]))
        roll = 0.0
    else:
        pitch = np.degrees(np.arcsin(sp))
        yaw = np.degrees(np.arctan2(m[1, 0], m[0, 0]))
        roll = np.degrees(np.arctan2(m[2, 1], m[2, 2]))
    return EulerYPR(float(_wrap180(yaw)), float(pitch), float(_wrap180(roll)))


@dataclass(frozen=True)
class EulerMAE:
    yaw: float
    pitch: float
    roll: float

    @property
    def mean(self) -> float:
        return (self.yaw + self.pitch + self.roll) / 3.0


def euler_mae(pred: Sequence[EulerYPR], gt: Sequence[EulerYPR]) -> EulerMAE:
    """Per-angle mean absolute error with differences wrapped to (-180, 180]."""
    if len(pred) != len(gt):
        raise ValueError("pred and gt lengths differ")
    if not pred:
        raise ValueError("need at least one pair")
    p = np.array([[e.yaw, e.pitch, e.roll] for e in pred])
    g = np.array([[e.yaw, e.pitch, e.roll] for e in gt])
    err = np.abs(_wrap180(p - g)).mean(axis=0)
    return EulerMAE(*map(float, err))


def self_check(n: int = 1000, seed: int = 0) -> dict[str, float]:
    """Worst-case residuals over random inputs, used by the ``rotmath check`` command."""
    rng = np.random.default_rng(seed)
    worst_ortho = worst_round = 0.0
    for _ in range(n):
        rot = sixd_to_rotation(rng.normal(size=3), rng.normal(size=3))
        worst_ortho = max(worst_ortho, float(np.max(np.abs(rot.m.T @ rot.m - np.eye(3)))),
                          abs(float(np.linalg.det(rot.m)) - 1.0))
        e = EulerYPR(rng.uniform(-179, 179), rng.uniform(-89, 89), rng.uniform(-179, 179))
        back = rotation_to_euler(euler_to_rotation(e))
        d = np.abs(_wrap180(np.array([back.yaw - e.yaw, back.pitch - e.pitch, back.roll - e.roll])))
        worst_round = max(worst_round, float(d.max()))
    return {"orthonormality": worst_ortho, "euler_round_trip_deg": worst_round}
