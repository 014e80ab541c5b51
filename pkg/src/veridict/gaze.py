"""Binned gaze-angle decoding: softmax, expectation and the combined loss."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BinGrid:
    """``n_bins`` bins of ``width`` degrees, bin 0 starting at ``origin``."""

    n_bins: int = 28
    width: float = 3.0
    origin: float = -42.0

    def __post_init__(self):
        if self.n_bins < 2 or not self.width > 0:
            raise ValueError("need n_bins >= 2 and width > 0")

    @property
    def centers(self) -> np.ndarray:
        return self.origin + (np.arange(self.n_bins) + 0.5) * self.width

    @property
    def upper(self) -> float:
        return self.origin + self.n_bins * self.width

    def bin_index(self, angle: float) -> int:
        if not self.origin <= angle <= self.upper:
            raise ValueError(f"angle {angle} outside grid [{self.origin}, {self.upper}]")
        return min(int((angle - self.origin) // self.width), self.n_bins - 1)


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    if z.size == 0:
        raise ValueError("softmax of an empty vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    e = np.exp(z - z.max())
    return e / e.sum()


def expected_angle(probs, grid: BinGrid) -> float:
    p = np.asarray(probs, dtype=float)
    if p.shape != (grid.n_bins,):
        raise ValueError(f"expected {grid.n_bins} probabilities, got {p.shape}")
    # exact summation keeps symmetric cases at exactly 0
    return math.fsum(p * grid.centers)


def combined_gaze_loss(logits, target: float, grid: BinGrid, lam: float = 1.0):
    """Cross-entropy on the target bin plus ``lam`` times the squared expectation error.

    Returns ``(loss, grad)`` with ``grad`` the derivative with respect to the logits.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    z = np.asarray(logits, dtype=float)
    if z.shape != (grid.n_bins,):
        raise ValueError(f"expected {grid.n_bins} logits, got {z.shape}")
    k = grid.bin_index(target)
    p = softmax(z)
    c = grid.centers
    log_p = z - z.max() - np.log(np.exp(z - z.max()).sum())
    ce = -log_p[k]
    err = p @ c - target
    loss = ce + lam * err * err
    onehot = np.zeros_like(p)
    onehot[k] = 1.0
    # d(expected)/dz_j = p_j (c_j - expected)
    grad = (p - onehot) + lam * 2.0 * err * p * (c - p @ c)
    return float(loss), grad


def self_check(n: int = 100, seed: int = 0, h: float = 1e-6) -> float:
    """Worst relative gradient error against central differences."""
    rng = np.random.default_rng(seed)
    grid = BinGrid()
    worst = 0.0
    for _ in range(n):
        z = rng.normal(0, 2, grid.n_bins)
        t = rng.uniform(grid.origin, grid.upper)
        _, g = combined_gaze_loss(z, t, grid)
        fd = np.empty_like(z)
        for j in range(z.size):
            zp, zm = z.copy(), z.copy()
            zp[j] += h
            zm[j] -= h
            fd[j] = (combined_gaze_loss(zp, t, grid)[0] - combined_gaze_loss(zm, t, grid)[0]) / (2 * h)
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), np.linalg.norm(fd), 1e-12)))
    return worst
