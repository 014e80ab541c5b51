from pathlib import Path

import numpy as np
import pytest

from veridict.data import SynthConfig, generate_synthetic
from veridict.features import FeatureMatrix

FIXTURES = Path(__file__).parent / "fixtures"


def make_fm(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = names or [f"f{i}_mean" for i in range(X.shape[1])]
    n = len(y)
    return FeatureMatrix(X, tuple(names), np.asarray(y), tuple(f"r{i}" for i in range(n)), ("t",) * n)


def blobs(n=200, margin=2.0, seed=0):
    """Two Gaussian blobs in 2-D separated by a gap of ``margin`` along the first axis."""
    rng = np.random.default_rng(seed)
    y = np.r_[np.zeros(n // 2), np.ones(n - n // 2)].astype(int)
    X = rng.normal(0, 0.3, (n, 2))
    X[:, 0] = np.clip(X[:, 0], -0.9, 0.9) + np.where(y == 1, 1.0 + margin / 2, -1.0 - margin / 2)
    return X, y


def xor(n=400, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    return X, y


@pytest.fixture(scope="session")
def synth_small():
    return generate_synthetic(SynthConfig(n_samples=40, n_frames=30), seed=3)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
