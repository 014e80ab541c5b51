from __future__ import annotations

import hashlib

import numpy as np


def stream(seed: int, *key) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``; keys may be ints or strings."""
    words = [int(seed) & 0xFFFFFFFF]
    for k in key:
        if isinstance(k, str):
            words.append(int.from_bytes(hashlib.sha256(k.encode()).digest()[:4], "little"))
        else:
            words.append(int(k) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(words))


def stratified_split(y, train_frac: float, rng: np.random.Generator, stratified: bool = True):
    """Random (optionally per-label) split into sorted train and test index arrays."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie in (0, 1)")
    y = np.asarray(y)
    n = len(y)
    if n < 2:
        raise ValueError("need at least two rows to split")
    groups = [np.nonzero(y == c)[0] for c in np.unique(y)] if stratified else [np.arange(n)]
    train, test = [], []
    for g in groups:
        g = g[rng.permutation(len(g))]
        k = int(round(len(g) * train_frac))
        if len(g) >= 2:
            k = min(max(k, 1), len(g) - 1)
        train.append(g[:k])
        test.append(g[k:])
    train = np.sort(np.concatenate(train))
    test = np.sort(np.concatenate(test))
    if test.size == 0 or train.size == 0:
        raise ValueError("split produced an empty train or test set")
    return train, test
