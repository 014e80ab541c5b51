"""Rolling-dice honesty experiment: payoffs, claim ledger and sampling-noise studies.

A claim pays its face value in euros except face 6, which pays nothing.
Over- and underclaiming are judged by payoff, so claiming 6 after rolling 5
is an underclaim. ``actual == 0`` marks a subject who never rolled.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

FACES = (1, 2, 3, 4, 5, 6)
P_FACE = 1.0 / 6.0


def payoff(claimed: int) -> int:
    if claimed not in FACES:
        raise ValueError(f"claimed value {claimed!r} outside 1..6")
    return 0 if claimed == 6 else int(claimed)


@dataclass(frozen=True)
class DiceRecord:
    subject_id: str
    actual: int
    claimed: int

    def __post_init__(self):
        if self.actual not in (0,) + FACES:
            raise ValueError(f"{self.subject_id}: actual {self.actual!r} outside 0..6")
        if self.claimed not in FACES:
            raise ValueError(f"{self.subject_id}: claimed {self.claimed!r} outside 1..6")


def read_records(path: str | os.PathLike) -> list[DiceRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [DiceRecord(r["subject_id"], int(r["actual"]), int(r["claimed"])) for r in csv.DictReader(fh)]


def write_records(records, path: str | os.PathLike):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("subject_id", "actual", "claimed"))
        for r in records:
            w.writerow((r.subject_id, r.actual, r.claimed))


@dataclass(frozen=True, eq=False)
class RdeLedger:
    truthful: int
    overclaimed: int
    underclaimed: int
    no_roll: int
    no_roll_paid: int  # no-roll subjects whose claim pays out
    confusion: np.ndarray  # rows actual 0..6, columns claimed 1..6

    @property
    def n(self) -> int:
        return self.truthful + self.overclaimed + self.underclaimed + self.no_roll

    @property
    def honest_fraction(self) -> float:
        return self.truthful / self.n

    def to_dict(self) -> dict:
        return {"truthful": self.truthful, "overclaimed": self.overclaimed,
                "underclaimed": self.underclaimed, "no_roll": self.no_roll,
                "no_roll_paid": self.no_roll_paid, "n": self.n,
                "honest_fraction": self.honest_fraction, "confusion": self.confusion.tolist()}


def build_ledger(records) -> RdeLedger:
    records = list(records)
    if not records:
        raise ValueError("ledger needs at least one record")
    counts = {"truthful": 0, "over": 0, "under": 0, "no_roll": 0, "paid": 0}
    conf = np.zeros((7, 6), dtype=np.int64)
    for r in records:
        conf[r.actual, r.claimed - 1] += 1
        if r.actual == 0:
            counts["no_roll"] += 1
            counts["paid"] += payoff(r.claimed) > 0
        elif r.claimed == r.actual:
            counts["truthful"] += 1
        elif payoff(r.claimed) > payoff(r.actual):
            counts["over"] += 1
        else:
            counts["under"] += 1
    return RdeLedger(counts["truthful"], counts["over"], counts["under"], counts["no_roll"],
                     counts["paid"], conf)


# ------------------------------------------------------------ simulation

@dataclass(frozen=True, eq=False)
class DeviationStudy:
    n_rolls: int
    per_sim: np.ndarray  # percent deviation of each simulation
    face_counts: np.ndarray  # (n_sims, 6)

    @property
    def mean(self) -> float:
        return float(self.per_sim.mean())

    @property
    def std(self) -> float:
        return float(self.per_sim.std(ddof=1))

    def write_csv(self, path: str | os.PathLike):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("sim", "deviation_pct") + tuple(f"n_face{f}" for f in FACES))
            for i, (d, c) in enumerate(zip(self.per_sim, self.face_counts)):
                w.writerow((i, repr(float(d))) + tuple(int(x) for x in c))


def percent_deviation(face_counts) -> np.ndarray:
    """Mean over faces of |frequency - 1/6| relative to 1/6, in percent."""
    c = np.atleast_2d(np.asarray(face_counts, dtype=float))
    freq = c / c.sum(axis=1, keepdims=True)
    return np.abs(freq - P_FACE).mean(axis=1) / P_FACE * 100.0


def deviation_from_ideal(n_rolls: int, n_sims: int = 50, seed: int = 0, chunk: int = 1_000_000) -> DeviationStudy:
    """Roll a fair die ``n_rolls`` times per simulation and measure the deviation of face frequencies."""
    if n_rolls < 6 or n_sims < 2:
        raise ValueError("need n_rolls >= 6 and n_sims >= 2")
    rng = np.random.default_rng(seed)
    counts = np.zeros((n_sims, 6), dtype=np.int64)
    if n_rolls <= chunk:
        rolls = rng.integers(1, 7, size=(n_sims, n_rolls))
        for f in FACES:
            counts[:, f - 1] = np.sum(rolls == f, axis=1)
    else:
        for i in range(n_sims):
            left = n_rolls
            while left:
                k = min(left, chunk)
                counts[i] += np.bincount(rng.integers(1, 7, size=k), minlength=7)[1:]
                left -= k
    return DeviationStudy(n_rolls, percent_deviation(counts), counts)


def expected_deviation(n_rolls: int) -> float:
    """Normal approximation of the mean percent deviation for a fair die."""
    p = P_FACE
    return math.sqrt(p * (1 - p) / n_rolls) * math.sqrt(2 / math.pi) / p * 100.0


# ------------------------------------------------------- blind estimation

@dataclass(frozen=True, eq=False)
class BlindEstimate:
    n: int
    frequency: np.ndarray
    excess: np.ndarray  # frequency - 1/6 per face
    std_error: np.ndarray  # binomial s.e. of each frequency under a fair die
    z: np.ndarray

    @property
    def excess_mass(self) -> float:
        """Total positive excess over uniform: a lower-bound style indicator of lying."""
        return float(np.clip(self.excess, 0.0, None).sum())

    def to_dict(self) -> dict:
        return {"n": self.n, "frequency": self.frequency.tolist(), "excess": self.excess.tolist(),
                "std_error": self.std_error.tolist(), "z": self.z.tolist(),
                "excess_mass": self.excess_mass}


def estimate_lie_rate_blind(claims) -> BlindEstimate:
    """Compare a histogram of claims over faces 1..6 to the uniform distribution.

    Without the actual rolls only the excess of claim frequency over 1/6 is
    observable; it is indicative, not an exact lie rate.
    """
    h = np.asarray(claims, dtype=float)
    if h.shape != (6,) or np.any(h < 0):
        raise ValueError("claims must be 6 non-negative counts")
    n = h.sum()
    if n <= 0:
        raise ValueError("empty claim histogram")
    freq = h / n
    se = np.full(6, math.sqrt(P_FACE * (1 - P_FACE) / n))
    excess = freq - P_FACE
    return BlindEstimate(int(n), freq, excess, se, excess / se)


def claim_histogram(records) -> np.ndarray:
    return np.bincount([r.claimed for r in records], minlength=7)[1:]
