"""One-dimensional two-interval distribution with a margin gap and label noise.

The inputs are uniform on S+ = [0, (1-eps)/2] and S- = [(1+eps)/2, 1]. The clean
label is +1 on S+ and -1 on S-, and each label is flipped independently with
probability ``flip_p``. The conditional mean E[y|x] is therefore +-(1 - 2p).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class LabeledSample(NamedTuple):
    x: float
    y: float


class SampleSet(NamedTuple):
    """Columns of a labelled sample; iterating yields ``LabeledSample`` rows."""

    x: np.ndarray
    y: np.ndarray

    def __len__(self):
        return len(self.x)

    def __iter__(self):
        return (LabeledSample(float(a), float(b)) for a, b in zip(self.x, self.y))

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return SampleSet(self.x[idx], self.y[idx])
        return LabeledSample(float(self.x[idx]), float(self.y[idx]))


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream fully determined by a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class MarginDistribution:
    epsilon: float = 0.05
    flip_p: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 <= self.flip_p < 0.5:
            raise ValueError(f"flip_p must lie in [0, 0.5), got {self.flip_p}")

    @property
    def plus_interval(self) -> tuple[float, float]:
        return 0.0, (1.0 - self.epsilon) / 2

    @property
    def minus_interval(self) -> tuple[float, float]:
        return (1.0 + self.epsilon) / 2, 1.0

    @property
    def intervals(self):
        return self.plus_interval, self.minus_interval

    @property
    def delta(self) -> float:
        return 1.0 - 2.0 * self.flip_p

    @property
    def density_value(self) -> float:
        return 1.0 / (1.0 - self.epsilon)

    @property
    def gap(self) -> float:
        return self.minus_interval[0] - self.plus_interval[1]

    def in_support(self, x):
        x = np.asarray(x, dtype=float)
        (a0, a1), (b0, b1) = self.intervals
        return ((x >= a0) & (x <= a1)) | ((x >= b0) & (x <= b1))

    def sample(self, rng: np.random.Generator, n: int) -> SampleSet:
        if n <= 0:
            return SampleSet(np.empty(0), np.empty(0))
        (a0, a1), (b0, b1) = self.intervals
        p_plus = (a1 - a0) / ((a1 - a0) + (b1 - b0))
        plus = rng.random(n) < p_plus
        u = rng.random(n)
        x = np.where(plus, a0 + u * (a1 - a0), b0 + u * (b1 - b0))
        flips = rng.random(n) < self.flip_p
        y = np.where(plus, 1.0, -1.0) * np.where(flips, -1.0, 1.0)
        return SampleSet(x, y)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < 0.0) | (x > 1.0)):
            raise ValueError("density is defined on [0, 1] only")
        out = np.where(self.in_support(x), self.density_value, 0.0)
        return float(out) if out.ndim == 0 else out

    def bayes_regression(self, x):
        """E[y | x]; zero on the gap by convention."""
        x = np.asarray(x, dtype=float)
        (a0, a1), (b0, b1) = self.intervals
        out = np.where((x >= a0) & (x <= a1), self.delta,
                       np.where((x >= b0) & (x <= b1), -self.delta, 0.0))
        return float(out) if out.ndim == 0 else out

    def bayes_sign(self, x):
        """sign(E[y|x]) with the sign(0) = +1 convention."""
        return np.where(np.asarray(x, dtype=float) <= 0.5, 1.0, -1.0)

    def bayes_risk(self) -> float:
        return float(self.flip_p)


def sample(d: MarginDistribution, rng: np.random.Generator, n: int) -> SampleSet:
    return d.sample(rng, n)


def density(d: MarginDistribution, x):
    return d.density(x)


def bayes_regression(d: MarginDistribution, x):
    return d.bayes_regression(x)


def bayes_risk(d: MarginDistribution) -> float:
    return d.bayes_risk()
