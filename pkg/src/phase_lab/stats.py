"""Point estimates with approximate 95% confidence intervals.

Medians use the percentile band ``50 +- 100/sqrt(N)``, fractions
``f +- 2 sqrt(f(1-f)/N)`` and means ``mean +- 1.96 sigma/sqrt(N)``.
Percentiles are nearest-rank, so interval ends are always observed values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class SampleSummary:
    N: int
    median: float
    median_ci: tuple[float, float]
    mean: float
    stddev: float
    mean_ci: tuple[float, float]


@dataclass(frozen=True)
class FractionSummary:
    successes: int
    N: int
    f: float
    ci: tuple[float, float]


def nearest_rank(sorted_values: Sequence[float], pct: float):
    """Smallest value with at least ``pct`` percent of the sample at or below it."""
    n = len(sorted_values)
    pct = min(max(pct, 0.0), 100.0)
    rank = max(1, math.ceil(pct / 100 * n - 1e-9))
    return sorted_values[min(rank, n) - 1]


def median_with_ci(samples: Sequence[float]) -> tuple[float, float, float]:
    if len(samples) == 0:
        raise InputError("median of an empty sample")
    xs = sorted(samples)
    half = 100 / math.sqrt(len(xs))
    return nearest_rank(xs, 50), nearest_rank(xs, 50 - half), nearest_rank(xs, 50 + half)


def fraction_with_ci(successes: int, N: int) -> FractionSummary:
    if N < 1 or not 0 <= successes <= N:
        raise InputError(f"need 0 <= successes <= N and N >= 1, got {successes}/{N}")
    f = successes / N
    half = 2 * math.sqrt(f * (1 - f)) / math.sqrt(N)
    return FractionSummary(successes, N, f, (max(0.0, f - half), min(1.0, f + half)))


def mean_with_ci(samples: Sequence[float]) -> tuple[float, float, float]:
    n = len(samples)
    if n == 0:
        raise InputError("mean of an empty sample")
    xs = np.asarray(samples, dtype=float)
    mean = float(xs.mean())
    if n == 1:
        return mean, mean, mean
    half = 1.96 * float(xs.std(ddof=1)) / math.sqrt(n)
    return mean, mean - half, mean + half


def summarize(samples: Sequence[float]) -> SampleSummary:
    med, lo, hi = median_with_ci(samples)
    mean, mlo, mhi = mean_with_ci(samples)
    sd = float(np.std(samples, ddof=1)) if len(samples) > 1 else 0.0
    return SampleSummary(len(samples), med, (lo, hi), mean, sd, (mlo, mhi))
