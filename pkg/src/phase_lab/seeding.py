"""Deterministic seed derivation.

Every random stream in an experiment is keyed by a tuple such as
``(base_seed, point, instance, run)`` and mixed with SplitMix64, so results do
not depend on worker count or scheduling order.
"""
from __future__ import annotations

import random

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(*keys: int) -> int:
    """Fold integer keys into one 64-bit seed."""
    h = 0
    for k in keys:
        h = splitmix64(h ^ (int(k) & MASK64))
    return h


def numpy_rng(*keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*keys))


def python_rng(*keys: int) -> random.Random:
    return random.Random(derive_seed(*keys))
