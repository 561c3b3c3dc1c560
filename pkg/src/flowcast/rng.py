"""Pinned random number generation.

Every stochastic component (window sampling, pivot choice, random search,
sampled verification, synthetic data) draws from the same 64-bit generator,
PCG64, so that a seed reproduces bit-identical results on any platform.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Return the project-wide generator (PCG64) seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(master_seed: int, index: int) -> int:
    """Per-repeat seed: offset from the master seed by the repeat index."""
    return int(master_seed) + int(index)
