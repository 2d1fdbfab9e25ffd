"""Deterministic random number generation.

All stochastic objects in the package (weight matrices, sign diagonals,
Monte-Carlo probes, initial conditions) are drawn from counter-based Philox
streams keyed by an integer seed, so identical seeds reproduce identical
bits on any platform.  ``stream`` separates independent draws that share the
same user-facing seed (e.g. sign diagonals vs. bias vector).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a Philox generator keyed by ``(seed, stream)``."""
    return np.random.Generator(
        np.random.Philox(key=np.array([int(seed) & _MASK64, int(stream) & _MASK64],
                                      dtype=np.uint64)))


def step_seed(seed: int, t: int) -> int:
    """Per-time-step seed used when weights are resampled each step."""
    return (int(seed) ^ int(t)) & _MASK64
