"""Seeded splitmix64 streams for the compiled solver kernels.

Each worker or repetition gets its own state derived by hashing the
run seed with a role label, so results are reproducible and streams
never collide across the pool.
"""

from __future__ import annotations

import hashlib

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _next_rand(state):
    # splitmix64: deterministic, cheap, one uint64 of state
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _next_unit(state):
    # uniform double in [0, 1) from the top 53 bits
    return (_next_rand(state) >> np.uint64(11)) * (2.0 ** -53)


def derive_state(seed: str, label: str) -> np.ndarray:
    """Hash seed and role label into a one-word kernel rng state."""
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return np.frombuffer(digest[:8], dtype=np.uint64).copy()
