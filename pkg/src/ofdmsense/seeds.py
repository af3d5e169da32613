"""Deterministic derivation of independent random streams.

Every random draw in the toolkit comes from a generator produced by
``derive_rng(master_seed, *path)``.  The path is a sequence of integers
and/or purpose tags; it feeds ``numpy.random.SeedSequence`` as the spawn
key, so streams for different purposes (scene, symbols, channel, reflection
coefficients, noise) and different (sweep point, trial) coordinates are
statistically independent and stable: adding a new purpose or sweep point
never perturbs existing streams.
"""
from __future__ import annotations

import numpy as np

# stable purpose-tag codes; append only, never renumber
PURPOSES = {
    "scene": 1,
    "symbols": 2,
    "channel": 3,
    "reflection": 4,
    "noise": 5,
    "comm_noise": 6,
}


def _code(item) -> int:
    if isinstance(item, str):
        try:
            return PURPOSES[item]
        except KeyError:
            raise ValueError(f"unknown purpose tag {item!r}") from None
    return int(item)


def derive_rng(master_seed: int, *path) -> np.random.Generator:
    """Generator for the stream identified by (master_seed, *path)."""
    key = tuple(_code(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))
