"""Derivation of independent random streams from one master seed.

Every stream is ``SeedSequence(master_seed, spawn_key=keys)``: numpy hashes
the master seed together with the key path, so the stream for run ``i`` of a
sweep does not depend on how many other runs exist or in which order they
execute.
"""
from __future__ import annotations

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"master seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit child seed, for code that needs an integer rather than a generator."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"master seed must be a 64-bit unsigned integer, got {seed}")
    lo, hi = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)).generate_state(2, np.uint32)
    return int(hi) << 32 | int(lo)
