"""Deterministic PRNG stream derivation.

Every stochastic component draws from a generator derived from a master seed
plus a fixed integer path. Results therefore never depend on call order, on
how work is split across processes, or on how many workers run.
"""

from __future__ import annotations

import numpy as np

# Role tags used as the first path element below a master seed. Never
# renumber these: checkpoint resume and byte-identical reruns depend on them.
INIT = 0
REPRODUCE = 1
EVALUATE = 2
COMPETE = 3
CENTROIDS = 4
REPLICATION = 5
PROJECTION = 6
DESCRIBE = 7
META_TASKS = 10
META_ASK = 11
META_VALIDATION = 12

_UINT64_MASK = 0xFFFFFFFFFFFFFFFF


def seed_sequence(master_seed: int, *path: int) -> np.random.SeedSequence:
    parts = [int(master_seed) & _UINT64_MASK] + [int(p) & _UINT64_MASK for p in path]
    return np.random.SeedSequence(parts)


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Generator keyed by (master_seed, *path); stable across runs and platforms."""
    return np.random.default_rng(seed_sequence(master_seed, *path))


def derive_seed(master_seed: int, *path: int) -> int:
    """A 63-bit nonnegative integer seed derived from (master_seed, *path)."""
    state = seed_sequence(master_seed, *path).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))
