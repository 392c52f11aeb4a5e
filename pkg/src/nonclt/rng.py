"""Seed handling.

Every random routine accepts either an integer seed or a ready
:class:`numpy.random.Generator`.  Independent streams are derived with
:class:`numpy.random.SeedSequence` using ``spawn_key``: stream
``(master_seed, k1, k2, ...)`` is ``SeedSequence(master_seed, spawn_key=(k1, k2, ...))``.
The same key always yields the same stream, and distinct keys yield
statistically independent ones.
"""

import numpy as np


def as_generator(seed=None):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def stream(master_seed, *key):
    """Generator for the sub-stream ``key`` of ``master_seed``."""
    if master_seed is None:
        raise ValueError("master_seed is required for derived streams")
    ss = np.random.SeedSequence(int(master_seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(master_seed, *key):
    """A 64-bit integer seed for the sub-stream ``key``."""
    ss = np.random.SeedSequence(int(master_seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
