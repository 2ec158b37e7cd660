"""Derived random streams.

All randomness flows from a single user seed; each consumer draws from its
own stream so that components stay reproducible independently of each other.
Stream ids: 0 = initialization, 1 = chain, 2 = simulation, 3 = center jitter.
Replication r of a simulation uses (seed, STREAM_SIM, r).
"""

import numpy as np

STREAM_INIT = 0
STREAM_CHAIN = 1
STREAM_SIM = 2
STREAM_JITTER = 3


def derived_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *path)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(p) for p in path]]))
