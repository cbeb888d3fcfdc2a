"""Seeded random streams.

Every random quantity in the package is drawn from a numpy ``PCG64``
generator obtained through :func:`substream`. The mixing rule is fixed:

    substream(seed, *keys) = Generator(PCG64(SeedSequence(seed, spawn_key=keys)))

``seed`` is the (non-negative, 64-bit) seed of a replication and ``keys`` is
a tuple of small non-negative integers. The first key names the logical
stream (see the ``STREAM_*`` constants), so capacities, edges, branching
processes and pair sampling never share random numbers even when they are
driven by the same replication seed.
"""

from __future__ import annotations

import numpy as np

STREAM_CAPACITIES = 0
STREAM_EDGES = 1
STREAM_BRANCHING = 2
STREAM_PAIRS = 3
STREAM_CORE_CONTACT = 4
STREAM_SHELL_ROOT = 5
STREAM_REPLICATION = 6

_MASK64 = (1 << 64) - 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for logical stream ``keys`` under ``seed``."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child 64-bit seed, e.g. one per (n, gamma index, replication)."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=(STREAM_REPLICATION, *(int(k) for k in keys)))
    lo, hi = (int(x) for x in ss.generate_state(2, dtype=np.uint32))
    return (hi << 32) | lo
