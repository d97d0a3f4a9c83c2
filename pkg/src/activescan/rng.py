"""Named random substreams.

All randomness in the package flows from one master seed. Each component
draws from its own named substream so that e.g. changing the policy seed
path cannot perturb the particle noise. Streams are keyed by fixed integer
ids (not spawn order), which makes them independent of call order.
"""

from __future__ import annotations

import numpy as np

# Fixed stream ids; never renumber, or every seeded artifact changes.
STREAM_PHANTOM = 1
STREAM_PARTICLES = 2
STREAM_POLICY = 3
STREAM_TRAINING = 4


def substream(master_seed: int, *key: int) -> np.random.SeedSequence:
    """SeedSequence for the substream identified by ``key`` ints."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(key))


def generator(master_seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator seeded from the named substream."""
    return np.random.default_rng(substream(master_seed, *key))


def child(seq: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    """Extend a SeedSequence's spawn key; order-independent child streams."""
    parent = tuple(int(k) for k in seq.spawn_key)
    return np.random.SeedSequence(seq.entropy, spawn_key=parent + tuple(int(k) for k in key))
