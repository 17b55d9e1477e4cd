"""Seed derivation for reproducible, order-insensitive parallel runs.

Every random draw in the package comes from a stream keyed by
(master seed, replica id, purpose tag).  Streams are counter-based
(Philox), so replicas can run in any order, on any number of workers,
and still produce identical results.
"""

import numpy as np

# purpose tags for substreams
FIELD = 1      # DGFF sampling
EDGES = 2      # per-edge bridge zero-avoidance uniforms
BRIDGE = 3     # interior bridge samples
WALK = 4       # killed random walk Monte Carlo
ORACLE = 5     # test-side oracles


def generator(seed: int, replica: int = 0, tag: int = FIELD) -> np.random.Generator:
    """Independent Philox stream for (seed, replica, tag)."""
    ss = np.random.SeedSequence((int(seed) & (2**64 - 1), int(replica), int(tag)))
    return np.random.Generator(np.random.Philox(ss))


def edge_base(seed: int, replica: int = 0) -> np.uint64:
    """64-bit base key feeding the per-edge uniform hash."""
    ss = np.random.SeedSequence((int(seed) & (2**64 - 1), int(replica), EDGES))
    return np.uint64(ss.generate_state(1, np.uint64)[0])
