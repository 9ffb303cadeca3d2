"""Seed-derived random streams.

Every random draw in the package comes from a Philox generator keyed by a
tuple of non-negative integers (seed, purpose, index, ...).  Streams depend
only on the key, never on scheduling order.
"""
import numpy as np

_MASK64 = (1 << 64) - 1

# purpose tags used as the second key component
BOOTSTRAP = 1
FEATURES = 2
PERMUTATION = 3
SPLIT = 4
FOREST = 5
SIMULATION = 6
REPLICATE = 7


def stream(seed, *keys):
    """Return an independent ``numpy.random.Generator`` for ``(seed, *keys)``."""
    entropy = [int(seed) & _MASK64] + [int(k) & _MASK64 for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed, *keys):
    """Derive a child 63-bit integer seed from ``(seed, *keys)``."""
    entropy = [int(seed) & _MASK64] + [int(k) & _MASK64 for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0] >> np.uint64(1))
