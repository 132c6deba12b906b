"""Deterministic random-stream derivation.

All stochastic code in the package draws from PCG64 generators seeded through
numpy SeedSequence, so any (seed, key...) tuple names one portable stream.
Derived streams are independent of scheduling: parallel and sequential
execution see identical draws.
"""

import numpy as np


def rng_from(*keys: int) -> np.random.Generator:
    """Return a PCG64 generator for the given integer key path."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(tuple(keys))))


def derive_seed(*keys: int) -> int:
    """Collapse a key path to a single reproducible 32-bit seed."""
    return int(np.random.SeedSequence(tuple(keys)).generate_state(1)[0])
