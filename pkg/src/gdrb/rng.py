"""Keyed counter-based random streams.

Every random draw in the package comes from a Philox generator whose key is
derived from ``(seed, purpose, *indices)``.  Streams for different
elements, sequence lengths or sequence indices are independent and can be
produced in any order, so serial and parallel runs agree bit for bit.
"""
from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    NOISE = 1
    SEQUENCE = 2
    EXPERIMENT = 3
    TWO_DESIGN = 4
    GROUP_CHECK = 5
    TEST = 6


def stream(seed: int, purpose: int, *indices: int) -> np.random.Generator:
    """Independent generator for the given key."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), *map(int, indices)))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, purpose: int, *indices: int) -> int:
    """A 63-bit child seed, for handing a whole sub-experiment its own key space."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), *map(int, indices)))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
