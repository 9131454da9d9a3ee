"""Counter-based seed derivation.

A trial's seed is a stable 64-bit hash of (master_seed, stream, trial), so a
trial draws the same numbers no matter which worker runs it or in what order.
"""

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, stream: str | int, trial: int = 0) -> int:
    h = hashlib.blake2b(digest_size=8, person=b"nrlab-seed")
    h.update(struct.pack("<Q", master_seed & MASK64))
    h.update(str(stream).encode())
    h.update(b"\x00")
    h.update(struct.pack("<Q", trial & MASK64))
    return int.from_bytes(h.digest(), "little")


def trial_rng(master_seed: int, stream: str | int, trial: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, stream, trial))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(None if seed is None else int(seed) & MASK64)
