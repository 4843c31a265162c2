"""Deterministic derivation of independent RNG streams.

Every randomized step in the toolkit draws from a stream derived by hashing
a master seed together with the step's identity (origin id, method name,
variant index, epoch number, ...).  Streams are therefore independent of
execution order and stable across platforms and runs.
"""

from __future__ import annotations

import hashlib
import random

import numpy as np

# Unit separator: never appears in seeds, ids, method names or epoch indices.
_SEP = b"\x1f"


def derive_seed(*parts: object) -> int:
    """Hash the given parts into a 64-bit seed.

    Parts are stringified, so ints and strs mix freely.  Uses blake2b, not
    the builtin hash(), which is salted per process.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(_SEP)
    return int.from_bytes(h.digest(), "little")


def derive_rng(*parts: object) -> random.Random:
    """A fresh random.Random seeded from the hashed parts."""
    return random.Random(derive_seed(*parts))


def derive_np_rng(*parts: object) -> np.random.Generator:
    """A fresh numpy Generator seeded from the hashed parts."""
    return np.random.default_rng(derive_seed(*parts))
