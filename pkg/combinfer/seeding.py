"""
Counter-based random stream derivation.

A master seed is combined with a purpose tag and an index and hashed into an
independent stream seed, so stream ``(seed, purpose, j)`` never depends on
which other streams were drawn or in which order.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, purpose: str, index: int = 0) -> int:
    digest = hashlib.blake2b(f"{seed}/{purpose}/{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_rng(seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, purpose, index))


__all__ = ["derive_seed", "derive_rng"]
