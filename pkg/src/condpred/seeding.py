"""Deterministic seed derivation.

Every random stream is keyed by ``(master_seed, tag, *indices)`` so that a
replication's draws do not depend on execution order or thread count.
"""

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(master_seed: int, tag: str, *indices: int) -> int:
    """Hash a master seed, a purpose tag and integer indices into a 64-bit seed."""
    key = "|".join([str(int(master_seed) & SEED_MASK), tag, *(str(int(i)) for i in indices)])
    digest = hashlib.blake2b(key.encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(master_seed: int, tag: str, *indices: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, tag, *indices))
