"""Named sub-seed derivation.

Every random choice in the package flows from a single integer seed.  Stages
derive their own seed by hashing the parent seed with a stage name, so any
stage can be replayed in isolation.
"""

import hashlib
import random


def derive_seed(seed, *names):
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for name in names:
        h.update(b"\x00")
        h.update(str(name).encode())
    return int.from_bytes(h.digest(), "big")


def rng(seed, *names):
    return random.Random(derive_seed(seed, *names))


def unit_hash(seed, *names, bits=32):
    """Deterministic integer in [1, 2**bits]."""
    return derive_seed(seed, *names) % (1 << bits) + 1
