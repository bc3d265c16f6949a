"""Deterministic random-number plumbing.

All randomness in the package flows through numpy Generators created here
(PCG64 streams). Integer sampling is inclusive on both endpoints. Child
seeds are derived with BLAKE2b so that per-utterance results do not depend
on processing order, Python's hash randomization, or the platform.
"""

import hashlib
import struct

import numpy as np

Rng = np.random.Generator


def make_rng(seed: int) -> Rng:
    """Create a deterministic generator from a 64-bit integer seed."""
    return np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))


def randint(rng: Rng, lo: int, hi: int) -> int:
    """Uniform integer over the inclusive range [lo, hi]."""
    if hi < lo:
        raise ValueError(f"empty integer range [{lo}, {hi}]")
    return int(rng.integers(lo, hi + 1))


def child_seed(seed: int, *parts) -> int:
    """Derive an independent 64-bit seed from a root seed and key parts.

    Parts may be ints or strings; the derivation is stable across runs
    and platforms.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<q", seed & 0x7FFFFFFFFFFFFFFF))
    for part in parts:
        if isinstance(part, int):
            h.update(b"i")
            h.update(struct.pack("<q", part))
        else:
            h.update(b"s")
            h.update(str(part).encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


def spawn(rng: Rng) -> int:
    """Draw a fresh 64-bit child seed from an existing generator."""
    return int(rng.integers(0, 2**63))
