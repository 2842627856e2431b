"""Keyed hashing and per-trial RNG streams.

Two primitives back everything randomized:

* ``pair_uniform`` -- a stateless splitmix64-style hash mapping a seed word
  and an index pair to a uniform float in [0, 1).  Used for lazily derived
  pairwise distances, where materializing a matrix is impossible.
* ``trial_generator`` -- a counter-based (Philox) generator keyed by
  (seed, trial index), so trials are reproducible and order-independent
  regardless of how they are scheduled across workers.
"""

from __future__ import annotations

import numpy as np

U64 = np.uint64
_MASK = (1 << 64) - 1
_GOLD = U64(0x9E3779B97F4A7C15)
_C1 = U64(0xBF58476D1CE4E5B9)
_C2 = U64(0x94D049BB133111EB)
_INV53 = 2.0**-53


def mix64(x):
    """splitmix64 finalizer; accepts uint64 scalars or arrays (wraps mod 2^64)."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=U64) + _GOLD
        z = z ^ (z >> U64(30))
        z = z * _C1
        z = z ^ (z >> U64(27))
        z = z * _C2
        z = z ^ (z >> U64(31))
    return z


def seed_word(*parts: int) -> np.uint64:
    """Chain-mix integers into a single well-mixed 64-bit word."""
    w = U64(0)
    for p in parts:
        w = mix64(w ^ U64(p & _MASK))
    return U64(w)


def pair_uniform(word: np.uint64, a, b):
    """Uniform [0,1) keyed by (word, a, b); a, b must fit in 32 bits.

    Broadcasts like a numpy ufunc over integer arrays.
    """
    key = (np.asarray(a, dtype=U64) << U64(32)) | np.asarray(b, dtype=U64)
    return (mix64(key ^ word) >> U64(11)) * _INV53


def trial_generator(seed: int, trial_index: int) -> np.random.Generator:
    """Independent, reproducible stream for one trial."""
    key = np.array([seed & _MASK, trial_index & _MASK], dtype=U64)
    return np.random.Generator(np.random.Philox(key=key))
