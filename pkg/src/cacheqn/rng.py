"""Splittable pseudo-random streams shared by both kernel lanes.

xoshiro256** with state material drawn from numpy's SeedSequence.  The numba
kernels re-implement the same update inline (uint64 wraparound arithmetic);
the Python twin here masks to 64 bits explicitly.  Given equal state words
the two lanes emit identical uniforms, which is what makes cross-backend
results bit-comparable.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
U01 = 2.0 ** -53


def state_for(seed: int, *key: int) -> np.ndarray:
    """Derive a 4-word xoshiro256** state for stream (seed, *key)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    state = ss.generate_state(4, np.uint64)
    if not state.any():  # all-zero state is the one invalid xoshiro state
        state[0] = np.uint64(0x9E3779B97F4A7C15)
    return state


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def next_u64(s: list[int]) -> int:
    """Advance a 4-element Python-int state in place, return next uint64."""
    result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
    t = (s[1] << 17) & MASK64
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


def next_u01(s: list[int]) -> float:
    """Uniform double in [0, 1) from the stream."""
    return (next_u64(s) >> 11) * U01
