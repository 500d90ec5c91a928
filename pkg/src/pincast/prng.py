"""Deterministic pseudo-random numbers for reproducible built-in shapes.

A tiny splitmix64 generator: the output stream depends only on the seed,
not on platform, numpy version, or global RNG state, so shape fixtures and
golden test vectors stay stable.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64(seed: int, count: int) -> list[float]:
    """Return `count` uniform floats in [0, 1) from a splitmix64 stream."""
    if count < 0:
        raise ValueError("count must be non-negative")
    state = seed & _MASK
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z = z ^ (z >> 31)
        out.append((z >> 11) * 2.0**-53)
    return out
