"""SplitMix64 stream used for shuffling and negative sampling.

The numba kernels carry a uint64 twin of this generator; both must produce
identical sequences so the two backends sample the same triples.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return z ^ (z >> 31)


def next_u64(state: int) -> tuple[int, int]:
    state = (state + GAMMA) & MASK64
    return state, mix64(state)


def epoch_seed(seed: int, epoch: int) -> int:
    """Derive a per-epoch stream seed from the run seed."""
    return mix64(mix64(seed & MASK64) ^ (epoch + 1))
