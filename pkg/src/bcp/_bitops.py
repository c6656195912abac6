"""Word-level bit packing helpers shared by the binary model and kernels.

Packing convention: logical bit d of a row lives in word d // 64 at bit
position d % 64 (LSB-first). Bits at positions >= the logical length are
always zero in the last word.
"""

from __future__ import annotations

import numpy as np

WORD_BITS = 64
_ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def words_per_row(nbits: int) -> int:
    return (nbits + WORD_BITS - 1) // WORD_BITS


def tail_mask(nbits: int) -> np.ndarray:
    """Per-word AND mask that zeroes bits at positions >= nbits."""
    if nbits < 1:
        raise ValueError("nbits must be positive")
    n_words = words_per_row(nbits)
    mask = np.full(n_words, _ALL_ONES, dtype=np.uint64)
    rem = nbits % WORD_BITS
    if rem:
        mask[-1] = np.uint64((1 << rem) - 1)
    return mask


def pack_bool_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a (n, nbits) boolean array into (n, words) uint64, tail zeroed."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim == 1:
        bits = bits[None, :]
    n, nbits = bits.shape
    n_words = words_per_row(nbits)
    padded = np.zeros((n, n_words * WORD_BITS), dtype=np.uint8)
    padded[:, :nbits] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_word_rows(words: np.ndarray, nbits: int) -> np.ndarray:
    """Inverse of pack_bool_rows; returns a (n, nbits) uint8 array."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    if words.ndim == 1:
        words = words[None, :]
    as_bytes = words.astype("<u8").view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :nbits]


def popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words)


def hamming_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamming distance along the last axis of two packed word arrays."""
    return popcount(np.bitwise_xor(a, b)).sum(axis=-1)
