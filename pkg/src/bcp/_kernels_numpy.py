"""Pure-numpy kernel implementations.

Fallback backend selected by ``BCP_BACKEND=numpy`` (or when numba is not
importable). Scoring is vectorized; the training loop is a per-triple Python
loop over vectorized row updates, sampling from the same SplitMix64 stream
as the numba twin so both backends visit identical triples.
"""

from __future__ import annotations

import math

import numpy as np

from ._bitops import popcount
from ._rng import next_u64

NAME = "numpy"

_CHUNK = 16384


def _sigmoid(t: float) -> float:
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _softplus(z: float) -> float:
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


# --- dense scoring ---

def dense_score_one(A, B, C, i, j, k) -> float:
    return float(np.dot(A[i] * B[j], C[k]))


def dense_score_many(A, B, C, ii, jj, kk) -> np.ndarray:
    out = np.empty(len(ii), dtype=np.float64)
    for lo in range(0, len(ii), _CHUNK):
        hi = min(lo + _CHUNK, len(ii))
        out[lo:hi] = np.einsum(
            "nd,nd,nd->n", A[ii[lo:hi]], B[jj[lo:hi]], C[kk[lo:hi]],
            dtype=np.float64,
        )
    return out


def dense_score_objects(A, B, C, i, k) -> np.ndarray:
    return B.astype(np.float64, copy=False) @ (
        A[i].astype(np.float64) * C[k].astype(np.float64)
    )


def dense_score_subjects(A, B, C, j, k) -> np.ndarray:
    return A.astype(np.float64, copy=False) @ (
        B[j].astype(np.float64) * C[k].astype(np.float64)
    )


# --- bitwise scoring ---
# BitC = popcount(mask & ~(a ^ b ^ c)); the complement must be masked, not
# the inputs, or tail bits would inflate the count.

def _bitc_words(x: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return popcount(np.bitwise_and(np.bitwise_not(x), mask)).sum(axis=-1)


def bitwise_score_one(Aw, Bw, Cw, mask, nbits, scale3, i, j, k) -> float:
    bitc = int(_bitc_words(Aw[i] ^ Bw[j] ^ Cw[k], mask))
    return scale3 * (nbits - 2 * bitc)


def bitwise_score_many(Aw, Bw, Cw, mask, nbits, scale3, ii, jj, kk) -> np.ndarray:
    out = np.empty(len(ii), dtype=np.float64)
    for lo in range(0, len(ii), _CHUNK):
        hi = min(lo + _CHUNK, len(ii))
        x = Aw[ii[lo:hi]] ^ Bw[jj[lo:hi]] ^ Cw[kk[lo:hi]]
        out[lo:hi] = scale3 * (nbits - 2.0 * _bitc_words(x, mask))
    return out


def bitwise_score_objects(Aw, Bw, Cw, mask, nbits, scale3, i, k) -> np.ndarray:
    x = np.bitwise_xor(Bw, Aw[i] ^ Cw[k])
    return scale3 * (nbits - 2.0 * _bitc_words(x, mask))


def bitwise_score_subjects(Aw, Bw, Cw, mask, nbits, scale3, j, k) -> np.ndarray:
    x = np.bitwise_xor(Aw, Bw[j] ^ Cw[k])
    return scale3 * (nbits - 2.0 * _bitc_words(x, mask))


# --- training ---

def shuffle_indices(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates permutation of arange(n) driven by the SplitMix stream."""
    state = seed
    order = np.arange(n, dtype=np.int64)
    for t in range(n - 1, 0, -1):
        state, r = next_u64(state)
        s = r % (t + 1)
        order[t], order[s] = order[s], order[t]
    return order


def _is_known(keys: np.ndarray, i: int, j: int, k: int, ne: int, nr: int) -> bool:
    key = (i * ne + j) * nr + k
    pos = int(np.searchsorted(keys, np.uint64(key)))
    return pos < len(keys) and int(keys[pos]) == key


def draw_negatives(state, i, k, ne, nr, train_keys, count):
    """Draw `count` corrupted objects, resampling known facts up to 100 times."""
    out = np.empty(count, dtype=np.int64)
    for t in range(count):
        state, r = next_u64(state)
        j = r % ne
        tries = 0
        while tries < 100 and _is_known(train_keys, i, j, k, ne, nr):
            state, r = next_u64(state)
            j = r % ne
            tries += 1
        out[t] = j
    return state, out


def _dense_step(A, B, C, i, j, k, x, eta, la, lb, lc) -> float:
    a, b, c = A[i], B[j], C[k]
    theta = float(np.dot(a * b, c))
    g = _sigmoid(theta) - x
    ga = g * (b * c) + (2.0 * la) * a
    gb = g * (a * c) + (2.0 * lb) * b
    gc = g * (a * b) + (2.0 * lc) * c
    A[i] -= eta * ga
    B[j] -= eta * gb
    C[k] -= eta * gc
    return _softplus(-theta) if x == 1.0 else _softplus(theta)


def _ste_step(A, B, C, i, j, k, x, eta, la, lb, lc, delta) -> float:
    a, b, c = A[i], B[j], C[k]
    qa = np.where(a >= 0, delta, -delta)
    qb = np.where(b >= 0, delta, -delta)
    qc = np.where(c >= 0, delta, -delta)
    theta = float(np.dot(qa * qb, qc))
    g = _sigmoid(theta) - x
    ga = g * (qb * qc) + (2.0 * la) * a
    gb = g * (qa * qc) + (2.0 * lb) * b
    gc = g * (qa * qb) + (2.0 * lc) * c
    A[i] -= eta * ga
    B[j] -= eta * gb
    C[k] -= eta * gc
    return _softplus(-theta) if x == 1.0 else _softplus(theta)


def train_epoch_dense(A, B, C, triples, train_keys, ne, nr, eta, la, lb, lc,
                      neg_per_pos, seed) -> float:
    n = triples.shape[0]
    order = shuffle_indices(n, seed)
    state, _ = next_u64(seed)
    loss_sum = 0.0
    for idx in order:
        i, j, k = (int(v) for v in triples[idx])
        loss_sum += _dense_step(A, B, C, i, j, k, 1.0, eta, la, lb, lc)
        state, negs = draw_negatives(state, i, k, ne, nr, train_keys, neg_per_pos)
        for jn in negs:
            loss_sum += _dense_step(A, B, C, i, int(jn), k, 0.0, eta, la, lb, lc)
    return loss_sum / (n * (1 + neg_per_pos))


def train_epoch_ste(A, B, C, triples, train_keys, ne, nr, eta, la, lb, lc,
                    neg_per_pos, delta, seed) -> float:
    n = triples.shape[0]
    order = shuffle_indices(n, seed)
    state, _ = next_u64(seed)
    loss_sum = 0.0
    for idx in order:
        i, j, k = (int(v) for v in triples[idx])
        loss_sum += _ste_step(A, B, C, i, j, k, 1.0, eta, la, lb, lc, delta)
        state, negs = draw_negatives(state, i, k, ne, nr, train_keys, neg_per_pos)
        for jn in negs:
            loss_sum += _ste_step(A, B, C, i, int(jn), k, 0.0, eta, la, lb, lc, delta)
    return loss_sum / (n * (1 + neg_per_pos))


# --- benchmark payloads ---

def bench_dense(A, B, C, ii, jj, kk) -> float:
    return float(dense_score_many(A, B, C, ii, jj, kk).sum())


def bench_bitwise(Aw, Bw, Cw, mask, nbits, scale3, ii, jj, kk) -> float:
    return float(bitwise_score_many(Aw, Bw, Cw, mask, nbits, scale3, ii, jj, kk).sum())
