"""Numba-compiled kernel implementations (default backend).

Scoring and per-epoch SGD loops run as nopython code. The SplitMix64
stream mirrors ``_rng`` bit for bit so sampling matches the numpy backend.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NAME = "numba"

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_S30, _S27, _S31 = U64(30), U64(27), U64(31)

_P1 = U64(0x5555555555555555)
_P2 = U64(0x3333333333333333)
_P4 = U64(0x0F0F0F0F0F0F0F0F)
_PH = U64(0x0101010101010101)
_S1, _S2, _S4, _S56 = U64(1), U64(2), U64(4), U64(56)


@njit(cache=True, inline="always")
def _next_u64(state):
    state = state + _GAMMA
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return state, z


@njit(cache=True, inline="always")
def _popcount(v):
    v = v - ((v >> _S1) & _P1)
    v = (v & _P2) + ((v >> _S2) & _P2)
    v = (v + (v >> _S4)) & _P4
    return (v * _PH) >> _S56


@njit(cache=True, inline="always")
def _sigmoid(t):
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@njit(cache=True, inline="always")
def _softplus(z):
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


# --- dense scoring ---

@njit(cache=True)
def dense_score_one(A, B, C, i, j, k):
    s = 0.0
    for d in range(A.shape[1]):
        s += A[i, d] * B[j, d] * C[k, d]
    return s


@njit(cache=True)
def dense_score_many(A, B, C, ii, jj, kk):
    out = np.empty(ii.shape[0], dtype=np.float64)
    for t in range(ii.shape[0]):
        out[t] = dense_score_one(A, B, C, ii[t], jj[t], kk[t])
    return out


@njit(cache=True)
def dense_score_objects(A, B, C, i, k):
    ne = B.shape[0]
    out = np.empty(ne, dtype=np.float64)
    for m in range(ne):
        s = 0.0
        for d in range(A.shape[1]):
            s += A[i, d] * B[m, d] * C[k, d]
        out[m] = s
    return out


@njit(cache=True)
def dense_score_subjects(A, B, C, j, k):
    ne = A.shape[0]
    out = np.empty(ne, dtype=np.float64)
    for m in range(ne):
        s = 0.0
        for d in range(A.shape[1]):
            s += A[m, d] * B[j, d] * C[k, d]
        out[m] = s
    return out


# --- bitwise scoring ---
# BitC = popcount(mask & ~(a ^ b ^ c)); mask applied after the complement.

@njit(cache=True, inline="always")
def _bitc_rows(Aw, Bw, Cw, mask, i, j, k):
    bitc = U64(0)
    for w in range(Aw.shape[1]):
        bitc += _popcount(~(Aw[i, w] ^ Bw[j, w] ^ Cw[k, w]) & mask[w])
    return bitc


@njit(cache=True)
def bitwise_score_one(Aw, Bw, Cw, mask, nbits, scale3, i, j, k):
    bitc = _bitc_rows(Aw, Bw, Cw, mask, i, j, k)
    return scale3 * (np.float64(nbits) - 2.0 * np.float64(bitc))


@njit(cache=True)
def bitwise_score_many(Aw, Bw, Cw, mask, nbits, scale3, ii, jj, kk):
    out = np.empty(ii.shape[0], dtype=np.float64)
    fn = np.float64(nbits)
    for t in range(ii.shape[0]):
        bitc = _bitc_rows(Aw, Bw, Cw, mask, ii[t], jj[t], kk[t])
        out[t] = scale3 * (fn - 2.0 * np.float64(bitc))
    return out


@njit(cache=True)
def bitwise_score_objects(Aw, Bw, Cw, mask, nbits, scale3, i, k):
    ne = Bw.shape[0]
    nw = Aw.shape[1]
    out = np.empty(ne, dtype=np.float64)
    fixed = np.empty(nw, dtype=np.uint64)
    for w in range(nw):
        fixed[w] = Aw[i, w] ^ Cw[k, w]
    fn = np.float64(nbits)
    for m in range(ne):
        bitc = U64(0)
        for w in range(nw):
            bitc += _popcount(~(fixed[w] ^ Bw[m, w]) & mask[w])
        out[m] = scale3 * (fn - 2.0 * np.float64(bitc))
    return out


@njit(cache=True)
def bitwise_score_subjects(Aw, Bw, Cw, mask, nbits, scale3, j, k):
    ne = Aw.shape[0]
    nw = Aw.shape[1]
    out = np.empty(ne, dtype=np.float64)
    fixed = np.empty(nw, dtype=np.uint64)
    for w in range(nw):
        fixed[w] = Bw[j, w] ^ Cw[k, w]
    fn = np.float64(nbits)
    for m in range(ne):
        bitc = U64(0)
        for w in range(nw):
            bitc += _popcount(~(fixed[w] ^ Aw[m, w]) & mask[w])
        out[m] = scale3 * (fn - 2.0 * np.float64(bitc))
    return out


# --- training ---

@njit(cache=True)
def shuffle_indices(n, seed):
    state = seed
    order = np.arange(n)
    for t in range(n - 1, 0, -1):
        state, r = _next_u64(state)
        s = np.int64(r % U64(t + 1))
        tmp = order[t]
        order[t] = order[s]
        order[s] = tmp
    return order


@njit(cache=True, inline="always")
def _is_known(keys, i, j, k, une, unr):
    key = (U64(i) * une + U64(j)) * unr + U64(k)
    pos = np.searchsorted(keys, key)
    return pos < keys.shape[0] and keys[pos] == key


@njit(cache=True, inline="always")
def _dense_step(A, B, C, i, j, k, x, eta, la, lb, lc, ga, gb, gc):
    theta = 0.0
    for d in range(A.shape[1]):
        theta += A[i, d] * B[j, d] * C[k, d]
    g = _sigmoid(theta) - x
    # gradients from pre-update values; A and B may alias (DistMult)
    for d in range(A.shape[1]):
        ga[d] = g * B[j, d] * C[k, d] + 2.0 * la * A[i, d]
        gb[d] = g * A[i, d] * C[k, d] + 2.0 * lb * B[j, d]
        gc[d] = g * A[i, d] * B[j, d] + 2.0 * lc * C[k, d]
    for d in range(A.shape[1]):
        A[i, d] -= eta * ga[d]
        B[j, d] -= eta * gb[d]
        C[k, d] -= eta * gc[d]
    if x == 1.0:
        return _softplus(-theta)
    return _softplus(theta)


@njit(cache=True, inline="always")
def _ste_step(A, B, C, i, j, k, x, eta, la, lb, lc, delta, qa, qb, qc, ga, gb, gc):
    for d in range(A.shape[1]):
        qa[d] = delta if A[i, d] >= 0.0 else -delta
        qb[d] = delta if B[j, d] >= 0.0 else -delta
        qc[d] = delta if C[k, d] >= 0.0 else -delta
    theta = 0.0
    for d in range(A.shape[1]):
        theta += qa[d] * qb[d] * qc[d]
    g = _sigmoid(theta) - x
    # straight-through: data term uses binarized rows, L2 the real rows
    for d in range(A.shape[1]):
        ga[d] = g * qb[d] * qc[d] + 2.0 * la * A[i, d]
        gb[d] = g * qa[d] * qc[d] + 2.0 * lb * B[j, d]
        gc[d] = g * qa[d] * qb[d] + 2.0 * lc * C[k, d]
    for d in range(A.shape[1]):
        A[i, d] -= eta * ga[d]
        B[j, d] -= eta * gb[d]
        C[k, d] -= eta * gc[d]
    if x == 1.0:
        return _softplus(-theta)
    return _softplus(theta)


@njit(cache=True)
def train_epoch_dense(A, B, C, triples, train_keys, ne, nr, eta, la, lb, lc,
                      neg_per_pos, seed):
    n = triples.shape[0]
    order = shuffle_indices(n, seed)
    state, _ = _next_u64(seed)
    dim = A.shape[1]
    ga = np.empty(dim, dtype=np.float64)
    gb = np.empty(dim, dtype=np.float64)
    gc = np.empty(dim, dtype=np.float64)
    une, unr = U64(ne), U64(nr)
    loss_sum = 0.0
    for t in range(n):
        idx = order[t]
        i, j, k = triples[idx, 0], triples[idx, 1], triples[idx, 2]
        loss_sum += _dense_step(A, B, C, i, j, k, 1.0, eta, la, lb, lc, ga, gb, gc)
        for _neg in range(neg_per_pos):
            state, r = _next_u64(state)
            jn = np.int64(r % une)
            tries = 0
            while tries < 100 and _is_known(train_keys, i, jn, k, une, unr):
                state, r = _next_u64(state)
                jn = np.int64(r % une)
                tries += 1
            loss_sum += _dense_step(A, B, C, i, jn, k, 0.0, eta, la, lb, lc, ga, gb, gc)
    return loss_sum / (n * (1 + neg_per_pos))


@njit(cache=True)
def train_epoch_ste(A, B, C, triples, train_keys, ne, nr, eta, la, lb, lc,
                    neg_per_pos, delta, seed):
    n = triples.shape[0]
    order = shuffle_indices(n, seed)
    state, _ = _next_u64(seed)
    dim = A.shape[1]
    qa = np.empty(dim, dtype=np.float64)
    qb = np.empty(dim, dtype=np.float64)
    qc = np.empty(dim, dtype=np.float64)
    ga = np.empty(dim, dtype=np.float64)
    gb = np.empty(dim, dtype=np.float64)
    gc = np.empty(dim, dtype=np.float64)
    une, unr = U64(ne), U64(nr)
    loss_sum = 0.0
    for t in range(n):
        idx = order[t]
        i, j, k = triples[idx, 0], triples[idx, 1], triples[idx, 2]
        loss_sum += _ste_step(A, B, C, i, j, k, 1.0, eta, la, lb, lc, delta,
                              qa, qb, qc, ga, gb, gc)
        for _neg in range(neg_per_pos):
            state, r = _next_u64(state)
            jn = np.int64(r % une)
            tries = 0
            while tries < 100 and _is_known(train_keys, i, jn, k, une, unr):
                state, r = _next_u64(state)
                jn = np.int64(r % une)
                tries += 1
            loss_sum += _ste_step(A, B, C, i, jn, k, 0.0, eta, la, lb, lc, delta,
                                  qa, qb, qc, ga, gb, gc)
    return loss_sum / (n * (1 + neg_per_pos))


# --- benchmark payloads ---

@njit(cache=True)
def bench_dense(A, B, C, ii, jj, kk):
    acc = 0.0
    for t in range(ii.shape[0]):
        i, j, k = ii[t], jj[t], kk[t]
        s = 0.0
        for d in range(A.shape[1]):
            s += A[i, d] * B[j, d] * C[k, d]
        acc += s
    return acc


@njit(cache=True)
def bench_bitwise(Aw, Bw, Cw, mask, nbits, scale3, ii, jj, kk):
    acc = 0.0
    fn = np.float64(nbits)
    for t in range(ii.shape[0]):
        bitc = _bitc_rows(Aw, Bw, Cw, mask, ii[t], jj[t], kk[t])
        acc += scale3 * (fn - 2.0 * np.float64(bitc))
    return acc
