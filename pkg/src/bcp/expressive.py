"""Exact constructive binary encoder for arbitrary boolean tensors.

For any X in {0,1}^(Ne x Ne x Nr) there is an exact binary CP model with
D = 8 * Ne * Nr and component magnitude 1/2. Rows are built from four
4-dimensional blocks

    p = [+d, +d, -d, -d]   q = [+d, -d, +d, -d]   r = [+d, +d, +d, +d]

and -r. Block index gamma runs over [1, 2*Ne*Nr]; a *page* is a run of
2*Ne consecutive blocks (one per relation), split into two *halfpages*
of Ne blocks. The subject rows repeat p/q patterns with period Ne, the
object rows copy tensor slices into both halfpages, and the relation
rows are r on first halfpages and on their own page, -r elsewhere.
The construction keeps the paper-facing 1-based addressing algebra in
EncoderLayout; everything else uses 0-based indices.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._bitops import pack_bool_rows, unpack_word_rows
from .binarize import BinaryFactors
from .model import ModelKind


class BlockCode(Enum):
    P = "p"
    Q = "q"
    R = "r"
    NEG_R = "-r"

    @property
    def bits(self) -> tuple[int, int, int, int]:
        return _BLOCK_BITS[self]

    def values(self, delta: float) -> np.ndarray:
        return (2.0 * np.array(self.bits, dtype=np.float64) - 1.0) * delta


_BLOCK_BITS = {
    BlockCode.P: (1, 1, 0, 0),
    BlockCode.Q: (1, 0, 1, 0),
    BlockCode.R: (1, 1, 1, 1),
    BlockCode.NEG_R: (0, 0, 0, 0),
}
_BITS_TO_BLOCK = {v: k for k, v in _BLOCK_BITS.items()}


@dataclass(frozen=True)
class EncoderLayout:
    """Block addressing for the constructive encoder (1-based algebra).

    alpha(k, m) = 2*Ne*(k-1) + m is the m-th block of the first halfpage
    of page k; beta(k, m) = alpha(k, m) + Ne the m-th block of the second
    halfpage. iota/kappa recover (m, k) from a linear block index.
    """

    n_entities: int
    n_relations: int

    @property
    def n_blocks(self) -> int:
        return 2 * self.n_entities * self.n_relations

    @property
    def dim(self) -> int:
        return 4 * self.n_blocks

    def alpha(self, k: int, m: int) -> int:
        return 2 * self.n_entities * (k - 1) + m

    def beta(self, k: int, m: int) -> int:
        return self.alpha(k, m) + self.n_entities

    def iota(self, gamma: int) -> int:
        return ((gamma - 1) % (2 * self.n_entities)) % self.n_entities + 1

    def kappa(self, gamma: int) -> int:
        return (gamma - 1) // (2 * self.n_entities) + 1


def _block_table(layout: EncoderLayout, X: np.ndarray):
    """Block codes for every row, as (rows, n_blocks) arrays of BlockCode."""
    ne, nr = layout.n_entities, layout.n_relations
    nb = layout.n_blocks
    g1 = np.arange(1, nb + 1)

    # subject rows: p where the block position matches the entity, else q
    a_cond = (g1[None, :] % ne) == (np.arange(1, ne + 1)[:, None] % ne)

    # object rows: p where the addressed tensor cell is set, else r
    iota0 = ((g1 - 1) % (2 * ne)) % ne
    kappa0 = (g1 - 1) // (2 * ne)
    b_cond = X[iota0[None, :], np.arange(ne)[:, None], kappa0[None, :]] == 1

    # relation rows: r on first halfpages and on the own page, else -r
    first_half = ((g1 - 1) % (2 * ne)) < ne
    own_page = kappa0[None, :] + 1 == np.arange(1, nr + 1)[:, None]
    c_cond = first_half[None, :] | own_page
    return a_cond, b_cond, c_cond


def encode(X: np.ndarray, delta: float = 0.5) -> BinaryFactors:
    """Build the exact binary factorization of a boolean tensor.

    Output dimension is 8 * Ne * Nr; scores reproduce X exactly when
    delta = 1/2 (other deltas scale all scores by (2*delta)^3).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    X = np.asarray(X)
    if X.ndim != 3 or X.shape[0] != X.shape[1]:
        raise ValueError("tensor must have shape (Ne, Ne, Nr)")
    if not np.isin(X, (0, 1)).all():
        raise ValueError("tensor entries must be 0 or 1")
    X = X.astype(np.int64)
    ne, _, nr = X.shape
    layout = EncoderLayout(ne, nr)
    a_cond, b_cond, c_cond = _block_table(layout, X)

    p, q, r = BlockCode.P.bits, BlockCode.Q.bits, BlockCode.R.bits
    neg_r = BlockCode.NEG_R.bits
    a_bits = np.where(a_cond[:, :, None], np.array(p), np.array(q))
    b_bits = np.where(b_cond[:, :, None], np.array(p), np.array(r))
    c_bits = np.where(c_cond[:, :, None], np.array(r), np.array(neg_r))

    dim = layout.dim
    return BinaryFactors(
        a_words=pack_bool_rows(a_bits.reshape(ne, dim)),
        b_words=pack_bool_rows(b_bits.reshape(ne, dim)),
        c_words=pack_bool_rows(c_bits.reshape(nr, dim)),
        dim=dim,
        delta=delta,
        kind=ModelKind.BCP,
    )


@dataclass
class VerifyReport:
    n_scores: int
    mismatches: list[tuple[int, int, int, float, int]]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def verify_reconstruction(factors: BinaryFactors, X: np.ndarray) -> VerifyReport:
    """Score every cell through the bitwise kernel and compare with X."""
    X = np.asarray(X)
    ne, _, nr = X.shape
    if factors.n_entities != ne or factors.n_relations != nr:
        raise ValueError(
            f"factor shape ({factors.n_entities}, {factors.n_relations}) "
            f"does not match tensor shape ({ne}, {nr})"
        )
    if factors.delta != 0.5:
        warnings.warn(
            "exact 0/1 reconstruction requires delta = 1/2; "
            f"scores are scaled by (2*delta)^3 = {(2 * factors.delta) ** 3:g}"
        )
    mismatches = []
    for i in range(ne):
        for k in range(nr):
            got = factors.score_objects(i, k)
            for j in range(ne):
                if got[j] != float(X[i, j, k]):
                    mismatches.append((i, j, k, float(got[j]), int(X[i, j, k])))
    return VerifyReport(n_scores=ne * ne * nr, mismatches=mismatches)


def _codes_for(factors: BinaryFactors, words: np.ndarray, n_blocks: int):
    bits = unpack_word_rows(words, factors.dim)
    rows = bits.reshape(bits.shape[0], n_blocks, 4)
    return rows


def check_lemma_structure(factors: BinaryFactors, layout: EncoderLayout) -> list[str]:
    """Structural checks on an encode() output; returns violation messages.

    Covers the block periodicities of the subject/object/relation rows,
    the paired cancellation of foreign-page halfblocks, the vanishing of
    every term outside the two designated blocks, and the two-block score
    decomposition.
    """
    ne, nr = layout.n_entities, layout.n_relations
    nb = layout.n_blocks
    delta = factors.delta
    a_blk = _codes_for(factors, factors.a_words, nb)
    b_blk = _codes_for(factors, factors.b_words, nb)
    c_blk = _codes_for(factors, factors.c_words, nb)
    code = {bc: np.array(bc.bits) for bc in BlockCode}

    problems: list[str] = []

    def block(mat, row, gamma1):
        return mat[row, gamma1 - 1]

    def val(bits4):
        return (2.0 * bits4.astype(np.float64) - 1.0) * delta

    def term(i, j, k, gamma1):
        a = val(block(a_blk, i - 1, gamma1))
        b = val(block(b_blk, j - 1, gamma1))
        c = val(block(c_blk, k - 1, gamma1))
        return float(np.dot(a * b, c))

    # (a) subject rows repeat with period Ne
    for i in range(1, ne + 1):
        for gamma in range(1, (2 * nr - 1) * ne + 1):
            if not np.array_equal(block(a_blk, i - 1, gamma),
                                  block(a_blk, i - 1, gamma + ne)):
                problems.append(f"(a) subject row {i} differs at blocks {gamma}, {gamma + ne}")
    # (b)/(c) p at the own block, q elsewhere in the halfpage
    for i in range(1, ne + 1):
        for k in range(1, nr + 1):
            if not np.array_equal(block(a_blk, i - 1, layout.alpha(k, i)), code[BlockCode.P]):
                problems.append(f"(b) subject row {i} lacks p at alpha({k}, {i})")
            for m in range(1, ne + 1):
                if m == i:
                    continue
                if not np.array_equal(block(a_blk, i - 1, layout.alpha(k, m)), code[BlockCode.Q]):
                    problems.append(f"(c) subject row {i} lacks q at alpha({k}, {m})")
    # (d) object halfpages agree
    for j in range(1, ne + 1):
        for k in range(1, nr + 1):
            for m in range(1, ne + 1):
                if not np.array_equal(block(b_blk, j - 1, layout.alpha(k, m)),
                                      block(b_blk, j - 1, layout.beta(k, m))):
                    problems.append(f"(d) object row {j} halfpages differ at ({k}, {m})")
    # (e) relation rows are r across their own page
    for k in range(1, nr + 1):
        for m in range(1, ne + 1):
            if not (
                np.array_equal(block(c_blk, k - 1, layout.alpha(k, m)), code[BlockCode.R])
                and np.array_equal(block(c_blk, k - 1, layout.beta(k, m)), code[BlockCode.R])
            ):
                problems.append(f"(e) relation row {k} is not r on its own page at m={m}")
    # (f) sign flip across halfpages of foreign pages
    for k in range(1, nr + 1):
        for n2 in range(1, nr + 1):
            if n2 == k:
                continue
            for m in range(1, ne + 1):
                av = block(c_blk, k - 1, layout.alpha(n2, m))
                bv = block(c_blk, k - 1, layout.beta(n2, m))
                if not np.array_equal(val(av), -val(bv)):
                    problems.append(f"(f) relation row {k} not sign-flipped on page {n2}, m={m}")
    # paired foreign-page terms cancel
    for i in range(1, ne + 1):
        for j in range(1, ne + 1):
            for k in range(1, nr + 1):
                for n2 in range(1, nr + 1):
                    if n2 == k:
                        continue
                    for m in range(1, ne + 1):
                        s = term(i, j, k, layout.alpha(n2, m)) + term(i, j, k, layout.beta(n2, m))
                        if s != 0.0:
                            problems.append(
                                f"pair sum not zero at (i,j,k)=({i},{j},{k}), page {n2}, m={m}"
                            )
    # every term off the two designated blocks sums to zero
    for i in range(1, ne + 1):
        for j in range(1, ne + 1):
            for k in range(1, nr + 1):
                skip = {layout.alpha(k, i), layout.beta(k, i)}
                rem = sum(term(i, j, k, g) for g in range(1, nb + 1) if g not in skip)
                if rem != 0.0:
                    problems.append(f"remainder sum {rem} at (i,j,k)=({i},{j},{k})")
                total = factors.score_one(i - 1, j - 1, k - 1)
                lead = 2.0 * term(i, j, k, layout.alpha(k, i))
                if total != lead:
                    problems.append(
                        f"score {total} != doubled leading term {lead} at ({i},{j},{k})"
                    )
    return problems


def exhaustive_tensors(ne: int, nr: int):
    """Yield every boolean tensor of shape (ne, ne, nr)."""
    cells = ne * ne * nr
    for bitsmask in range(1 << cells):
        flat = np.fromiter(
            ((bitsmask >> c) & 1 for c in range(cells)), dtype=np.int64, count=cells
        )
        yield flat.reshape(ne, ne, nr)
