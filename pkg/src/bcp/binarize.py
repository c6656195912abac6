"""Sign quantization, bit-packed binary factors, and bitwise scoring.

Quantization maps each real entry to +delta (x >= 0) or -delta. Packed
rows store bit d of a row in word d // 64 at position d % 64; a set bit
encodes +delta. The fast score is delta^3 * (D - 2 * BitC) where BitC is
the Hamming distance between the subject row and the XNOR of the object
and relation rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from . import _kernels_numpy as _numpy_kernels
from ._bitops import pack_bool_rows, tail_mask, unpack_word_rows, words_per_row
from .dense import DenseFactors
from .model import ModelKind, TrainConfig


@dataclass(frozen=True)
class BitVector:
    """Bit-packed row; set bits encode +delta components, tail bits are zero."""

    words: np.ndarray
    nbits: int

    def __post_init__(self) -> None:
        words = np.ascontiguousarray(self.words, dtype=np.uint64).reshape(-1)
        object.__setattr__(self, "words", words)
        if len(words) != words_per_row(self.nbits):
            raise ValueError("word count does not match bit length")
        if np.any(words & ~tail_mask(self.nbits)):
            raise ValueError("tail bits past nbits must be zero")

    def __len__(self) -> int:
        return self.nbits

    def to_bools(self) -> np.ndarray:
        return unpack_word_rows(self.words, self.nbits)[0].astype(bool)

    def to_values(self, delta: float) -> np.ndarray:
        """Expand to a float vector of +delta / -delta components."""
        bits = unpack_word_rows(self.words, self.nbits)[0].astype(np.float64)
        return (2.0 * bits - 1.0) * delta

    def hamming(self, other: "BitVector") -> int:
        if self.nbits != other.nbits:
            raise ValueError("bit lengths differ")
        return int(np.bitwise_count(self.words ^ other.words).sum())


def quantize(x: float, delta: float) -> float:
    """+delta if x >= 0 else -delta."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if math.isnan(x):
        raise ValueError("cannot quantize NaN")
    return delta if x >= 0 else -delta


def binarize_row(v: np.ndarray, delta: float) -> BitVector:
    """Componentwise sign quantization packed into a BitVector."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    v = np.asarray(v, dtype=np.float64)
    if np.isnan(v).any():
        raise ValueError("cannot quantize NaN component")
    return BitVector(words=pack_bool_rows(v >= 0)[0], nbits=v.shape[-1])


@dataclass
class BinaryFactors:
    """Bit-packed factor matrices with a scale; B aliases A for B-DistMult.

    ``scales`` carries per-matrix magnitudes (vector-quantized models);
    when absent every component has magnitude ``delta``.
    """

    a_words: np.ndarray
    b_words: np.ndarray
    c_words: np.ndarray
    dim: int
    delta: float
    kind: ModelKind
    scales: tuple[float, float, float] | None = None
    mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in (ModelKind.BCP, ModelKind.BDISTMULT):
            raise ValueError("binary factors are kind B-CP or B-DistMult")
        if self.kind is ModelKind.BDISTMULT and self.b_words is not self.a_words:
            raise ValueError("B-DistMult requires object bits to alias subject bits")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        nw = words_per_row(self.dim)
        for name in ("a_words", "b_words", "c_words"):
            arr = getattr(self, name)
            if arr.ndim != 2 or arr.shape[1] != nw:
                raise ValueError(f"{name} must have {nw} words per row")
        self.mask = tail_mask(self.dim)

    @property
    def n_entities(self) -> int:
        return self.a_words.shape[0]

    @property
    def n_relations(self) -> int:
        return self.c_words.shape[0]

    @property
    def tied(self) -> bool:
        return self.b_words is self.a_words

    @property
    def scale_triple(self) -> tuple[float, float, float]:
        return self.scales if self.scales is not None else (self.delta,) * 3

    @property
    def scale_product(self) -> float:
        sa, sb, sc = self.scale_triple
        return sa * sb * sc

    def a_row(self, i: int) -> BitVector:
        return BitVector(words=self.a_words[i].copy(), nbits=self.dim)

    def b_row(self, j: int) -> BitVector:
        return BitVector(words=self.b_words[j].copy(), nbits=self.dim)

    def c_row(self, k: int) -> BitVector:
        return BitVector(words=self.c_words[k].copy(), nbits=self.dim)

    def _check(self, i: int, j: int, k: int) -> None:
        if not (0 <= i < self.n_entities and 0 <= j < self.n_entities):
            raise IndexError(f"entity index out of bounds: ({i}, {j})")
        if not 0 <= k < self.n_relations:
            raise IndexError(f"relation index out of bounds: {k}")

    # scorer protocol
    def score_one(self, i: int, j: int, k: int) -> float:
        self._check(i, j, k)
        return float(backend.kernels.bitwise_score_one(
            self.a_words, self.b_words, self.c_words, self.mask,
            self.dim, self.scale_product, i, j, k,
        ))

    def score_many(self, ii, jj, kk) -> np.ndarray:
        return backend.kernels.bitwise_score_many(
            self.a_words, self.b_words, self.c_words, self.mask,
            self.dim, self.scale_product,
            np.asarray(ii, dtype=np.int64),
            np.asarray(jj, dtype=np.int64),
            np.asarray(kk, dtype=np.int64),
        )

    def score_objects(self, i: int, k: int) -> np.ndarray:
        return backend.kernels.bitwise_score_objects(
            self.a_words, self.b_words, self.c_words, self.mask,
            self.dim, self.scale_product, i, k,
        )

    def score_subjects(self, j: int, k: int) -> np.ndarray:
        return backend.kernels.bitwise_score_subjects(
            self.a_words, self.b_words, self.c_words, self.mask,
            self.dim, self.scale_product, j, k,
        )


def score_binary_float(f: BinaryFactors, i: int, j: int, k: int) -> float:
    """Reference score: unpack rows to signed values and dot them.

    Kept independent of the bitwise kernel; used as its oracle.
    """
    f._check(i, j, k)
    sa, sb, sc = f.scale_triple
    a = _unpack_signed(f.a_words[i], f.dim, sa)
    b = _unpack_signed(f.b_words[j], f.dim, sb)
    c = _unpack_signed(f.c_words[k], f.dim, sc)
    return float(np.dot(a * b, c))


def _unpack_signed(words: np.ndarray, nbits: int, scale: float) -> np.ndarray:
    bits = unpack_word_rows(words, nbits)[0].astype(np.float64)
    return (2.0 * bits - 1.0) * scale


def score_bitwise(f: BinaryFactors, i: int, j: int, k: int) -> float:
    """XNOR/popcount score: scale^3 * (D - 2 * BitC)."""
    return f.score_one(i, j, k)


def ste_grad_step(
    real_factors: DenseFactors, i: int, j: int, k: int, x: int, config: TrainConfig
) -> None:
    """Straight-through SGD step on the latent real rows.

    The forward score uses the sign-quantized rows; the data gradient flows
    through the quantizer as identity (binarized vectors in the data term,
    real rows in the L2 term).
    """
    if not config.delta > 0:
        raise ValueError("delta must be set for STE training")
    real_factors._check(i, j, k)
    _numpy_kernels._ste_step(
        real_factors.A, real_factors.B, real_factors.C, i, j, k, float(x),
        config.eta, config.lambda_a, config.lambda_b, config.lambda_c,
        config.delta,
    )


def freeze(real_factors: DenseFactors, delta: float) -> BinaryFactors:
    """Materialize the binarized model from latent real factors."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    a_bits = pack_bool_rows(real_factors.A >= 0)
    b_bits = a_bits if real_factors.tied else pack_bool_rows(real_factors.B >= 0)
    c_bits = pack_bool_rows(real_factors.C >= 0)
    return BinaryFactors(
        a_words=a_bits,
        b_words=b_bits,
        c_words=c_bits,
        dim=real_factors.dim,
        delta=delta,
        kind=real_factors.kind.binary_kind,
    )


def unpack_to_dense(f: BinaryFactors) -> DenseFactors:
    """Expand a binary model to dense factors with the same scores."""
    sa, sb, sc = f.scale_triple
    a = np.stack([_unpack_signed(w, f.dim, sa) for w in f.a_words])
    if f.tied:
        b = a
    else:
        b = np.stack([_unpack_signed(w, f.dim, sb) for w in f.b_words])
    c = np.stack([_unpack_signed(w, f.dim, sc) for w in f.c_words])
    kind = ModelKind.DISTMULT if f.tied else ModelKind.CP
    return DenseFactors(A=a, B=b, C=c, kind=kind)
