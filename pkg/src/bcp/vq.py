"""Post-hoc vector quantization baseline.

A real matrix X is approximated by alpha * X_b with X_b in {+1, -1} and
alpha > 0; the Frobenius-optimal pair is the elementwise sign of X and
the mean absolute entry. Each factor matrix is quantized independently
and scoring reuses the bitwise kernel with the product of the three
scales in place of delta^3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._bitops import pack_bool_rows
from .binarize import BinaryFactors
from .dense import DenseFactors


@dataclass(frozen=True)
class VqMatrix:
    """Packed sign matrix with a single nonnegative scale."""

    sign_words: np.ndarray
    n_rows: int
    n_cols: int
    alpha: float


def vq_quantize(X: np.ndarray) -> VqMatrix:
    """Closed-form optimum: signs = sign(X) with sign(0) = +1, alpha = mean |X|."""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        raise ValueError("matrix must be nonempty")
    if np.isnan(X).any():
        raise ValueError("cannot quantize NaN entry")
    alpha = float(np.abs(X).mean())
    return VqMatrix(
        sign_words=pack_bool_rows(X >= 0),
        n_rows=X.shape[0],
        n_cols=X.shape[1],
        alpha=alpha,
    )


def vq_reconstruct(m: VqMatrix) -> np.ndarray:
    from ._bitops import unpack_word_rows

    bits = unpack_word_rows(m.sign_words, m.n_cols).astype(np.float64)
    return m.alpha * (2.0 * bits - 1.0)


def vq_apply(f: DenseFactors) -> BinaryFactors:
    """Quantize A, B, C independently; returns a scored binary model."""
    qa = vq_quantize(f.A)
    qb = qa if f.tied else vq_quantize(f.B)
    qc = vq_quantize(f.C)
    b_words = qa.sign_words if f.tied else qb.sign_words
    return BinaryFactors(
        a_words=qa.sign_words,
        b_words=b_words,
        c_words=qc.sign_words,
        dim=f.dim,
        delta=1.0,
        kind=f.kind.binary_kind,
        scales=(qa.alpha, qb.alpha, qc.alpha),
    )
