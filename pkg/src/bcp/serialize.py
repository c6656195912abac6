"""Binary model files.

Dense file (magic ``BCPD``): u32 version, u8 kind, u64 N_e, u64 N_r,
u64 D, then A, B (omitted when aliased), C as row-major little-endian
f64. Binary file (magic ``BCPB``): same header plus f64 delta (and three
f64 per-matrix scales for vector-quantized kinds), then bit-packed rows
of ceil(D/64) little-endian u64 words each, A then B (unless aliased)
then C. Round trips are bit-exact.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from ._bitops import words_per_row
from .binarize import BinaryFactors
from .dense import DenseFactors
from .model import ModelKind

DENSE_MAGIC = b"BCPD"
BINARY_MAGIC = b"BCPB"
VERSION = 1

_KIND_BYTES = {
    (ModelKind.CP, False): 0,
    (ModelKind.DISTMULT, False): 1,
    (ModelKind.BCP, False): 2,
    (ModelKind.BDISTMULT, False): 3,
    (ModelKind.BCP, True): 4,
    (ModelKind.BDISTMULT, True): 5,
}
_KIND_FROM_BYTE = {v: k for k, v in _KIND_BYTES.items()}

_HEADER = struct.Struct("<4sIB QQQ")


class FormatError(ValueError):
    """Unreadable or mismatched model file."""


def dense_header_bytes() -> int:
    return _HEADER.size


def binary_header_bytes(vq: bool = False) -> int:
    return _HEADER.size + 8 + (24 if vq else 0)


def save_dense(path: str | os.PathLike, f: DenseFactors) -> None:
    kind_byte = _KIND_BYTES[(f.kind, False)]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DENSE_MAGIC, VERSION, kind_byte,
                              f.n_entities, f.n_relations, f.dim))
        fh.write(np.ascontiguousarray(f.A, dtype="<f8").tobytes())
        if not f.tied:
            fh.write(np.ascontiguousarray(f.B, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(f.C, dtype="<f8").tobytes())


def load_dense(path: str | os.PathLike) -> DenseFactors:
    with open(path, "rb") as fh:
        magic, version, kind_byte, ne, nr, dim = _read_header(fh, path)
        if magic != DENSE_MAGIC:
            raise FormatError(f"{path}: not a dense model file")
        kind, _ = _decode_kind(kind_byte, path)
        if kind not in (ModelKind.CP, ModelKind.DISTMULT):
            raise FormatError(f"{path}: binary kind in dense file")
        a = _read_f64(fh, ne * dim, path).reshape(ne, dim)
        b = a if kind is ModelKind.DISTMULT else _read_f64(fh, ne * dim, path).reshape(ne, dim)
        c = _read_f64(fh, nr * dim, path).reshape(nr, dim)
        _expect_eof(fh, path)
    return DenseFactors(A=a, B=b, C=c, kind=kind)


def save_binary(path: str | os.PathLike, f: BinaryFactors) -> None:
    kind_byte = _KIND_BYTES[(f.kind, f.scales is not None)]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BINARY_MAGIC, VERSION, kind_byte,
                              f.n_entities, f.n_relations, f.dim))
        fh.write(struct.pack("<d", f.delta))
        if f.scales is not None:
            fh.write(struct.pack("<3d", *f.scales))
        fh.write(np.ascontiguousarray(f.a_words, dtype="<u8").tobytes())
        if not f.tied:
            fh.write(np.ascontiguousarray(f.b_words, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(f.c_words, dtype="<u8").tobytes())


def load_binary(path: str | os.PathLike) -> BinaryFactors:
    with open(path, "rb") as fh:
        magic, version, kind_byte, ne, nr, dim = _read_header(fh, path)
        if magic != BINARY_MAGIC:
            raise FormatError(f"{path}: not a binary model file")
        kind, vq = _decode_kind(kind_byte, path)
        if kind not in (ModelKind.BCP, ModelKind.BDISTMULT):
            raise FormatError(f"{path}: dense kind in binary file")
        (delta,) = struct.unpack("<d", _read_exact(fh, 8, path))
        scales = None
        if vq:
            scales = struct.unpack("<3d", _read_exact(fh, 24, path))
        nw = words_per_row(dim)
        a = _read_u64(fh, ne * nw, path).reshape(ne, nw)
        b = a if kind is ModelKind.BDISTMULT else _read_u64(fh, ne * nw, path).reshape(ne, nw)
        c = _read_u64(fh, nr * nw, path).reshape(nr, nw)
        _expect_eof(fh, path)
    return BinaryFactors(a_words=a, b_words=b, c_words=c, dim=dim,
                         delta=delta, kind=kind, scales=scales)


def _read_header(fh, path):
    data = _read_exact(fh, _HEADER.size, path)
    magic, version, kind_byte, ne, nr, dim = _HEADER.unpack(data)
    if magic not in (DENSE_MAGIC, BINARY_MAGIC):
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    return magic, version, kind_byte, ne, nr, dim


def _decode_kind(kind_byte: int, path) -> tuple[ModelKind, bool]:
    try:
        return _KIND_FROM_BYTE[kind_byte]
    except KeyError:
        raise FormatError(f"{path}: unknown model kind byte {kind_byte}") from None


def _read_exact(fh, n: int, path) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"{path}: truncated file")
    return data


def _read_f64(fh, count: int, path) -> np.ndarray:
    return np.frombuffer(_read_exact(fh, count * 8, path), dtype="<f8").astype(
        np.float64, copy=True
    )


def _read_u64(fh, count: int, path) -> np.ndarray:
    return np.frombuffer(_read_exact(fh, count * 8, path), dtype="<u8").astype(
        np.uint64, copy=True
    )


def _expect_eof(fh, path) -> None:
    if fh.read(1):
        raise FormatError(f"{path}: trailing bytes after model body")


def load_model(path: str | os.PathLike):
    """Load either file flavor by magic."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == DENSE_MAGIC:
        return load_dense(path)
    if magic == BINARY_MAGIC:
        return load_binary(path)
    raise FormatError(f"{path}: bad magic {magic!r}")
