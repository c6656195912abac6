"""Single-linkage agglomerative clustering of binary embedding rows.

Euclidean distance between two rows of +delta/-delta components reduces
to 2 * delta * sqrt(hamming), so merges are driven by popcounts. Merge
ids follow the usual convention: leaves are 0..n-1 and the t-th merge
creates cluster n+t. Equal-distance pairs are broken by the smallest
(id_a, id_b) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._bitops import hamming_rows
from .binarize import BitVector


@dataclass
class Dendrogram:
    """Merge triples (id_a, id_b, height) with nondecreasing heights."""

    merges: list[tuple[int, int, float]]
    n_leaves: int


def binary_euclidean(p: BitVector, q: BitVector, delta: float) -> float:
    """2 * delta * sqrt(hamming distance)."""
    if p.nbits != q.nbits:
        raise ValueError("bit lengths differ")
    return 2.0 * delta * math.sqrt(p.hamming(q))


def single_linkage(
    rows: Sequence[BitVector], delta: float, k: int
) -> tuple[Dendrogram, np.ndarray]:
    """Agglomerate rows by minimum pairwise distance.

    Returns the full dendrogram and the labels at the k-cluster cut,
    numbered by each cluster's smallest leaf.
    """
    n = len(rows)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    nbits = rows[0].nbits
    words = np.stack([r.words for r in rows])
    if any(r.nbits != nbits for r in rows):
        raise ValueError("rows must share one bit length")

    ham = np.empty((n, n), dtype=np.float64)
    for lo in range(0, n, 128):
        hi = min(lo + 128, n)
        ham[lo:hi] = hamming_rows(words[lo:hi, None, :], words[None, :, :])
    dist = 2.0 * delta * np.sqrt(ham)
    np.fill_diagonal(dist, np.inf)

    cluster_id = list(range(n))          # per active slot
    members: list[list[int]] = [[i] for i in range(n)]
    active = np.ones(n, dtype=bool)
    merges: list[tuple[int, int, float]] = []
    labels_at_k: np.ndarray | None = None
    if k == n:
        labels_at_k = _labels(members, active, n)

    next_id = n
    for _ in range(n - 1):
        masked = np.where(active[:, None] & active[None, :], dist, np.inf)
        dmin = masked.min()
        pairs = np.argwhere(masked == dmin)
        pairs = pairs[pairs[:, 0] < pairs[:, 1]]
        best = min(
            (tuple(sorted((cluster_id[a], cluster_id[b]))), (a, b))
            for a, b in pairs
        )
        (id_a, id_b), (sa, sb) = best
        merges.append((id_a, id_b, float(dmin)))
        # single linkage: distance of the merged cluster is the row minimum
        merged_row = np.minimum(dist[sa], dist[sb])
        dist[sa, :] = merged_row
        dist[:, sa] = merged_row
        dist[sa, sa] = np.inf
        active[sb] = False
        members[sa] = members[sa] + members[sb]
        cluster_id[sa] = next_id
        next_id += 1
        if int(active.sum()) == k:
            labels_at_k = _labels(members, active, n)

    assert labels_at_k is not None
    return Dendrogram(merges=merges, n_leaves=n), labels_at_k


def _labels(members: list[list[int]], active: np.ndarray, n: int) -> np.ndarray:
    groups = sorted(
        (min(members[s]), members[s]) for s in range(len(active)) if active[s]
    )
    labels = np.empty(n, dtype=np.int64)
    for lab, (_, group) in enumerate(groups):
        labels[group] = lab
    return labels
