import itertools
import math

import numpy as np
import pytest

from bcp.binarize import BitVector, binarize_row
from bcp.cluster import Dendrogram, binary_euclidean, single_linkage


def bv(bits):
    return binarize_row(np.array([1.0 if b else -1.0 for b in bits]), 0.5)


def random_rows(rng, n, dim):
    return [bv(rng.integers(0, 2, size=dim)) for _ in range(n)]


def naive_single_linkage(rows, delta, k):
    """Reference agglomeration scanning all leaf pairs each step."""
    n = len(rows)
    clusters = {i: {i} for i in range(n)}  # id -> leaf set
    merges = []
    labels_at_k = None

    def dist(a, b):
        return min(
            2.0 * delta * math.sqrt(rows[x].hamming(rows[y]))
            for x in clusters[a] for y in clusters[b]
        )

    def snapshot():
        labs = np.empty(n, dtype=np.int64)
        for lab, (_, group) in enumerate(
            sorted((min(g), g) for g in clusters.values())
        ):
            labs[list(group)] = lab
        return labs

    if k == n:
        labels_at_k = snapshot()
    next_id = n
    while len(clusters) > 1:
        ids = sorted(clusters)
        best = None
        for a, b in itertools.combinations(ids, 2):
            d = dist(a, b)
            if best is None or d < best[0] or (d == best[0] and (a, b) < best[1:]):
                best = (d, a, b)
        d, a, b = best
        merges.append((a, b, d))
        clusters[next_id] = clusters.pop(a) | clusters.pop(b)
        next_id += 1
        if len(clusters) == k:
            labels_at_k = snapshot()
    return merges, labels_at_k


class TestBinaryEuclidean:
    def test_identical_rows(self):
        a = bv([1, 0, 1, 0])
        assert binary_euclidean(a, a, 0.5) == 0.0

    def test_complementary_full_flip(self):
        a = bv([1] * 16)
        b = bv([0] * 16)
        assert binary_euclidean(a, b, 0.5) == 4.0
        # componentwise check: sixteen gaps of size 2*delta
        direct = math.sqrt(sum((0.5 - (-0.5)) ** 2 for _ in range(16)))
        assert binary_euclidean(a, b, 0.5) == direct

    def test_matches_dense_expansion(self, rng):
        for _ in range(50):
            bits_a = rng.integers(0, 2, size=400)
            bits_b = rng.integers(0, 2, size=400)
            a, b = bv(bits_a), bv(bits_b)
            for delta in (0.3, 0.5, 1.0):
                direct = float(np.linalg.norm(a.to_values(delta) - b.to_values(delta)))
                got = binary_euclidean(a, b, delta)
                assert abs(got - direct) <= 1e-12 * max(1.0, direct)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            binary_euclidean(bv([1, 0]), bv([1, 0, 1]), 0.5)

    def test_metric_properties(self, rng):
        rows = random_rows(rng, 12, 32)
        for a, b, c in itertools.combinations(rows, 3):
            dab = binary_euclidean(a, b, 0.5)
            dba = binary_euclidean(b, a, 0.5)
            assert dab == dba
            assert dab >= 0
            dac = binary_euclidean(a, c, 0.5)
            dbc = binary_euclidean(b, c, 0.5)
            assert dac <= dab + dbc + 1e-12

    def test_zero_iff_identical(self, rng):
        a = bv(rng.integers(0, 2, size=64))
        b = BitVector(words=a.words.copy(), nbits=a.nbits)
        assert binary_euclidean(a, b, 0.5) == 0.0
        flipped = BitVector(words=a.words ^ np.uint64(1), nbits=a.nbits)
        assert binary_euclidean(a, flipped, 0.5) > 0.0


class TestSingleLinkage:
    def test_k_equals_n(self, rng):
        rows = random_rows(rng, 6, 16)
        dendro, labels = single_linkage(rows, 0.5, 6)
        assert sorted(labels.tolist()) == list(range(6))
        assert len(dendro.merges) == 5

    def test_k_one_merges_all(self, rng):
        rows = random_rows(rng, 8, 16)
        dendro, labels = single_linkage(rows, 0.5, 1)
        assert len(dendro.merges) == 7
        assert set(labels.tolist()) == {0}

    def test_invalid_k(self, rng):
        rows = random_rows(rng, 4, 8)
        for bad in (0, 5, -1):
            with pytest.raises(ValueError):
                single_linkage(rows, 0.5, bad)

    def test_heights_nondecreasing(self, rng):
        for _ in range(20):
            rows = random_rows(rng, 15, 24)
            dendro, _ = single_linkage(rows, 0.5, 1)
            heights = [h for _, _, h in dendro.merges]
            assert all(a <= b + 1e-12 for a, b in zip(heights, heights[1:]))

    def test_matches_naive_reference(self, rng):
        for trial in range(200):
            n = int(rng.integers(2, 21))
            dim = int(rng.integers(4, 33))
            k = int(rng.integers(1, n + 1))
            rows = random_rows(rng, n, dim)
            dendro, labels = single_linkage(rows, 0.5, k)
            ref_merges, ref_labels = naive_single_linkage(rows, 0.5, k)
            assert [(a, b) for a, b, _ in dendro.merges] == \
                [(a, b) for a, b, _ in ref_merges]
            assert np.allclose([h for _, _, h in dendro.merges],
                               [h for _, _, h in ref_merges])
            assert labels.tolist() == ref_labels.tolist()

    def test_permutation_stability(self, rng):
        # prefix rows at Sidon-set offsets: all pairwise Hamming distances
        # are distinct, so the dendrogram is unique and reorder-stable
        offsets = [0, 1, 3, 7, 12, 20, 30, 44, 65, 80]
        diffs = [abs(a - b) for a, b in itertools.combinations(offsets, 2)]
        assert len(set(diffs)) == len(diffs)
        rows = [bv([1] * t + [0] * (100 - t)) for t in offsets]
        _, labels = single_linkage(rows, 0.5, 3)
        perm = rng.permutation(10)
        _, labels_p = single_linkage([rows[p] for p in perm], 0.5, 3)
        # canonical relabeling: same partition of the underlying rows
        part = {}
        for pos, lab in enumerate(labels_p):
            part.setdefault(lab, set()).add(int(perm[pos]))
        ref = {}
        for pos, lab in enumerate(labels):
            ref.setdefault(lab, set()).add(pos)
        assert set(map(frozenset, part.values())) == \
            set(map(frozenset, ref.values()))

    def test_scale_invariance_of_assignment(self, rng):
        rows = random_rows(rng, 9, 32)
        _, l1 = single_linkage(rows, 0.3, 4)
        _, l2 = single_linkage(rows, 1.0, 4)
        assert l1.tolist() == l2.tolist()
