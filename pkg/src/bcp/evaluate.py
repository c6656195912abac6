"""Filtered-ranking evaluation, PR-AUC, and the scoring throughput benchmark.

A scorer is anything with ``n_entities``, ``score_objects(i, k)``,
``score_subjects(j, k)`` and ``score_many(ii, jj, kk)``; both factor
classes qualify. Each test triple is ranked twice, corrupting the object
and the subject; candidates that form known facts other than the test
triple are filtered out and ties receive the mid-rank.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import backend
from ._bitops import pack_bool_rows, tail_mask
from .triples import TripleStore

DEFAULT_HITS = (1, 3, 10)


@dataclass
class RankReport:
    mrr: float
    hits: dict[int, float]
    n_queries: int

    def rows(self) -> list[tuple[str, float]]:
        out = [("mrr", self.mrr)]
        out += [(f"hits@{n}", v) for n, v in sorted(self.hits.items())]
        out.append(("n_queries", self.n_queries))
        return out


@dataclass
class PrAucReport:
    auc: float
    n_pos: int
    n_neg: int

    def rows(self) -> list[tuple[str, float]]:
        return [("pr_auc", self.auc), ("n_pos", self.n_pos), ("n_neg", self.n_neg)]


def filtered_rank(scorer, store: TripleStore, triple, side: str) -> float:
    """Mid-rank of the true triple among filtered one-side corruptions.

    rank = 1 + #{competitors scoring strictly higher}
             + #{competitors tying}/2
    where competitors are candidate replacements that do not form a known
    fact (the test triple itself is scored but never a competitor).
    """
    i, j, k = (int(v) for v in triple)
    if side == "object":
        scores = scorer.score_objects(i, k)
        known = store.known_objects_mask(i, k)
        true_idx = j
    elif side == "subject":
        scores = scorer.score_subjects(j, k)
        known = store.known_subjects_mask(j, k)
        true_idx = i
    else:
        raise ValueError("side must be 'subject' or 'object'")
    s_true = scores[true_idx]
    competitor = ~known
    competitor[true_idx] = False
    comp_scores = scores[competitor]
    greater = int(np.count_nonzero(comp_scores > s_true))
    equal = int(np.count_nonzero(comp_scores == s_true))
    return 1.0 + greater + 0.5 * equal


def evaluate_ranking(
    scorer,
    store: TripleStore,
    split: str = "test",
    hits_at: tuple[int, ...] = DEFAULT_HITS,
) -> RankReport:
    """Filtered MRR and Hits@N over both corruption sides of a split."""
    triples = store.splits[split]
    if not len(triples):
        raise ValueError(f"{split} split is empty")
    rr_sum = 0.0
    hit_counts = {n: 0 for n in hits_at}
    n_q = 0
    for triple in triples:
        for side in ("object", "subject"):
            rank = filtered_rank(scorer, store, triple, side)
            rr_sum += 1.0 / rank
            for n in hits_at:
                if rank <= n:
                    hit_counts[n] += 1
            n_q += 1
    return RankReport(
        mrr=rr_sum / n_q,
        hits={n: hit_counts[n] / n_q for n in hits_at},
        n_queries=n_q,
    )


def random_scorer_mrr(store: TripleStore, split: str = "test") -> float:
    """Exact expected filtered MRR of a continuous random scorer.

    With m filtered candidates the true triple ranks uniformly on [1, m],
    so each query contributes H_m / m in expectation.
    """
    exp, _ = _random_scorer_moments(store, split)
    return exp


def _random_scorer_moments(store: TripleStore, split: str) -> tuple[float, float]:
    """Mean and variance of the random-scorer MRR over a split."""
    triples = store.splits[split]
    if not len(triples):
        raise ValueError(f"{split} split is empty")
    e_sum = 0.0
    var_sum = 0.0
    n_q = 0
    for i, j, k in triples:
        for side in ("object", "subject"):
            if side == "object":
                known = store.known_objects_mask(int(i), int(k))
            else:
                known = store.known_subjects_mask(int(j), int(k))
            m = store.n_entities - int(np.count_nonzero(known)) + 1
            ranks = np.arange(1, m + 1, dtype=np.float64)
            e = float((1.0 / ranks).mean())
            e2 = float((1.0 / ranks**2).mean())
            e_sum += e
            var_sum += e2 - e * e
            n_q += 1
    return e_sum / n_q, var_sum / (n_q * n_q)


def pr_auc_from_scores(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Step-wise area under the precision-recall curve.

    Thresholds sweep the distinct score values in descending order; tied
    scores enter together. Area is sum of precision * recall-increment,
    with no interpolation between steps.
    """
    pos_scores = np.asarray(pos_scores, dtype=np.float64)
    neg_scores = np.asarray(neg_scores, dtype=np.float64)
    n_pos = len(pos_scores)
    scores = np.concatenate([pos_scores, neg_scores])
    labels = np.concatenate([
        np.ones(n_pos, dtype=np.int64),
        np.zeros(len(neg_scores), dtype=np.int64),
    ])
    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    labels = labels[order]
    tp = np.cumsum(labels)
    count = np.arange(1, len(scores) + 1)
    # last index of each tie group
    boundary = np.nonzero(np.diff(scores) != 0)[0]
    last = np.concatenate([boundary, [len(scores) - 1]])
    precision = tp[last] / count[last]
    recall = tp[last] / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum(precision * (recall - prev_recall)))


def sample_unknown_triples(
    store: TripleStore, count: int, rng: np.random.Generator, max_tries: int = 10_000
) -> np.ndarray:
    """Uniform triples absent from the known-fact index."""
    out = np.empty((count, 3), dtype=np.int64)
    ne, nr = store.n_entities, store.n_relations
    for t in range(count):
        for _ in range(max_tries):
            i = int(rng.integers(ne))
            j = int(rng.integers(ne))
            k = int(rng.integers(nr))
            if not store.is_known_fact(i, j, k):
                out[t] = (i, j, k)
                break
        else:
            raise RuntimeError(
                "could not sample an unknown triple; tensor is nearly complete"
            )
    return out


def evaluate_pr_auc(
    scorer, store: TripleStore, rng: np.random.Generator, split: str = "test"
) -> PrAucReport:
    """PR-AUC of the split against equally many generated unknown triples."""
    pos = store.splits[split]
    if not len(pos):
        raise ValueError(f"{split} split is empty")
    neg = sample_unknown_triples(store, len(pos), rng)
    pos_scores = scorer.score_many(pos[:, 0], pos[:, 1], pos[:, 2])
    neg_scores = scorer.score_many(neg[:, 0], neg[:, 1], neg[:, 2])
    return PrAucReport(
        auc=pr_auc_from_scores(pos_scores, neg_scores),
        n_pos=len(pos),
        n_neg=len(neg),
    )


@dataclass
class BenchRow:
    dim: int
    float_ns: float
    bitwise_ns: float
    extra: dict[str, float] = field(default_factory=dict)


def _bench_pools(dim: int, reps: int, rng: np.random.Generator, n_rows: int = 1024):
    bound = np.sqrt(3.0 / dim)
    A = rng.uniform(-bound, bound, size=(n_rows, dim))
    B = rng.uniform(-bound, bound, size=(n_rows, dim))
    C = rng.uniform(-bound, bound, size=(n_rows, dim))
    packed = [pack_bool_rows(M >= 0) for M in (A, B, C)]
    idx = rng.integers(0, n_rows, size=(3, reps)).astype(np.int64)
    return A, B, C, packed, idx


def bench_scoring(
    dims,
    reps: int = 100_000,
    seed: int = 0,
    compare_backends: bool = False,
) -> list[BenchRow]:
    """Per-score wall-clock cost of dense float vs bitwise scoring.

    Single-threaded; one untimed warmup call per kernel covers JIT
    compilation. With ``compare_backends`` the numpy kernels are timed
    alongside the active backend.
    """
    if reps < 10_000:
        raise ValueError("need at least 10^4 reps for stable timing")
    delta = 0.5
    rows = []
    impls = [("", backend.kernels)]
    if compare_backends:
        from . import _kernels_numpy
        if backend.kernels is not _kernels_numpy:
            impls.append(("numpy_", _kernels_numpy))
    rng = np.random.default_rng(seed)
    for dim in dims:
        A, B, C, (Aw, Bw, Cw), idx = _bench_pools(dim, reps, rng)
        mask = tail_mask(dim)
        scale3 = delta * delta * delta
        ii, jj, kk = idx
        timings: dict[str, float] = {}
        for prefix, kern in impls:
            kern.bench_dense(A, B, C, ii[:128], jj[:128], kk[:128])
            t0 = time.perf_counter_ns()
            kern.bench_dense(A, B, C, ii, jj, kk)
            timings[prefix + "float_ns"] = (time.perf_counter_ns() - t0) / reps
            kern.bench_bitwise(Aw, Bw, Cw, mask, dim, scale3, ii[:128], jj[:128], kk[:128])
            t0 = time.perf_counter_ns()
            kern.bench_bitwise(Aw, Bw, Cw, mask, dim, scale3, ii, jj, kk)
            timings[prefix + "bitwise_ns"] = (time.perf_counter_ns() - t0) / reps
        rows.append(BenchRow(
            dim=dim,
            float_ns=timings.pop("float_ns"),
            bitwise_ns=timings.pop("bitwise_ns"),
            extra=timings,
        ))
    return rows
