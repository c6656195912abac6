"""Real-valued CP and DistMult models: scoring, loss, SGD training.

The score of a triple is the rank-D trilinear form sum_d a_id b_jd c_kd.
Training minimizes the logistic loss with L2 regularization by per-triple
SGD with negative sampling; the loss and data gradient use the
numerically stable softplus / (sigmoid(theta) - x) forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from . import _kernels_numpy as _numpy_kernels
from ._rng import epoch_seed
from .model import ModelKind, TrainConfig
from .triples import TripleStore


class TrainingDiverged(RuntimeError):
    """Raised when the epoch loss becomes non-finite."""


def sigmoid(t: float) -> float:
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def softplus(z: float) -> float:
    """log(1 + exp(z)) without overflow."""
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


def logistic_loss(x: int, theta: float) -> float:
    """-x log sigma(theta) + (x - 1) log(1 - sigma(theta)), stably."""
    return softplus(-theta) if x else softplus(theta)


@dataclass
class DenseFactors:
    """Factor matrices A, B, C; B is the same array as A for DistMult."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    kind: ModelKind

    def __post_init__(self) -> None:
        if self.kind not in (ModelKind.CP, ModelKind.DISTMULT):
            raise ValueError("dense factors are kind CP or DistMult")
        if self.kind is ModelKind.DISTMULT and self.B is not self.A:
            raise ValueError("DistMult requires B to alias A")

    @property
    def n_entities(self) -> int:
        return self.A.shape[0]

    @property
    def n_relations(self) -> int:
        return self.C.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def tied(self) -> bool:
        return self.B is self.A

    def copy(self) -> "DenseFactors":
        a = self.A.copy()
        b = a if self.tied else self.B.copy()
        return DenseFactors(A=a, B=b, C=self.C.copy(), kind=self.kind)

    def all_finite(self) -> bool:
        return bool(
            np.isfinite(self.A).all()
            and np.isfinite(self.C).all()
            and (self.tied or np.isfinite(self.B).all())
        )

    def _check(self, i: int, j: int, k: int) -> None:
        if not (0 <= i < self.n_entities and 0 <= j < self.n_entities):
            raise IndexError(f"entity index out of bounds: ({i}, {j})")
        if not 0 <= k < self.n_relations:
            raise IndexError(f"relation index out of bounds: {k}")

    # scorer protocol
    def score_one(self, i: int, j: int, k: int) -> float:
        self._check(i, j, k)
        return float(backend.kernels.dense_score_one(self.A, self.B, self.C, i, j, k))

    def score_many(self, ii, jj, kk) -> np.ndarray:
        return backend.kernels.dense_score_many(
            self.A, self.B, self.C,
            np.asarray(ii, dtype=np.int64),
            np.asarray(jj, dtype=np.int64),
            np.asarray(kk, dtype=np.int64),
        )

    def score_objects(self, i: int, k: int) -> np.ndarray:
        return backend.kernels.dense_score_objects(self.A, self.B, self.C, i, k)

    def score_subjects(self, j: int, k: int) -> np.ndarray:
        return backend.kernels.dense_score_subjects(self.A, self.B, self.C, j, k)


def init_factors(
    config: TrainConfig, n_e: int, n_r: int, rng: np.random.Generator
) -> DenseFactors:
    """Uniform init on [-sqrt(6)/sqrt(2D), +sqrt(6)/sqrt(2D)]."""
    if n_e < 1 or n_r < 1:
        raise ValueError("entity and relation counts must be positive")
    dim = config.dim
    bound = math.sqrt(6.0) / math.sqrt(2.0 * dim)
    dtype = np.dtype(config.dtype)
    kind = config.kind.dense_kind
    a = rng.uniform(-bound, bound, size=(n_e, dim)).astype(dtype)
    b = a if kind is ModelKind.DISTMULT else rng.uniform(
        -bound, bound, size=(n_e, dim)
    ).astype(dtype)
    c = rng.uniform(-bound, bound, size=(n_r, dim)).astype(dtype)
    return DenseFactors(A=a, B=b, C=c, kind=kind)


def score(f: DenseFactors, i: int, j: int, k: int) -> float:
    """sum_d a_id * b_jd * c_kd."""
    f._check(i, j, k)
    return float(np.dot(f.A[i] * f.B[j], f.C[k]))


def grad_step(
    f: DenseFactors, i: int, j: int, k: int, x: int, config: TrainConfig
) -> None:
    """One SGD update of rows a_i, b_j, c_k toward label x.

    All three partial gradients are evaluated at the pre-update values and
    then applied together.
    """
    f._check(i, j, k)
    _numpy_kernels._dense_step(
        f.A, f.B, f.C, i, j, k, float(x),
        config.eta, config.lambda_a, config.lambda_b, config.lambda_c,
    )


def sample_negatives(
    store: TripleStore,
    positive: tuple[int, int, int],
    n: int,
    rng: np.random.Generator,
) -> list[tuple[int, int, int]]:
    """Object-side corruptions (i, j', k) under the local closed-world assumption.

    j' is uniform over all entities; draws that hit a known training fact
    are resampled up to 100 times and then accepted as-is.
    """
    if n < 1:
        raise ValueError("need at least one negative")
    i, _, k = positive
    ne, nr = store.n_entities, store.n_relations
    keys = store.train_keys
    out = []
    for _ in range(n):
        j = int(rng.integers(ne))
        tries = 0
        while tries < 100 and _in_sorted(keys, (i * ne + j) * nr + k):
            j = int(rng.integers(ne))
            tries += 1
        out.append((i, j, k))
    return out


def _in_sorted(keys: np.ndarray, key: int) -> bool:
    pos = int(np.searchsorted(keys, np.uint64(key)))
    return pos < len(keys) and int(keys[pos]) == key


def train(
    store: TripleStore,
    config: TrainConfig,
    callback=None,
    validate_every: int = 20,
) -> DenseFactors:
    """SGD-train factors on the train split.

    Each epoch shuffles the training triples; every positive gets one
    x=1 step followed by ``neg_per_pos`` x=0 steps on sampled corruptions.
    When a validation split is present, filtered MRR is computed every
    ``validate_every`` epochs and the best-scoring factors are returned;
    otherwise the final factors are. For binarized kinds the update is the
    straight-through step and validation scores the frozen binary model.

    ``callback(epoch, mean_loss, val_mrr_or_None)`` is invoked per epoch.
    """
    triples = store.splits["train"]
    if not len(triples):
        raise ValueError("train split is empty")
    rng = np.random.default_rng(config.seed)
    factors = init_factors(config, store.n_entities, store.n_relations, rng)
    kern = backend.kernels
    binary = config.kind.is_binary
    has_valid = len(store.splits["valid"]) > 0

    best: DenseFactors | None = None
    best_mrr = -math.inf
    for epoch in range(config.epochs):
        seed = _seed_for(config.seed, epoch)
        if binary:
            loss = kern.train_epoch_ste(
                factors.A, factors.B, factors.C, triples, store.train_keys,
                store.n_entities, store.n_relations,
                config.eta, config.lambda_a, config.lambda_b, config.lambda_c,
                config.neg_per_pos, config.delta, seed,
            )
        else:
            loss = kern.train_epoch_dense(
                factors.A, factors.B, factors.C, triples, store.train_keys,
                store.n_entities, store.n_relations,
                config.eta, config.lambda_a, config.lambda_b, config.lambda_c,
                config.neg_per_pos, seed,
            )
        loss = float(loss)
        if not math.isfinite(loss):
            raise TrainingDiverged(
                f"non-finite training loss at epoch {epoch + 1}; "
                "reduce eta or increase regularization"
            )
        val_mrr = None
        last = epoch == config.epochs - 1
        if has_valid and (epoch % validate_every == validate_every - 1 or last):
            val_mrr = _validation_mrr(factors, store, config)
            if val_mrr > best_mrr:
                best_mrr = val_mrr
                best = factors.copy()
        if callback is not None:
            callback(epoch, loss, val_mrr)
    if best is not None:
        return best
    return factors


def _seed_for(seed: int, epoch: int):
    s = epoch_seed(seed, epoch)
    return np.uint64(s) if backend.name == "numba" else s


def _validation_mrr(factors: DenseFactors, store: TripleStore, config: TrainConfig) -> float:
    from .binarize import freeze
    from .evaluate import evaluate_ranking

    scorer = freeze(factors, config.delta) if config.kind.is_binary else factors
    return evaluate_ranking(scorer, store, split="valid").mrr
