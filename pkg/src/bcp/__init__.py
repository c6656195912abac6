"""Knowledge-graph completion with CP decomposition and binarized embeddings."""

from .model import ModelKind, TrainConfig
from .triples import (
    ParseError,
    TripleStore,
    Vocab,
    augment_inverse,
    load_dataset,
    load_triples,
    write_triples,
)
from .dense import (
    DenseFactors,
    TrainingDiverged,
    grad_step,
    init_factors,
    logistic_loss,
    sample_negatives,
    score,
    train,
)
from .binarize import (
    BinaryFactors,
    BitVector,
    binarize_row,
    freeze,
    quantize,
    score_binary_float,
    score_bitwise,
    ste_grad_step,
)
from .vq import VqMatrix, vq_apply, vq_quantize
from .expressive import EncoderLayout, check_lemma_structure, encode, verify_reconstruction
from .evaluate import (
    PrAucReport,
    RankReport,
    bench_scoring,
    evaluate_pr_auc,
    evaluate_ranking,
    filtered_rank,
)
from .cluster import Dendrogram, binary_euclidean, single_linkage
from .serialize import load_binary, load_dense, load_model, save_binary, save_dense

__version__ = "0.1.0"

__all__ = [
    "ModelKind", "TrainConfig",
    "ParseError", "TripleStore", "Vocab", "augment_inverse", "load_dataset",
    "load_triples", "write_triples",
    "DenseFactors", "TrainingDiverged", "grad_step", "init_factors",
    "logistic_loss", "sample_negatives", "score", "train",
    "BinaryFactors", "BitVector", "binarize_row", "freeze", "quantize",
    "score_binary_float", "score_bitwise", "ste_grad_step",
    "VqMatrix", "vq_apply", "vq_quantize",
    "EncoderLayout", "check_lemma_structure", "encode", "verify_reconstruction",
    "PrAucReport", "RankReport", "bench_scoring", "evaluate_pr_auc",
    "evaluate_ranking", "filtered_rank",
    "Dendrogram", "binary_euclidean", "single_linkage",
    "load_binary", "load_dense", "load_model", "save_binary", "save_dense",
    "__version__",
]
