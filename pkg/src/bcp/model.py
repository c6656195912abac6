"""Shared model kinds and training configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class ModelKind(Enum):
    CP = "cp"
    DISTMULT = "distmult"
    BCP = "bcp"
    BDISTMULT = "bdistmult"

    @property
    def is_binary(self) -> bool:
        return self in (ModelKind.BCP, ModelKind.BDISTMULT)

    @property
    def is_tied(self) -> bool:
        """Subject and object embeddings share one matrix (DistMult family)."""
        return self in (ModelKind.DISTMULT, ModelKind.BDISTMULT)

    @property
    def dense_kind(self) -> "ModelKind":
        """The latent real-valued kind backing this model."""
        return ModelKind.DISTMULT if self.is_tied else ModelKind.CP

    @property
    def binary_kind(self) -> "ModelKind":
        return ModelKind.BDISTMULT if self.is_tied else ModelKind.BCP


@dataclass
class TrainConfig:
    """SGD hyperparameters for CP / DistMult / B-CP / B-DistMult training."""

    dim: int = 200
    eta: float = 0.05
    lambda_a: float = 0.0
    lambda_b: float = 0.0
    lambda_c: float = 0.0
    delta: float = 0.5
    epochs: int = 100
    neg_per_pos: int = 5
    kind: ModelKind = ModelKind.CP
    seed: int = 0
    dtype: str = "float64"

    def __post_init__(self) -> None:
        if isinstance(self.kind, str):
            self.kind = ModelKind(self.kind)
        if self.eta <= 0:
            raise ValueError("learning rate eta must be positive")
        if self.dim < 1:
            raise ValueError("embedding dimension must be at least 1")
        if min(self.lambda_a, self.lambda_b, self.lambda_c) < 0:
            raise ValueError("L2 coefficients must be nonnegative")
        if self.neg_per_pos < 1:
            raise ValueError("neg_per_pos must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.kind.is_binary and not self.delta > 0:
            raise ValueError("delta must be positive for binarized kinds")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be float64 or float32")
