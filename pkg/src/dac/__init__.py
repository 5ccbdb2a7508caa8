"""Aligned pseudo-label clustering for discovering new categories.

The package pre-trains a small trainable head on the labeled slice of a
dataset, optionally estimates how many clusters exist, then alternates
k-means pseudo-labeling with self-supervised training, matching each
round's centroids to the previous round's by minimum-cost assignment so
classifier outputs keep their meaning across rounds.
"""

from .alignment import AlignmentMapping, align_centroids, hungarian, remap_labels
from .data import (
    BadMagicError,
    FileFormatError,
    NonFiniteError,
    PayloadMismatchError,
    SplitDataset,
    TruncatedPayloadError,
    UnsupportedVersionError,
    gen_synthetic,
    load_features,
    load_labels,
    make_split,
    save_features,
    save_labels,
)
from .encoder import (
    DivergenceError,
    EncoderModel,
    TrainConfig,
    cross_entropy,
    encode,
    grad_step,
    init_model,
    load_model,
    logits,
    pretrain,
    save_model,
    with_classifier,
)
from .estimation import DegenerateClusterCountError, estimate_k
from .kmeans import ClusterModel, assign, kmeans, objective
from .metrics import acc, ari, k_error, nmi, silhouette
from .pipeline import RoundRecord, RunConfig, TrainHistory, reinit_ablation_run, run

__version__ = "0.1.0"

__all__ = [
    "AlignmentMapping",
    "BadMagicError",
    "ClusterModel",
    "DegenerateClusterCountError",
    "DivergenceError",
    "EncoderModel",
    "FileFormatError",
    "NonFiniteError",
    "PayloadMismatchError",
    "RoundRecord",
    "RunConfig",
    "SplitDataset",
    "TrainConfig",
    "TrainHistory",
    "TruncatedPayloadError",
    "UnsupportedVersionError",
    "acc",
    "align_centroids",
    "ari",
    "assign",
    "cross_entropy",
    "encode",
    "estimate_k",
    "gen_synthetic",
    "grad_step",
    "hungarian",
    "init_model",
    "k_error",
    "kmeans",
    "load_features",
    "load_labels",
    "load_model",
    "logits",
    "make_split",
    "nmi",
    "objective",
    "pretrain",
    "reinit_ablation_run",
    "remap_labels",
    "run",
    "save_features",
    "save_labels",
    "save_model",
    "silhouette",
    "with_classifier",
]
