"""End-to-end orchestration of aligned pseudo-label clustering.

A run executes: (1) pre-train the head on the labeled subset; (2) fix the
cluster count K, either given or estimated from over-provisioned k-means;
(3) alternate rounds of k-means pseudo-labeling, centroid alignment
against the previous round, and one self-supervised training pass over
all samples with the aligned pseudo-labels; (4) cluster the best round's
features once more for the final model.  Rounds are scored with the
silhouette coefficient, which drives both checkpoint selection and
patience-based early stopping.

Seed derivation (relied on by reproduction tests): per-round k-means and
the final clustering use ``cfg.seed`` unchanged, the persistent classifier
is initialized from ``cfg.train.seed + 1_000_003`` (the reinit-ablation
arm re-draws it each round r from that value plus r), and epoch shuffling
consumes a generator seeded with ``cfg.train.seed + 7919``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .alignment import align_centroids, remap_labels
from .data import SplitDataset
from .encoder import (
    DivergenceError,
    EncoderModel,
    TrainConfig,
    encode,
    grad_step,
    pretrain,
    with_classifier,
)
from .estimation import estimate_k
from .kmeans import ClusterModel, kmeans
from .metrics import silhouette

log = logging.getLogger(__name__)

_CLASSIFIER_SALT = 1_000_003
_SHUFFLE_SALT = 7919


@dataclass(frozen=True)
class RunConfig:
    """Pipeline settings.

    Exactly one of ``k`` (known cluster count) or ``k_prime``
    (over-provisioned count for estimation) must be set.
    ``estimate_on_pretrained=False`` estimates on raw instead of encoded
    features, for ablation.
    """

    k: int | None = None
    k_prime: int | None = None
    max_rounds: int = 100
    patience: int = 10
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    estimate_on_pretrained: bool = True
    estimate_restarts: int = 10
    round_learning_rate: float | None = None

    def __post_init__(self):
        if self.patience > self.max_rounds:
            raise ValueError("patience must not exceed max_rounds")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")

    @property
    def round_train(self) -> TrainConfig:
        """Training config for the self-supervised rounds.

        ``round_learning_rate`` overrides the pre-training rate: the
        pseudo-label stage favors a gentler rate, since each round
        continues from an already-good representation and large steps let
        the pseudo-label/feature feedback loop oscillate.
        """
        if self.round_learning_rate is None:
            return self.train
        return replace(self.train, learning_rate=self.round_learning_rate)


@dataclass(frozen=True)
class RoundRecord:
    silhouette: float
    kmeans_objective: float
    label_change_fraction: float
    alignment_cost: float


@dataclass(frozen=True)
class TrainHistory:
    """One record per completed round, plus which round won."""

    rounds: tuple[RoundRecord, ...]
    best_round: int
    k_used: int
    k_predicted: int | None


def run(data: SplitDataset, cfg: RunConfig) -> tuple[EncoderModel, ClusterModel, TrainHistory]:
    """Full pipeline with centroid alignment (the reference arm)."""
    return _run(data, cfg, align=True)


def reinit_ablation_run(
    data: SplitDataset, cfg: RunConfig
) -> tuple[EncoderModel, ClusterModel, TrainHistory]:
    """Ablation arm: raw pseudo-labels and a re-randomized classifier per round.

    No alignment is performed, so pseudo-label indices are free to permute
    between rounds and the classifier cannot accumulate; its parameters
    are re-drawn before every round's training pass.
    """
    return _run(data, cfg, align=False)


def _run(data: SplitDataset, cfg: RunConfig, align: bool):
    if (cfg.k is None) == (cfg.k_prime is None):
        raise ValueError("set exactly one of k or k_prime")

    model = pretrain(data, cfg.train)
    feats = data.features

    k_predicted = None
    if cfg.k is not None:
        k_used = cfg.k
    else:
        est_input = encode(model, feats) if cfg.estimate_on_pretrained else feats
        k_predicted = estimate_k(
            est_input, cfg.k_prime, cfg.seed, n_restarts=cfg.estimate_restarts
        )
        k_used = k_predicted
        log.info("estimated cluster count: %d (from k_prime=%d)", k_used, cfg.k_prime)
    if k_used < 2:
        raise ValueError(f"cluster count must be at least 2, got {k_used}")

    # The classifier is created once with K outputs and persists across
    # rounds; keeping its output units meaningful is what alignment buys.
    model = with_classifier(model, k_used, seed=cfg.train.seed + _CLASSIFIER_SALT)
    shuffle_rng = np.random.default_rng(cfg.train.seed + _SHUFFLE_SALT)

    rounds: list[RoundRecord] = []
    best_sc = -math.inf
    best_model = model
    best_round = 0
    stale = 0
    stored_centroids = None
    prev_labels = None

    for rnd in range(1, cfg.max_rounds + 1):
        encoded = encode(model, feats)
        cm = kmeans(encoded, k_used, seed=cfg.seed)

        if align and stored_centroids is not None:
            mapping = align_centroids(stored_centroids, cm.centroids)
            labels = remap_labels(cm.assignments, mapping)
            stored_centroids = cm.centroids[mapping.g]
            a_cost = mapping.total_cost
        else:
            labels = cm.assignments
            stored_centroids = cm.centroids
            a_cost = 0.0 if rnd == 1 else math.nan
        change = 1.0 if prev_labels is None else float(np.mean(labels != prev_labels))
        prev_labels = labels

        sc = silhouette(encoded, cm.assignments)
        rounds.append(
            RoundRecord(
                silhouette=sc,
                kmeans_objective=cm.objective,
                label_change_fraction=change,
                alignment_cost=a_cost,
            )
        )
        if sc > best_sc:
            best_sc, best_round, stale = sc, rnd, 0
            best_model = model
        else:
            stale += 1
        log.debug(
            "round %d: silhouette %.4f, objective %.4g, label change %.3f",
            rnd, sc, cm.objective, change,
        )

        if not align:
            model = with_classifier(model, k_used, seed=cfg.train.seed + _CLASSIFIER_SALT + rnd)
        try:
            model = _train_rounds(model, feats, labels, cfg.round_train, shuffle_rng)
        except DivergenceError as exc:
            raise DivergenceError(f"training diverged in round {rnd}: {exc}") from exc

        if stale >= cfg.patience:
            break

    final_encoded = encode(best_model, feats)
    final = kmeans(final_encoded, k_used, seed=cfg.seed)
    history = TrainHistory(
        rounds=tuple(rounds), best_round=best_round, k_used=k_used, k_predicted=k_predicted
    )
    return best_model, final, history


def _train_rounds(model, feats, labels, train_cfg: TrainConfig, rng) -> EncoderModel:
    n = feats.shape[0]
    for _ in range(train_cfg.epochs_per_round):
        order = rng.permutation(n)
        for lo in range(0, n, train_cfg.batch_size):
            batch = order[lo : lo + train_cfg.batch_size]
            model, _ = grad_step(model, feats[batch], labels[batch], train_cfg.learning_rate)
    return model
