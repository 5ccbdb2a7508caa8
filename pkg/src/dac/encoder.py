"""Trainable tanh representation head with a linear pseudo-classifier.

The head maps frozen input features z to representations
``tanh(z W_h + b_h)``; a linear classifier on top produces logits for
softmax cross-entropy training.  Gradients are analytic (tanh derivative
``1 - out**2``) and applied by plain mini-batch gradient descent, which
keeps training bit-reproducible for a fixed seed.

Checkpoints use the binary DACM layout (little-endian): magic ``DACM``,
u32 version, u64 d_in, u64 d, u64 k, then float64 parameter blocks
W_h, b_h, W_c, b_c in that order (k = 0 and no classifier blocks once
the classifier has been discarded).
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, replace

import numpy as np

from .data import (
    BadMagicError,
    PayloadMismatchError,
    SplitDataset,
    TruncatedPayloadError,
    UnsupportedVersionError,
)

log = logging.getLogger(__name__)

MODEL_MAGIC = b"DACM"
MODEL_VERSION = 1

_MODEL_HEADER = struct.Struct("<4sIQQQ")


class DivergenceError(RuntimeError):
    """Raised when training produces a non-finite loss or gradient."""


@dataclass(frozen=True, eq=False)
class EncoderModel:
    """Dense-head weights plus an optional linear classifier.

    ``shift``/``scale`` standardize inputs before the affine map (an
    equivalent re-parameterization of W_h, b_h baked in by ``pretrain``
    so the shared learning-rate default works regardless of raw feature
    scale); None means identity.  ``w_c``/``b_c`` are None once the
    classifier has been discarded (after pre-training the head alone is
    the feature extractor).  ``train_accuracy`` is the labeled-set
    accuracy reported by ``pretrain``, in percent.
    """

    w_h: np.ndarray
    b_h: np.ndarray
    w_c: np.ndarray | None = None
    b_c: np.ndarray | None = None
    shift: np.ndarray | None = None
    scale: np.ndarray | None = None
    train_accuracy: float | None = None

    @property
    def d_in(self) -> int:
        return self.w_h.shape[0]

    @property
    def d(self) -> int:
        return self.w_h.shape[1]

    @property
    def k(self) -> int | None:
        return None if self.w_c is None else self.w_c.shape[1]

    def standardized(self, z: np.ndarray) -> np.ndarray:
        if self.shift is None:
            return z
        return (z - self.shift) / self.scale


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-descent hyperparameters.

    ``hidden_dim`` of None means the head keeps the input dimension.
    ``pretrain_max_epochs``/``pretrain_patience`` bound the early-stopped
    pre-training stage; ``epochs_per_round`` applies to the later
    self-supervised rounds.
    """

    batch_size: int = 128
    learning_rate: float = 5e-3
    epochs_per_round: int = 1
    seed: int = 0
    hidden_dim: int | None = None
    pretrain_max_epochs: int = 1000
    pretrain_patience: int = 10
    pretrain_min_delta: float = 1e-2

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        # 0 is allowed so a frozen-encoder ablation can reuse the pipeline
        if self.learning_rate < 0:
            raise ValueError("learning_rate must not be negative")
        if self.epochs_per_round < 1:
            raise ValueError("epochs_per_round must be at least 1")


_HEAD_INIT_GAIN = 0.65


def init_model(d_in: int, d: int, k: int | None, seed: int) -> EncoderModel:
    """Seeded init: scaled semi-orthogonal head, Gaussian classifier, zero biases.

    An orthogonal head starts as a gentle near-isometry of (standardized)
    inputs, so downstream clustering sees the input geometry rather than a
    random anisotropic squeeze of it.
    """
    rng = np.random.default_rng(seed)
    gauss = rng.normal(size=(max(d_in, d), min(d_in, d)))
    q, _ = np.linalg.qr(gauss)
    w_h = _HEAD_INIT_GAIN * (q if d_in >= d else q.T)
    b_h = np.zeros(d)
    if k is None:
        return EncoderModel(w_h=w_h, b_h=b_h)
    # Zero classifier start: no gradient reaches the head until the
    # classifier has picked up signal, so early-stopped pre-training
    # distorts the representation as little as possible.
    return EncoderModel(w_h=w_h, b_h=b_h, w_c=np.zeros((d, k)), b_c=np.zeros(k))


def with_classifier(model: EncoderModel, k: int, seed: int) -> EncoderModel:
    """Attach a fresh seeded k-way classifier to an existing head.

    A tiny random scale (rather than exact zero) keeps re-randomization
    meaningful for ablations while preserving the gentle-start behavior.
    """
    rng = np.random.default_rng(seed)
    w_c = rng.normal(0.0, 1e-3 / np.sqrt(model.d), size=(model.d, k))
    b_c = np.zeros(k)
    return replace(model, w_c=w_c, b_c=b_c)


def encode(model: EncoderModel, z: np.ndarray) -> np.ndarray:
    """tanh(z W_h + b_h), entries inside (-1, 1).

    float64 tanh rounds to exactly +-1.0 once a pre-activation magnitude
    passes ~19; the open-interval property holds on the representable
    range.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != model.d_in:
        raise ValueError(f"expected (n, {model.d_in}) input, got {z.shape}")
    return np.tanh(model.standardized(z) @ model.w_h + model.b_h)


def logits(model: EncoderModel, encoded: np.ndarray) -> np.ndarray:
    """Linear classifier outputs for already-encoded representations."""
    if model.w_c is None:
        raise ValueError("model's classifier has been discarded")
    encoded = np.asarray(encoded, dtype=np.float64)
    if encoded.ndim != 2 or encoded.shape[1] != model.d:
        raise ValueError(f"expected (n, {model.d}) input, got {encoded.shape}")
    return encoded @ model.w_c + model.b_c


def cross_entropy(logit_matrix: np.ndarray, labels) -> float:
    """Mean negative log-softmax at the target labels (log-sum-exp stabilized)."""
    lg = np.asarray(logit_matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if lg.ndim != 2 or y.shape != (lg.shape[0],):
        raise ValueError("logits must be (n, k) with one label per row")
    if y.size and (y.min() < 0 or y.max() >= lg.shape[1]):
        raise ValueError(f"labels must lie in [0, {lg.shape[1]})")
    shifted = lg - lg.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    return float((lse - shifted[np.arange(y.size), y]).mean())


def _softmax(lg: np.ndarray) -> np.ndarray:
    shifted = lg - lg.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def grad_step(
    model: EncoderModel, z_batch: np.ndarray, labels, lr: float
) -> tuple[EncoderModel, float]:
    """One gradient-descent update on all four parameter blocks.

    Returns the updated model and the batch loss at the incoming
    parameters.  Raises DivergenceError on non-finite loss or gradients
    (the caller should reduce the learning rate).
    """
    if model.w_c is None:
        raise ValueError("model's classifier has been discarded")
    z = np.asarray(z_batch, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if z.shape[0] == 0:
        raise ValueError("batch is empty")
    if y.shape != (z.shape[0],):
        raise ValueError("need exactly one label per batch row")
    if y.min() < 0 or y.max() >= model.w_c.shape[1]:
        raise ValueError(f"labels must lie in [0, {model.w_c.shape[1]})")

    n = z.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        z = model.standardized(z)
        encoded = np.tanh(z @ model.w_h + model.b_h)
        lg = encoded @ model.w_c + model.b_c
        probs = _softmax(lg)
        loss = cross_entropy(lg, y)

        d_logits = probs
        d_logits[np.arange(n), y] -= 1.0
        d_logits /= n
        g_wc = encoded.T @ d_logits
        g_bc = d_logits.sum(axis=0)
        d_enc = d_logits @ model.w_c.T
        d_pre = d_enc * (1.0 - encoded * encoded)
        g_wh = z.T @ d_pre
        g_bh = d_pre.sum(axis=0)

    if not (
        np.isfinite(loss)
        and np.all(np.isfinite(g_wh))
        and np.all(np.isfinite(g_bh))
        and np.all(np.isfinite(g_wc))
        and np.all(np.isfinite(g_bc))
    ):
        raise DivergenceError("non-finite loss or gradient; reduce the learning rate")

    updated = replace(
        model,
        w_h=model.w_h - lr * g_wh,
        b_h=model.b_h - lr * g_bh,
        w_c=model.w_c - lr * g_wc,
        b_c=model.b_c - lr * g_bc,
    )
    return updated, loss


def pretrain(data: SplitDataset, cfg: TrainConfig) -> EncoderModel:
    """Train head + temporary classifier on the labeled subset only.

    The classifier covers the known classes (remapped to [0, K) in sorted
    order).  Centering and a single global scale, computed over the full
    feature pool (labels unused), are baked into the model so the learning
    rate is independent of raw feature scale.  Epochs stop early once the
    labeled-set loss has not improved by ``pretrain_min_delta`` for
    ``pretrain_patience`` epochs; the best-loss parameters are kept.  The
    classifier is then discarded and the labeled-set accuracy of the kept
    parameters is reported on the returned model.
    """
    idx = np.flatnonzero(data.labeled_mask)
    if idx.size == 0:
        raise ValueError("no labeled samples to pre-train on")
    known = sorted(data.known_classes)
    to_head = {c: i for i, c in enumerate(known)}
    z = data.features[idx]
    targets = np.array([to_head[int(c)] for c in data.truth[idx]], dtype=np.int64)
    seen = set(targets.tolist())
    missing = [known[h] for h in range(len(known)) if h not in seen]
    if missing:
        log.warning("known classes without labeled samples: %s", missing)

    # Scalar (not per-dimension) scale: centering plus a global rescale is
    # a similarity transform, so cluster geometry survives standardization.
    shift = data.features.mean(axis=0)
    scale = np.full(shift.shape, max(float(data.features.std()), 1e-12))
    d = cfg.hidden_dim if cfg.hidden_dim is not None else z.shape[1]
    model = replace(init_model(z.shape[1], d, len(known), cfg.seed), shift=shift, scale=scale)
    rng = np.random.default_rng(cfg.seed)

    best = model
    best_loss = cross_entropy(logits(model, encode(model, z)), targets)
    stale = 0
    for _ in range(cfg.pretrain_max_epochs):
        order = rng.permutation(idx.size)
        for lo in range(0, idx.size, cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            model, _ = grad_step(model, z[batch], targets[batch], cfg.learning_rate)
        loss = cross_entropy(logits(model, encode(model, z)), targets)
        if loss < best_loss - cfg.pretrain_min_delta:
            best, best_loss, stale = model, loss, 0
        else:
            stale += 1
            if stale >= cfg.pretrain_patience:
                break

    predicted = np.argmax(logits(best, encode(best, z)), axis=1)
    accuracy = float(100.0 * np.mean(predicted == targets))
    log.info("pre-training done: labeled-set accuracy %.2f%% (loss %.4g)", accuracy, best_loss)
    return replace(best, w_c=None, b_c=None, train_accuracy=accuracy)


def fold_standardization(model: EncoderModel) -> EncoderModel:
    """Bake shift/scale into W_h, b_h, producing an equivalent plain-affine model."""
    if model.shift is None:
        return model
    w_h = model.w_h / model.scale[:, None]
    b_h = model.b_h - (model.shift / model.scale) @ model.w_h
    return replace(model, w_h=w_h, b_h=b_h, shift=None, scale=None)


def save_model(model: EncoderModel, path) -> None:
    """Write a DACM checkpoint (parameters in float64, standardization folded in)."""
    model = fold_standardization(model)
    k = 0 if model.w_c is None else model.w_c.shape[1]
    with open(path, "wb") as fh:
        fh.write(_MODEL_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, model.d_in, model.d, k))
        fh.write(model.w_h.astype("<f8").tobytes())
        fh.write(model.b_h.astype("<f8").tobytes())
        if k:
            fh.write(model.w_c.astype("<f8").tobytes())
            fh.write(model.b_c.astype("<f8").tobytes())


def load_model(path) -> EncoderModel:
    """Read a DACM checkpoint."""
    with open(path, "rb") as fh:
        blob = fh.read()
    name = str(path)
    if len(blob) < _MODEL_HEADER.size:
        raise TruncatedPayloadError(f"{name}: file shorter than the checkpoint header")
    magic, version, d_in, d, k = _MODEL_HEADER.unpack_from(blob)
    if magic != MODEL_MAGIC:
        raise BadMagicError(f"{name}: expected magic {MODEL_MAGIC!r}, found {magic!r}")
    if version != MODEL_VERSION:
        raise UnsupportedVersionError(f"{name}: unsupported checkpoint version {version}")
    counts = [d_in * d, d] + ([d * k, k] if k else [])
    expected = sum(counts) * 8
    payload = len(blob) - _MODEL_HEADER.size
    if payload < expected:
        raise TruncatedPayloadError(f"{name}: checkpoint payload truncated")
    if payload > expected:
        raise PayloadMismatchError(f"{name}: trailing bytes beyond declared parameters")
    vals = np.frombuffer(blob, dtype="<f8", offset=_MODEL_HEADER.size)
    pos = 0
    blocks = []
    for c in counts:
        blocks.append(vals[pos : pos + c].astype(np.float64))
        pos += c
    w_h = blocks[0].reshape(d_in, d)
    b_h = blocks[1]
    if k:
        return EncoderModel(w_h=w_h, b_h=b_h, w_c=blocks[2].reshape(d, k), b_c=blocks[3])
    return EncoderModel(w_h=w_h, b_h=b_h)
