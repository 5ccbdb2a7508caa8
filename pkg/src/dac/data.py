"""Feature/label file IO, semi-supervised splits, and synthetic benchmark data.

Feature files use the binary DACF layout (little-endian): magic ``DACF``,
u32 version, u64 n_samples, u64 dim, then ``n_samples * dim`` IEEE-754
float32 values in row-major order.  Values are stored in 32-bit and
promoted to 64-bit on load.  Label files are UTF-8 text, one label string
per line; strings are mapped to dense integer ids in first-appearance
order.  The id ``-1`` is reserved as the "unlabeled" sentinel throughout
the package.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

FEATURE_MAGIC = b"DACF"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIQQ")

UNLABELED = -1


class FileFormatError(Exception):
    """Base class for binary-format violations."""


class BadMagicError(FileFormatError):
    pass


class UnsupportedVersionError(FileFormatError):
    pass


class TruncatedPayloadError(FileFormatError):
    pass


class PayloadMismatchError(FileFormatError):
    pass


class NonFiniteError(FileFormatError):
    pass


def load_features(path) -> np.ndarray:
    """Read a DACF feature file into an (n_samples, dim) float64 matrix."""
    with open(path, "rb") as fh:
        blob = fh.read()
    return _decode_features(blob, str(path))


def _decode_features(blob: bytes, name: str) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise TruncatedPayloadError(f"{name}: file shorter than the {_HEADER.size}-byte header")
    magic, version, n, d = _HEADER.unpack_from(blob)
    if magic != FEATURE_MAGIC:
        raise BadMagicError(f"{name}: expected magic {FEATURE_MAGIC!r}, found {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{name}: unsupported format version {version}")
    if n < 1 or d < 1:
        raise PayloadMismatchError(f"{name}: header declares empty shape {n}x{d}")
    expected = n * d * 4
    payload = len(blob) - _HEADER.size
    if payload < expected:
        raise TruncatedPayloadError(
            f"{name}: payload holds {payload // 4} values, header declares {n * d}"
        )
    if payload > expected:
        raise PayloadMismatchError(
            f"{name}: {payload - expected} trailing bytes beyond the declared {n}x{d} payload"
        )
    values = np.frombuffer(blob, dtype="<f4", count=n * d, offset=_HEADER.size)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{name}: payload contains non-finite values")
    return values.astype(np.float64).reshape(n, d)


def save_features(matrix: np.ndarray, path) -> None:
    """Write a feature matrix as DACF.  Values are quantized to float32."""
    m = np.ascontiguousarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    with np.errstate(over="ignore"):
        stored = m.astype("<f4")
    if not np.all(np.isfinite(stored)):
        raise ValueError("matrix has entries that are non-finite (or overflow float32)")
    n, d = m.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, FORMAT_VERSION, n, d))
        fh.write(stored.tobytes())


def load_labels(path) -> tuple[np.ndarray, list[str]]:
    """Read a label file.

    Returns ``(ids, names)`` where ids are dense integers assigned in
    first-appearance order and ``names[i]`` is the string for id ``i``.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text == "":
        raise ValueError(f"{path}: label file is empty")
    lines = text.splitlines()
    ids = np.empty(len(lines), dtype=np.int64)
    index: dict[str, int] = {}
    for i, line in enumerate(lines):
        if line == "":
            raise ValueError(f"{path}: empty label on line {i + 1}")
        ids[i] = index.setdefault(line, len(index))
    return ids, list(index)


def save_labels(names: list[str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name in names:
            fh.write(f"{name}\n")


@dataclass(frozen=True, eq=False)
class SplitDataset:
    """A semi-supervised split: full ground truth plus a labeled subset.

    ``truth`` is used only for evaluation and for pre-training on the
    samples flagged by ``labeled_mask``; every labeled sample belongs to a
    known class, and unknown-class samples are always unlabeled.
    """

    features: np.ndarray
    truth: np.ndarray
    labeled_mask: np.ndarray
    known_classes: frozenset[int]
    seed: int

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return int(self.truth.max()) + 1


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def make_split(
    features: np.ndarray,
    truth: np.ndarray,
    known_ratio: float,
    labeled_ratio: float,
    seed: int,
    per_class: bool = True,
    known_classes=None,
) -> SplitDataset:
    """Build a semi-supervised split from fully labeled data.

    ``round_half_up(known_ratio * n_classes)`` classes are drawn uniformly
    at random as known; within each known class, ``labeled_ratio`` of its
    samples (per-class rounding half-up) are flagged labeled.  With
    ``per_class=False`` the labeled quota is drawn globally from the pool
    of known-class samples instead of stratified per class.  An explicit
    ``known_classes`` collection overrides the random class selection
    (``known_ratio`` is then ignored).
    """
    if not 0 < known_ratio <= 1:
        raise ValueError(f"known_ratio must be in (0, 1], got {known_ratio}")
    if not 0 < labeled_ratio <= 1:
        raise ValueError(f"labeled_ratio must be in (0, 1], got {labeled_ratio}")
    truth = np.asarray(truth, dtype=np.int64)
    if truth.min() < 0:
        raise ValueError("ground-truth labels must be non-negative")
    if features.shape[0] != truth.shape[0]:
        raise ValueError("features and truth disagree on sample count")
    n_classes = int(truth.max()) + 1
    if n_classes < 2:
        raise ValueError("need at least 2 classes to form a split")
    counts = np.bincount(truth, minlength=n_classes)
    if (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0])
        raise ValueError(f"class {empty} has 0 samples; labels must be dense")

    rng = np.random.default_rng(seed)
    if known_classes is not None:
        known = np.sort(np.asarray(sorted(set(int(c) for c in known_classes)), dtype=np.int64))
        if known.size == 0 or known.min() < 0 or known.max() >= n_classes:
            raise ValueError(f"known classes must be a non-empty subset of [0, {n_classes})")
    else:
        n_known = _round_half_up(known_ratio * n_classes)
        known = np.sort(rng.choice(n_classes, size=n_known, replace=False))

    mask = np.zeros(truth.shape[0], dtype=bool)
    if per_class:
        for cls in known:
            members = np.flatnonzero(truth == cls)
            n_lab = _round_half_up(labeled_ratio * members.size)
            if n_lab > 0:
                mask[rng.choice(members, size=n_lab, replace=False)] = True
    else:
        pool = np.flatnonzero(np.isin(truth, known))
        n_lab = _round_half_up(labeled_ratio * pool.size)
        if n_lab > 0:
            mask[rng.choice(pool, size=n_lab, replace=False)] = True

    return SplitDataset(
        features=features,
        truth=truth,
        labeled_mask=mask,
        known_classes=frozenset(int(c) for c in known),
        seed=seed,
    )


def gen_synthetic(
    k: int, n_per_cluster: int, dim: int, separation: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Sample a k-cluster Gaussian mixture for desk-scale verification.

    Cluster centers are drawn uniformly on the sphere of radius
    ``separation``; points are unit-variance isotropic Gaussians around
    their center.  Class sizes are exactly ``n_per_cluster``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if n_per_cluster < 1:
        raise ValueError("n_per_cluster must be at least 1")
    if dim < 2:
        raise ValueError("dim must be at least 2")
    if not separation > 0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(k, dim))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    centers = separation * raw / norms
    labels = np.repeat(np.arange(k, dtype=np.int64), n_per_cluster)
    points = centers[labels] + rng.normal(size=(k * n_per_cluster, dim))
    return points, labels
