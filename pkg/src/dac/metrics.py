"""Clustering evaluation: NMI, ARI, Hungarian-mapped accuracy, Silhouette.

All partition metrics are invariant under relabeling of the predicted
cluster ids.  ``acc`` and ``k_error`` are reported as percentages, the
rest on their natural scales.
"""

from __future__ import annotations

import numpy as np

from .alignment import hungarian


def _check_pair(truth, pred, allow_sentinel=False):
    t = np.asarray(truth, dtype=np.int64)
    p = np.asarray(pred, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"label vectors must be 1-D and equal length, got {t.shape} vs {p.shape}")
    if t.size == 0:
        raise ValueError("label vectors are empty")
    if not allow_sentinel and (t.min() < 0 or p.min() < 0):
        raise ValueError("labels must be non-negative (no unlabeled sentinels)")
    return t, p


def _contingency(t: np.ndarray, p: np.ndarray) -> np.ndarray:
    kt = int(t.max()) + 1
    kp = int(p.max()) + 1
    flat = t * kp + p
    return np.bincount(flat, minlength=kt * kp).reshape(kt, kp)


def nmi(truth, pred, normalizer: str = "arithmetic") -> float:
    """Normalized mutual information between two partitions.

    Mutual information is normalized by the arithmetic mean of the two
    label entropies (``normalizer="geometric"`` switches to the geometric
    mean).  Two single-cluster partitions are defined as NMI 1.
    """
    t, p = _check_pair(truth, pred)
    n = t.size
    c = _contingency(t, p)
    a = c.sum(axis=1)
    b = c.sum(axis=0)
    nz = c > 0
    pij = c[nz] / n
    outer = (a[:, None] * b[None, :])[nz] / (n * n)
    mi = float((pij * np.log(pij / outer)).sum())
    pa = a[a > 0] / n
    pb = b[b > 0] / n
    ha = float(-(pa * np.log(pa)).sum())
    hb = float(-(pb * np.log(pb)).sum())
    if normalizer == "arithmetic":
        denom = 0.5 * (ha + hb)
    elif normalizer == "geometric":
        denom = float(np.sqrt(ha * hb))
    else:
        raise ValueError(f"unknown normalizer {normalizer!r}")
    if denom == 0.0:
        return 1.0  # both partitions are a single cluster
    return float(min(1.0, max(0.0, mi / denom)))


def ari(truth, pred) -> float:
    """Adjusted Rand index (Hubert-Arabie) from pairwise co-clustering counts."""
    t, p = _check_pair(truth, pred)
    n = t.size
    c = _contingency(t, p)
    a = c.sum(axis=1)
    b = c.sum(axis=0)

    def comb2(x):
        return (x * (x - 1) / 2.0).sum()

    index = comb2(c)
    sum_a = comb2(a)
    sum_b = comb2(b)
    total = n * (n - 1) / 2.0
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        return 1.0  # identical trivial partitions (all-one-cluster or all-singletons)
    return float((index - expected) / (maximum - expected))


def acc(truth, pred) -> float:
    """Clustering accuracy (percent) under the best one-to-one cluster mapping.

    Builds the contingency table, pads it square, and maximizes the
    matched count with the assignment solver (minimizing the negated
    counts, shifted to stay non-negative).
    """
    t, p = _check_pair(truth, pred)
    c = _contingency(t, p)
    k = max(c.shape)
    padded = np.zeros((k, k), dtype=np.int64)
    padded[: c.shape[0], : c.shape[1]] = c
    mapping = hungarian((padded.max() - padded).astype(np.float64))
    matched = padded[np.arange(k), mapping].sum()
    return float(100.0 * matched / t.size)


def silhouette(features: np.ndarray, labels, separation: str = "mean") -> float:
    """Mean silhouette coefficient of a labeled feature matrix.

    For each sample, ``a`` is the mean Euclidean distance to the other
    members of its cluster (0 for singletons, whose score is 0) and ``b``
    is the smallest per-cluster mean distance to any other cluster.
    ``separation="min"`` switches ``b`` to the literal nearest foreign
    sample distance instead of the per-cluster mean.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("features and labels disagree on sample count")
    if separation not in ("mean", "min"):
        raise ValueError(f"unknown separation mode {separation!r}")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("silhouette needs at least 2 distinct clusters")
    n, d = x.shape
    k = classes.size
    dense = np.searchsorted(classes, y)
    counts = np.bincount(dense, minlength=k).astype(np.float64)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), dense] = 1.0

    # Blocked O(N^2) pass: per-sample distance sums (and minima, for the
    # literal variant) against every cluster, capping the temporary
    # distance block at a few tens of MB.
    sums = np.empty((n, k))
    mins = np.empty((n, k)) if separation == "min" else None
    block = max(1, 4_000_000 // (n * d))
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        dist = np.sqrt(((x[lo:hi, None, :] - x[None, :, :]) ** 2).sum(axis=2))
        sums[lo:hi] = dist @ onehot
        if mins is not None:
            for ci in range(k):
                mins[lo:hi, ci] = dist[:, dense == ci].min(axis=1)

    rows = np.arange(n)
    own = counts[dense]
    multi = own > 1
    a_vals = np.zeros(n)
    a_vals[multi] = sums[rows, dense][multi] / (own[multi] - 1.0)
    if separation == "mean":
        to_cluster = sums / counts[None, :]
    else:
        to_cluster = mins
    to_cluster[rows, dense] = np.inf
    b_vals = to_cluster.min(axis=1)

    scores = np.zeros(n)
    width = np.maximum(a_vals, b_vals)
    ok = multi & (width > 0)
    scores[ok] = (b_vals[ok] - a_vals[ok]) / width[ok]
    return float(scores.mean())


def k_error(k_true: int, k_pred: int) -> float:
    """Relative cluster-count error as a percentage, to two decimals."""
    if k_true < 1:
        raise ValueError("k_true must be at least 1")
    return round(100.0 * abs(k_true - k_pred) / k_true, 2)
