"""Cluster-count estimation by dropping low-confidence clusters.

Cluster the data with an intentionally over-provisioned count K' and keep
only the clusters at least as large as the expected mean size N / K'.
Real clusters tend to stay dense even when K' is too big, while surplus
centroids end up owning small fragments, so the number of surviving
clusters estimates the true count.  The heuristic gives no guidance for
severely imbalanced cluster sizes; behavior there is whatever the size
threshold implies.
"""

from __future__ import annotations

import numpy as np

from .kmeans import kmeans


class DegenerateClusterCountError(RuntimeError):
    """Every cluster fell below the size threshold (unreachable in exact arithmetic)."""


def estimate_k(features: np.ndarray, k_prime: int, seed: int, n_restarts: int = 10) -> int:
    """Estimate the number of clusters in ``features``.

    Runs seeded k-means restarts with ``k_prime`` clusters, keeps the
    lowest-objective run (ties broken by restart index), and counts the
    clusters of size >= N / k_prime.  The threshold is real-valued and the
    comparison inclusive, so a perfectly balanced clustering keeps all
    k_prime clusters.
    """
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    if not 2 <= k_prime <= n:
        raise ValueError(f"k_prime must be in [2, {n}], got {k_prime}")
    if n_restarts < 1:
        raise ValueError("n_restarts must be at least 1")

    best = None
    for r in range(n_restarts):
        model = kmeans(x, k_prime, seed=seed + r)
        if best is None or model.objective < best.objective:
            best = model

    sizes = np.bincount(best.assignments, minlength=k_prime)
    threshold = n / k_prime
    k = int((sizes >= threshold).sum())
    # Sizes sum to N = k_prime * threshold, so the largest is always >= threshold.
    if k == 0:
        raise DegenerateClusterCountError("all clusters fell below the mean-size threshold")
    return k
