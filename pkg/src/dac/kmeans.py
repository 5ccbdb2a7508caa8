"""Lloyd's algorithm with seeded k-means++ init and empty-cluster repair.

Distances are evaluated in float64 by direct subtraction (no expanded-norm
shortcut) so that results are simple to reproduce bit-for-bit.  A cluster
that loses all members is re-seeded with the point farthest from its
nearest centroid; with at least k distinct input rows the converged model
therefore has no empty clusters.  Degenerate inputs with fewer than k
distinct rows settle with empty clusters instead, which is exactly what
over-provisioned cluster-count estimation relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """K centroids with per-sample assignments.

    ``objective`` is the mean squared distance of each sample to its
    assigned centroid; ``objective_history`` records it per Lloyd
    iteration (index 0 is the post-init value) and is non-increasing.
    """

    centroids: np.ndarray
    assignments: np.ndarray
    objective: float
    n_iter: int
    objective_history: tuple[float, ...] = ()

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def assign(features: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest-centroid labels; ties resolve to the lowest centroid index."""
    x = np.asarray(features, dtype=np.float64)
    c = np.asarray(centroids, dtype=np.float64)
    if x.ndim != 2 or c.ndim != 2 or x.shape[1] != c.shape[1]:
        raise ValueError(f"dimension mismatch: features {x.shape} vs centroids {c.shape}")
    return np.argmin(_sq_dists(x, c), axis=1).astype(np.int64)


def objective(features: np.ndarray, model: ClusterModel) -> float:
    """Mean squared distance of each sample to its assigned centroid."""
    x = np.asarray(features, dtype=np.float64)
    diff = x - model.centroids[model.assignments]
    return float((diff * diff).sum(axis=1).mean())


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    out = np.empty((x.shape[0], c.shape[0]))
    for j in range(c.shape[0]):
        diff = x - c[j]
        out[:, j] = (diff * diff).sum(axis=1)
    return out


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++: each center drawn from several D^2 candidates,
    keeping the one that lowers total potential most."""
    n = x.shape[0]
    trials = 2 + int(np.log(k))
    centroids = np.empty((k, x.shape[1]))
    chosen = np.zeros(n, dtype=bool)
    idx = int(rng.integers(n))
    centroids[0] = x[idx]
    chosen[idx] = True
    diff = x - centroids[0]
    d2 = (diff * diff).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            cands = rng.choice(n, size=trials, p=d2 / total)
            best_idx, best_d2, best_pot = -1, None, np.inf
            for cand in cands:
                diff = x - x[cand]
                cand_d2 = np.minimum(d2, (diff * diff).sum(axis=1))
                pot = cand_d2.sum()
                if pot < best_pot:
                    best_idx, best_d2, best_pot = int(cand), cand_d2, pot
            idx, d2 = best_idx, best_d2
        else:
            # every point coincides with a chosen centroid; fall back to
            # a uniform draw over unchosen rows
            idx = int(rng.choice(np.flatnonzero(~chosen)))
            diff = x - x[idx]
            d2 = np.minimum(d2, (diff * diff).sum(axis=1))
        centroids[j] = x[idx]
        chosen[idx] = True
    return centroids


def kmeans(
    features: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> ClusterModel:
    """Cluster ``features`` into k groups, minimizing mean squared distance.

    Iterates Lloyd steps from a seeded k-means++ init until the fraction
    of samples changing assignment drops below ``tol`` (or ``max_iter``).
    Deterministic for a fixed seed.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features contain non-finite values")
    n = x.shape[0]
    if not 2 <= k <= n:
        raise ValueError(f"k must be in [2, {n}], got {k}")

    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(x, k, rng)
    labels = np.argmin(_sq_dists(x, centroids), axis=1).astype(np.int64)
    history = [_mean_sq(x, centroids, labels)]
    n_iter = 0
    for it in range(1, max_iter + 1):
        centroids = _update_centroids(x, labels, centroids, k)
        new_labels = np.argmin(_sq_dists(x, centroids), axis=1).astype(np.int64)
        obj = _mean_sq(x, centroids, new_labels)
        assert obj <= history[-1] * (1.0 + 1e-12) + 1e-12, "Lloyd objective increased"
        history.append(obj)
        changed = float(np.mean(new_labels != labels))
        labels = new_labels
        n_iter = it
        if changed < tol:
            break
    return ClusterModel(
        centroids=centroids,
        assignments=labels,
        objective=history[-1],
        n_iter=n_iter,
        objective_history=tuple(history),
    )


def _mean_sq(x, centroids, labels) -> float:
    diff = x - centroids[labels]
    return float((diff * diff).sum(axis=1).mean())


def _update_centroids(x, labels, old, k) -> np.ndarray:
    counts = np.bincount(labels, minlength=k)
    new = np.empty_like(old)
    for j in range(k):
        if counts[j] > 0:
            new[j] = x[labels == j].mean(axis=0)
        else:
            new[j] = old[j]  # placeholder until repaired below
    empties = np.flatnonzero(counts == 0)
    if empties.size:
        live = np.flatnonzero(counts > 0)
        d2min = _sq_dists(x, new[live]).min(axis=1)
        for j in empties:
            p = int(np.argmax(d2min))
            new[j] = x[p]
            diff = x - new[j]
            d2min = np.minimum(d2min, (diff * diff).sum(axis=1))
    return new
