"""Minimum-cost matching of cluster centroids between training rounds.

Cluster indices coming out of k-means are arbitrary, so pseudo-labels from
consecutive rounds cannot be compared or fed to a persistent classifier
directly.  Matching the current round's centroids to the previous round's
by minimum total squared distance yields a permutation ``g`` (previous
slot -> current cluster); re-expressing the current pseudo-labels through
``g_inv`` keeps every classifier output unit attached to the same cluster
lineage across rounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class AlignmentMapping:
    """Permutation between two rounds' cluster indices.

    ``g[i]`` is the current-round cluster matched to previous-round slot
    ``i``; ``g_inv`` is its inverse; ``total_cost`` is the (minimal) sum
    of squared centroid distances over the matching.
    """

    g: np.ndarray
    g_inv: np.ndarray
    total_cost: float

    @property
    def k(self) -> int:
        return self.g.shape[0]


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Solve the square assignment problem, minimizing total cost.

    Returns ``perm`` with ``perm[i]`` the column assigned to row ``i``.
    Among all minimum-cost assignments the lexicographically smallest
    permutation is returned, which makes results deterministic on tied
    cost matrices (integer contingency tables, duplicated centroids).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix has non-finite entries")
    n = cost.shape[0]
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    row_to_col, u, v = _shortest_augmenting_path(cost)
    return _lex_smallest_tight_matching(cost, row_to_col, u, v)


def _shortest_augmenting_path(cost: np.ndarray):
    """O(n^3) assignment via successive shortest augmenting paths.

    Maintains dual potentials u (rows) and v (columns) with
    ``cost[i, j] - u[i] - v[j] >= 0`` and equality on matched edges, so
    the final potentials certify optimality and expose the tight-edge
    graph used for tie-breaking.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    # p[j] = row matched to column j, 1-based; column 0 is a virtual slot
    # holding the row currently being inserted.
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    cols = np.arange(1, n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            free_idx = cols[free]
            j1 = int(free_idx[np.argmin(minv[free_idx])])
            delta = minv[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = np.empty(n, dtype=np.int64)
    row_to_col[p[1:] - 1] = cols - 1
    return row_to_col, u[1:], v[1:]


def _lex_smallest_tight_matching(
    cost: np.ndarray, row_to_col: np.ndarray, u: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """Pick the lexicographically smallest optimal permutation.

    Every minimum-cost assignment uses only edges that are tight under
    the optimal potentials (complementary slackness), so it suffices to
    fix rows in order, greedily taking the smallest tight column that
    still leaves a perfect matching on the remaining rows, checked with
    an alternating-path search.  Generic (tie-free) costs make the tight
    graph a single permutation and the loop degenerates to a pass-through;
    fully tied matrices cost an O(n^2)-searches worst case.
    """
    n = cost.shape[0]
    tol = 1e-9 * (1.0 + float(np.abs(cost).max()))
    tight = cost - u[:, None] - v[None, :] <= tol
    match = row_to_col.copy()
    col_owner = np.empty(n, dtype=np.int64)
    col_owner[match] = np.arange(n)

    for i in range(n):
        for j in np.flatnonzero(tight[i]):
            j = int(j)
            if j >= match[i]:
                break  # own column reached; nothing smaller was feasible
            if col_owner[j] < i:
                continue  # consumed by an already-fixed row
            # Steal column j: its owner must re-match through the column
            # row i vacates, via an alternating path over rows > i.
            freed = int(match[i])
            owner = int(col_owner[j])
            moves = _alternating_path(tight, col_owner, owner, freed, i, j)
            if moves is not None:
                for row, col in moves:
                    match[row] = col
                    col_owner[col] = row
                match[i] = j
                col_owner[j] = i
                break
    return match


def _alternating_path(tight, col_owner, start_row, target_col, fixed_upto, taken_col):
    """Re-match ``start_row`` after its column is stolen.

    Searches rows beyond ``fixed_upto`` for an alternating path ending at
    ``target_col`` (the only free column); returns the list of (row, col)
    re-assignments, or None if no perfect matching survives the steal.
    """
    n = col_owner.shape[0]
    visited = np.zeros(n, dtype=bool)
    parent: dict[int, tuple[int, int]] = {}
    stack = [start_row]
    visited[start_row] = True
    end_row = -1
    while stack and end_row < 0:
        row = stack.pop()
        for col in np.flatnonzero(tight[row]):
            col = int(col)
            if col == taken_col:
                continue
            if col == target_col:
                end_row = row
                break
            nxt = int(col_owner[col])
            if nxt <= fixed_upto or visited[nxt]:
                continue
            visited[nxt] = True
            parent[nxt] = (row, col)
            stack.append(nxt)
    if end_row < 0:
        return None
    moves = [(end_row, target_col)]
    row = end_row
    while row != start_row:
        row, col = parent[row]
        moves.append((row, col))
    return moves


def align_centroids(c_last: np.ndarray, c_current: np.ndarray) -> AlignmentMapping:
    """Match current-round centroids to last-round centroids.

    cost[i, j] is the squared Euclidean distance between last-round
    centroid i and current-round centroid j.
    """
    c_last = np.asarray(c_last, dtype=np.float64)
    c_current = np.asarray(c_current, dtype=np.float64)
    if c_last.shape != c_current.shape:
        raise ValueError(f"centroid shapes differ: {c_last.shape} vs {c_current.shape}")
    diff = c_last[:, None, :] - c_current[None, :, :]
    cost = (diff * diff).sum(axis=2)
    g = hungarian(cost)
    g_inv = np.empty_like(g)
    g_inv[g] = np.arange(g.shape[0])
    total = float(cost[np.arange(g.shape[0]), g].sum())
    return AlignmentMapping(g=g, g_inv=g_inv, total_cost=total)


def remap_labels(y_current: np.ndarray, mapping: AlignmentMapping) -> np.ndarray:
    """Re-express current-round pseudo-labels in the last round's index space."""
    y = np.asarray(y_current, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= mapping.k):
        raise ValueError(f"labels must lie in [0, {mapping.k})")
    return mapping.g_inv[y]
