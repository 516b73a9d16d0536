"""CART trees on sparse non-negative features.

Split search exploits sparsity: inside a node, every feature's implicit zeros
form a single block at the bottom of the sort order, so only the stored
non-zero entries need sorting.  Candidate thresholds are the midpoints between
consecutive distinct values, including the gap between 0 and the smallest
positive value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

GINI = "gini"
SQUARED_ERROR = "squared_error"


def _node_cost(stats: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity times sample count, for stat rows laid out per ``criterion``.

    gini rows are per-class counts ``(c0, c1)``; squared_error rows are
    ``(n, sum r, sum r^2)``.
    """
    if criterion == GINI:
        n = stats.sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cost = n - np.where(n > 0, (stats ** 2).sum(axis=-1) / n, 0.0)
        return cost
    n, s, s2 = stats[..., 0], stats[..., 1], stats[..., 2]
    with np.errstate(invalid="ignore", divide="ignore"):
        return s2 - np.where(n > 0, s * s / n, 0.0)


def _sample_stats(y: np.ndarray, criterion: str) -> np.ndarray:
    if criterion == GINI:
        y = y.astype(np.int64)
        out = np.zeros((y.size, 2))
        out[np.arange(y.size), y] = 1.0
        return out
    y = y.astype(np.float64)
    return np.column_stack([np.ones_like(y), y, y * y])


@dataclass
class Split:
    feature: int
    threshold: float
    improvement: float


def best_split(sub: sp.csc_matrix, stats: np.ndarray, criterion: str,
               features: np.ndarray | None = None) -> Split | None:
    """Best split of a node given its rows as a CSC matrix.

    ``stats`` holds one stat row per node sample (row order of ``sub``).
    ``features`` restricts the search to those column indices of ``sub``.
    Returns ``None`` when no feature separates the node's samples.
    """
    n_node = sub.shape[0]
    total = stats.sum(axis=0)
    parent_cost = _node_cost(total, criterion)
    if features is not None:
        sub = sub[:, features]
        col_ids = np.asarray(features)
    else:
        col_ids = np.arange(sub.shape[1])
    counts = np.diff(sub.indptr)
    if sub.nnz == 0:
        return None
    cols = np.repeat(np.arange(sub.shape[1]), counts)
    order = np.lexsort((sub.data, cols))
    vals = sub.data[order]
    cols = cols[order]
    rows = sub.indices[order]
    s = stats[rows]
    cum = np.cumsum(s, axis=0)

    starts = sub.indptr[:-1][counts > 0]
    ends = sub.indptr[1:][counts > 0]
    present = np.flatnonzero(counts > 0)
    before = np.where(starts[:, None] > 0, cum[np.maximum(starts - 1, 0)], 0.0)
    feat_total = cum[ends - 1] - before
    zeros_total = total - feat_total
    n_zero = n_node - (ends - starts)

    # thresholds between consecutive stored values of the same feature
    same_next = np.zeros(vals.size, dtype=bool)
    same_next[:-1] = (cols[1:] == cols[:-1])
    distinct_next = same_next.copy()
    distinct_next[:-1] &= vals[1:] > vals[:-1]
    cand = np.flatnonzero(distinct_next)
    seg = np.searchsorted(ends, cand, side="right")  # segment of each candidate
    prefix = cum[cand] - before[seg]
    left = zeros_total[seg] + prefix
    right = feat_total[seg] - prefix
    gain_pos = parent_cost - _node_cost(left, criterion) - _node_cost(right, criterion)
    thr_pos = 0.5 * (vals[cand] + vals[cand + 1])
    feat_pos = present[seg]

    # threshold between the zero block and the smallest stored value
    zmask = n_zero > 0
    gain_zero = (parent_cost - _node_cost(zeros_total[zmask], criterion)
                 - _node_cost(feat_total[zmask], criterion))
    thr_zero = 0.5 * vals[starts[zmask]]
    feat_zero = present[zmask]

    gains = np.concatenate([gain_zero, gain_pos])
    if gains.size == 0:
        return None
    thrs = np.concatenate([thr_zero, thr_pos])
    feats = np.concatenate([feat_zero, feat_pos])
    # deterministic tie-break: lowest feature, then lowest threshold
    key = np.lexsort((thrs, feats, -np.round(gains, 12)))
    k = key[0]
    return Split(int(col_ids[feats[k]]), float(thrs[k]), float(gains[k]))


def _splittable_features(sub: sp.csc_matrix) -> np.ndarray:
    """Columns whose values are not constant across the node's rows."""
    counts = np.diff(sub.indptr)
    n = sub.shape[0]
    mask = counts > 0
    if not mask.any():
        return np.flatnonzero(mask)
    partial = counts < n
    full = np.flatnonzero(mask & ~partial)
    keep = mask & partial
    for c in full:
        col = sub.data[sub.indptr[c]:sub.indptr[c + 1]]
        keep[c] = col.min() != col.max()
    return np.flatnonzero(keep)


class TreeModel:
    """Flat-array binary tree; ``value`` holds the leaf output."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X: sp.csr_matrix) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            f = self.feature[node[active]]
            x = np.asarray(X[active, f]).ravel()
            go_left = x <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_value(self, X: sp.csr_matrix) -> np.ndarray:
        return self.value[self.apply(X)]

    def get_state(self) -> dict:
        return {"feature": self.feature, "threshold": self.threshold, "left": self.left,
                "right": self.right, "value": self.value}

    @classmethod
    def from_state(cls, state: dict) -> "TreeModel":
        return cls(state["feature"], state["threshold"], state["left"], state["right"], state["value"])


def build_tree(X: sp.csr_matrix, y: np.ndarray, criterion: str = GINI,
               max_depth: int | None = None, min_samples_split: int = 2,
               max_features: int | None = None,
               rng: np.random.Generator | None = None) -> TreeModel:
    """Grow a CART tree depth-first.

    For ``gini`` the leaf value is the fraction of class 1 among the leaf's
    samples; for ``squared_error`` it is the mean target.  With ``max_features``
    set, each node draws that many of its non-constant features uniformly
    without replacement.
    """
    X = sp.csr_matrix(X)
    stats_all = _sample_stats(y, criterion)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        st = stats_all[idx].sum(axis=0)
        if criterion == GINI:
            v = st[1] / st.sum() if st.sum() else 0.0
        else:
            v = st[1] / st[0] if st[0] else 0.0
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(v))
        return len(feature) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if idx.size < min_samples_split or (max_depth is not None and depth >= max_depth):
            continue
        stats = stats_all[idx]
        if _node_cost(stats.sum(axis=0), criterion) <= 1e-12 * max(idx.size, 1):
            continue
        sub = X[idx].tocsc()
        sub.sort_indices()
        features = None
        if max_features is not None:
            candidates = _splittable_features(sub)
            if candidates.size == 0:
                continue
            if candidates.size > max_features:
                candidates = np.sort(rng.choice(candidates, size=max_features, replace=False))
            features = candidates
        split = best_split(sub, stats, criterion, features)
        if split is None or split.improvement < -1e-12:
            continue
        col = np.asarray(sub[:, split.feature].todense()).ravel()
        mask = col <= split.threshold
        if mask.all() or not mask.any():
            continue
        feature[node] = split.feature
        threshold[node] = split.threshold
        left_id = new_node(idx[mask])
        right_id = new_node(idx[~mask])
        left[node] = left_id
        right[node] = right_id
        # push right first so the left subtree gets the lower node ids
        stack.append((right_id, idx[~mask], depth + 1))
        stack.append((left_id, idx[mask], depth + 1))
    return TreeModel(feature, threshold, left, right, value)
