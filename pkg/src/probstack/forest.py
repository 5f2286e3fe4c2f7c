"""Random forest classifier: CART trees on Gini impurity, bootstrap per tree.

Trees are grown until nodes are pure or hold fewer than 2 samples, with the
best split searched over a per-node random subset of features. The tree
builder is JIT-compiled; each tree draws all of its randomness from its own
32-bit seed so forests are reproducible and tree construction order never
matters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import ValidationError, spawn_seed


@njit(cache=True)
def _build_tree(X, y, k, mtry, seed, bootstrap):
    n, d = X.shape
    np.random.seed(seed)
    buf = np.empty(n, np.int64)
    if bootstrap:
        for i in range(n):
            buf[i] = np.random.randint(0, n)
    else:
        for i in range(n):
            buf[i] = i
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    counts = np.zeros((max_nodes, k), np.int64)

    stack_node = np.empty(max_nodes, np.int64)
    stack_lo = np.empty(max_nodes, np.int64)
    stack_hi = np.empty(max_nodes, np.int64)
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    sp = 1
    n_nodes = 1

    perm = np.empty(d, np.int64)
    cnt = np.empty(k, np.int64)
    left_cnt = np.empty(k, np.int64)

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        m = hi - lo

        for c in range(k):
            cnt[c] = 0
        for i in range(lo, hi):
            cnt[y[buf[i]]] += 1
        max_count = 0
        for c in range(k):
            if cnt[c] > max_count:
                max_count = cnt[c]
        if max_count == m or m < 2:
            for c in range(k):
                counts[node, c] = cnt[c]
            continue

        # sample mtry distinct features (Fisher-Yates prefix)
        for j in range(d):
            perm[j] = j
        nf = mtry if mtry < d else d
        for j in range(nf):
            r = j + np.random.randint(0, d - j)
            tmp = perm[j]
            perm[j] = perm[r]
            perm[r] = tmp

        # minimizing weighted Gini == maximizing sum_c cl_c^2/n_l + cr_c^2/n_r
        best_score = -np.inf
        best_feat = -1
        best_thr = 0.0
        vals = np.empty(m, np.float64)
        for jf in range(nf):
            f = perm[jf]
            for i in range(m):
                vals[i] = X[buf[lo + i], f]
            order = np.argsort(vals, kind="mergesort")
            for c in range(k):
                left_cnt[c] = 0
            sql = 0.0
            sqr = 0.0
            for c in range(k):
                sqr += cnt[c] * cnt[c]
            for i in range(m - 1):
                c = y[buf[lo + order[i]]]
                rc = cnt[c] - left_cnt[c]
                sql += 2.0 * left_cnt[c] + 1.0
                sqr -= 2.0 * rc - 1.0
                left_cnt[c] += 1
                vi = vals[order[i]]
                if vi < vals[order[i + 1]]:
                    nl = i + 1
                    score = sql / nl + sqr / (m - nl)
                    if score > best_score:
                        best_score = score
                        best_feat = f
                        best_thr = vi

        if best_feat == -1:
            # all candidate features constant across the node
            for c in range(k):
                counts[node, c] = cnt[c]
            continue

        # partition buf[lo:hi]: x <= threshold goes left (threshold is the
        # largest left-side value, so both sides are provably non-empty)
        i = lo
        j = hi - 1
        while i <= j:
            if X[buf[i], best_feat] <= best_thr:
                i += 1
            else:
                tmp = buf[i]
                buf[i] = buf[j]
                buf[j] = tmp
                j -= 1
        mid = i

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = left_id
        right[node] = right_id
        stack_node[sp] = left_id
        stack_lo[sp] = lo
        stack_hi[sp] = mid
        sp += 1
        stack_node[sp] = right_id
        stack_lo[sp] = mid
        stack_hi[sp] = hi
        sp += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        counts[:n_nodes].copy(),
    )


@njit(cache=True)
def _tree_apply(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        node = 0
        while feature[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # leaf class histograms, zero rows for internal nodes

    def apply(self, X: np.ndarray) -> np.ndarray:
        return _tree_apply(X, self.feature, self.threshold, self.left, self.right)


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    tree_seeds: tuple[int, ...]
    n_features: int
    n_classes: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def _check_X(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValidationError(f"expected (n, {self.n_features}) features, got {X.shape}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Mean over trees of the normalized leaf class histograms."""
        X = self._check_X(X)
        proba = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            leaves = tree.apply(X)
            hist = tree.counts[leaves].astype(np.float64)
            proba += hist / hist.sum(axis=1, keepdims=True)
        return proba / self.n_trees

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def _resolve_mtry(d: int, max_features: str) -> int:
    if max_features == "all":
        return d
    if max_features == "sqrt":
        return max(1, int(np.sqrt(d)))
    raise ValidationError(f"rf_max_features must be 'sqrt' or 'all', got {max_features!r}")


def train_random_forest(X, y, k: int, cfg) -> ForestModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("training set is empty")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features contain non-finite values")
    if y.shape != (X.shape[0],):
        raise ValidationError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
    if np.unique(y).size < 2:
        raise ValidationError("training data contains a single class")
    if y.min() < 0 or y.max() >= k:
        raise ValidationError(f"labels outside [0, {k})")
    mtry = _resolve_mtry(X.shape[1], cfg.rf_max_features)
    seeds = tuple(spawn_seed(cfg.seed, "rf-tree", t) for t in range(cfg.rf_trees))
    trees = tuple(
        Tree(*_build_tree(X, y, k, mtry, s, cfg.rf_bootstrap)) for s in seeds
    )
    return ForestModel(trees, seeds, X.shape[1], k)
