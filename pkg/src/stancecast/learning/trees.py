"""CART-style decision trees: Gini classification and variance regression.

Split search is vectorized per (node, feature): sort the feature column,
accumulate class counts (or sums) and score every boundary between
distinct values at once. Ties on impurity keep the first candidate in
feature order, so trees are deterministic given the same feature subsets.
"""

from __future__ import annotations

import numpy as np


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "counts", "leaf_id")

    def __init__(self):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.counts = None
        self.leaf_id = -1


def _best_split_classification(X, y, idx, features, n_classes):
    """(feature, threshold, weighted_gini) of the best boundary, or None."""
    n = idx.size
    onehot = np.zeros((n, n_classes))
    best = None  # (score, feature, threshold)
    for feature in features:
        column = X[idx, feature]
        order = np.argsort(column, kind="stable")
        xs = column[order]
        boundaries = np.nonzero(xs[:-1] != xs[1:])[0]
        if boundaries.size == 0:
            continue
        onehot[:] = 0.0
        onehot[np.arange(n), y[idx][order]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        total = cum[-1]
        left = cum[boundaries]
        right = total - left
        n_left = boundaries + 1.0
        n_right = n - n_left
        gini_left = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right / n_right[:, None]) ** 2, axis=1)
        weighted = (n_left * gini_left + n_right * gini_right) / n
        pos = int(np.argmin(weighted))
        score = float(weighted[pos])
        if best is None or score < best[0] - 1e-12:
            cut = boundaries[pos]
            best = (score, feature, (xs[cut] + xs[cut + 1]) / 2.0)
    return best


def _best_split_regression(X, y, idx, features):
    n = idx.size
    best = None
    for feature in features:
        column = X[idx, feature]
        order = np.argsort(column, kind="stable")
        xs = column[order]
        boundaries = np.nonzero(xs[:-1] != xs[1:])[0]
        if boundaries.size == 0:
            continue
        ys = y[idx][order]
        cum = np.cumsum(ys)
        cum_sq = np.cumsum(ys * ys)
        total, total_sq = cum[-1], cum_sq[-1]
        n_left = boundaries + 1.0
        n_right = n - n_left
        sum_left = cum[boundaries]
        sse_left = cum_sq[boundaries] - sum_left**2 / n_left
        sum_right = total - sum_left
        sse_right = (total_sq - cum_sq[boundaries]) - sum_right**2 / n_right
        sse = sse_left + sse_right
        pos = int(np.argmin(sse))
        score = float(sse[pos])
        if best is None or score < best[0] - 1e-12:
            cut = boundaries[pos]
            best = (score, feature, (xs[cut] + xs[cut + 1]) / 2.0)
    return best


class ClassificationTree:
    """Gini-impurity CART tree with an optional random feature subset per split."""

    def __init__(self, max_depth=None, max_features=None, min_samples_split=2):
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.root = None
        self.n_classes = 0

    def fit(self, X, y, n_classes, rng):
        self.n_classes = n_classes
        self.root = self._grow(X, y, np.arange(X.shape[0]), depth=0, rng=rng)
        return self

    def _features_for_split(self, d, rng):
        if self.max_features is None or self.max_features >= d:
            return np.arange(d)
        picked = rng.choice(d, size=self.max_features, replace=False)
        picked.sort()
        return picked

    def _grow(self, X, y, idx, depth, rng):
        node = _Node()
        counts = np.bincount(y[idx], minlength=self.n_classes)
        node.counts = counts
        if (idx.size < self.min_samples_split
                or (self.max_depth is not None and depth >= self.max_depth)
                or int(np.count_nonzero(counts)) <= 1):
            return node
        features = self._features_for_split(X.shape[1], rng)
        best = _best_split_classification(X, y, idx, features, self.n_classes)
        if best is None:
            return node
        _, node.feature, node.threshold = best
        mask = X[idx, node.feature] <= node.threshold
        node.left = self._grow(X, y, idx[mask], depth + 1, rng)
        node.right = self._grow(X, y, idx[~mask], depth + 1, rng)
        return node

    def predict(self, X):
        votes = self.predict_counts(X)
        # argmax keeps the smaller class index on count ties
        return np.argmax(votes, axis=1)

    def predict_counts(self, X):
        out = np.empty((X.shape[0], self.n_classes))
        for i in range(X.shape[0]):
            node = self.root
            while node.left is not None:
                node = node.left if X[i, node.feature] <= node.threshold else node.right
            out[i] = node.counts
        return out


class RegressionTree:
    """Variance-reduction CART tree; leaf aggregates stay with the caller."""

    def __init__(self, max_depth=None, min_samples_split=2):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.root = None
        self.n_leaves = 0

    def fit(self, X, y):
        self.n_leaves = 0
        self.root = self._grow(X, y, np.arange(X.shape[0]), depth=0)
        return self

    def _grow(self, X, y, idx, depth):
        node = _Node()
        if (idx.size >= self.min_samples_split
                and (self.max_depth is None or depth < self.max_depth)):
            best = _best_split_regression(X, y, idx, np.arange(X.shape[1]))
            if best is not None:
                _, node.feature, node.threshold = best
                mask = X[idx, node.feature] <= node.threshold
                node.left = self._grow(X, y, idx[mask], depth + 1)
                node.right = self._grow(X, y, idx[~mask], depth + 1)
                return node
        node.leaf_id = self.n_leaves
        self.n_leaves += 1
        return node

    def apply(self, X):
        out = np.empty(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            node = self.root
            while node.left is not None:
                node = node.left if X[i, node.feature] <= node.threshold else node.right
            out[i] = node.leaf_id
        return out
