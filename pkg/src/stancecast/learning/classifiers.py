"""The five classifier families, implemented on numpy arrays.

All fits validate their inputs the same way (finite features, at least
two classes present) and are deterministic given the seed handed to
`fit`. Class labels are integer indices; argmax tie-breaks always prefer
the smaller class index.
"""

from __future__ import annotations

import math
import random
from typing import Mapping, Sequence

import numpy as np

from .trees import ClassificationTree, RegressionTree


def _validate_training(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training set must be a non-empty 2-d array")
    if not np.all(np.isfinite(X)):
        raise ValueError("training features must be finite")
    if np.unique(y).size < 2:
        raise ValueError("training set must contain at least two classes")


class LogisticRegressionClassifier:
    """Multinomial softmax regression with an L2 penalty.

    Features are standardized by the training mean and deviation; the
    bias row is unpenalized. Plain gradient descent with Armijo
    backtracking runs until the parameter update drops below `tol` or
    `max_epochs` epochs elapse.
    """

    def __init__(self, l2: float = 1.0, max_epochs: int = 1000, tol: float = 1e-6):
        self.l2 = l2
        self.max_epochs = max_epochs
        self.tol = tol
        self.weights = None
        self.mean = None
        self.scale = None

    def _design(self, X):
        Z = (X - self.mean) / self.scale
        return np.hstack([Z, np.ones((Z.shape[0], 1))])

    def _loss_grad(self, D, Y, weights):
        n = D.shape[0]
        scores = D @ weights
        scores -= scores.max(axis=1, keepdims=True)
        expd = np.exp(scores)
        probs = expd / expd.sum(axis=1, keepdims=True)
        penalized = weights.copy()
        penalized[-1] = 0.0
        loss = (-np.sum(np.log(probs[np.arange(n), np.argmax(Y, axis=1)] + 1e-300)) / n
                + 0.5 * self.l2 * float(np.sum(penalized**2)))
        grad = D.T @ (probs - Y) / n + self.l2 * penalized
        return loss, grad

    def fit(self, X, y, n_classes, seed=None):
        _validate_training(X, y)
        self.mean = X.mean(axis=0)
        self.scale = X.std(axis=0)
        self.scale[self.scale == 0.0] = 1.0
        D = self._design(X)
        Y = np.zeros((X.shape[0], n_classes))
        Y[np.arange(X.shape[0]), y] = 1.0
        weights = np.zeros((D.shape[1], n_classes))
        loss, grad = self._loss_grad(D, Y, weights)
        lr = 1.0
        for _ in range(self.max_epochs):
            grad_sq = float(np.sum(grad**2))
            if grad_sq == 0.0:
                break
            while lr > 1e-12:
                candidate = weights - lr * grad
                new_loss, new_grad = self._loss_grad(D, Y, candidate)
                if new_loss <= loss - 0.5 * lr * grad_sq:
                    break
                lr *= 0.5
            step = lr * float(np.max(np.abs(grad)))
            weights, loss, grad = candidate, new_loss, new_grad
            lr = min(lr * 2.0, 1e4)
            if step < self.tol:
                break
        self.weights = weights
        return self

    def predict(self, X):
        return np.argmax(self._design(X) @ self.weights, axis=1)


class KNNClassifier:
    """Brute-force Euclidean k-nearest neighbours with majority vote."""

    def __init__(self, k: int = 5):
        self.k = k
        self.X = None
        self.y = None
        self.n_classes = 0

    def fit(self, X, y, n_classes, seed=None):
        _validate_training(X, y)
        self.X = X
        self.y = y
        self.n_classes = n_classes
        return self

    def predict(self, X):
        k = min(self.k, self.X.shape[0])
        sq = (np.sum(X**2, axis=1)[:, None]
              + np.sum(self.X**2, axis=1)[None, :]
              - 2.0 * X @ self.X.T)
        out = np.empty(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            # Stable sort: equidistant neighbours resolve by training index.
            nearest = np.argsort(sq[i], kind="stable")[:k]
            votes = np.bincount(self.y[nearest], minlength=self.n_classes)
            out[i] = int(np.argmax(votes))
        return out


class GaussianNBClassifier:
    """Per-feature Gaussian class-conditional baseline."""

    def __init__(self, var_smoothing: float = 1e-9):
        self.var_smoothing = var_smoothing
        self.log_prior = None
        self.means = None
        self.variances = None

    def fit(self, X, y, n_classes, seed=None):
        _validate_training(X, y)
        n, d = X.shape
        self.means = np.zeros((n_classes, d))
        self.variances = np.ones((n_classes, d))
        priors = np.zeros(n_classes)
        floor = self.var_smoothing * max(float(X.var(axis=0).max()), 1.0)
        for c in range(n_classes):
            members = X[y == c]
            priors[c] = members.shape[0]
            if members.shape[0]:
                self.means[c] = members.mean(axis=0)
                self.variances[c] = members.var(axis=0) + floor
        with np.errstate(divide="ignore"):
            self.log_prior = np.where(priors > 0, np.log(priors / n), -np.inf)
        return self

    def predict(self, X):
        scores = np.empty((X.shape[0], self.means.shape[0]))
        for c in range(self.means.shape[0]):
            if not np.isfinite(self.log_prior[c]):
                scores[:, c] = -np.inf
                continue
            gap = X - self.means[c]
            scores[:, c] = (self.log_prior[c]
                            - 0.5 * np.sum(np.log(2.0 * np.pi * self.variances[c]))
                            - 0.5 * np.sum(gap**2 / self.variances[c], axis=1))
        return np.argmax(scores, axis=1)


class RandomForestClassifier:
    """Bagged Gini CART trees with random feature subsets per split."""

    def __init__(self, n_trees: int = 100, max_depth: int = 10,
                 max_features: str = "sqrt"):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.trees: list[ClassificationTree] = []
        self.n_classes = 0

    def _subset_size(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(d)))
        if self.max_features == "third":
            return max(1, d // 3)
        if self.max_features == "all":
            return d
        raise ValueError(f"unknown feature subset mode {self.max_features!r}")

    def fit(self, X, y, n_classes, seed=0):
        _validate_training(X, y)
        self.n_classes = n_classes
        rng = np.random.default_rng(seed)
        size = self._subset_size(X.shape[1])
        self.trees = []
        n = X.shape[0]
        for _ in range(self.n_trees):
            sample = rng.integers(0, n, size=n)
            tree = ClassificationTree(max_depth=self.max_depth, max_features=size)
            tree.fit(X[sample], y[sample], n_classes, rng)
            self.trees.append(tree)
        return self

    def predict(self, X):
        votes = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            votes[np.arange(X.shape[0]), tree.predict(X)] += 1.0
        return np.argmax(votes, axis=1)


class GradientBoostingClassifier:
    """One-vs-rest boosted regression trees on the logistic loss."""

    def __init__(self, n_trees: int = 100, max_depth: int = 3,
                 learning_rate: float = 0.1):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.base_scores = None
        self.stages: list[list[tuple[RegressionTree, np.ndarray]]] = []
        self.n_classes = 0

    def fit(self, X, y, n_classes, seed=None):
        _validate_training(X, y)
        self.n_classes = n_classes
        n = X.shape[0]
        targets = np.zeros((n_classes, n))
        for c in range(n_classes):
            targets[c] = (y == c).astype(np.float64)
        rates = np.clip(targets.mean(axis=1), 1e-6, 1.0 - 1e-6)
        self.base_scores = np.log(rates / (1.0 - rates))
        scores = np.repeat(self.base_scores[:, None], n, axis=1)
        self.stages = []
        for _ in range(self.n_trees):
            stage = []
            for c in range(n_classes):
                p = 1.0 / (1.0 + np.exp(-scores[c]))
                residual = targets[c] - p
                tree = RegressionTree(max_depth=self.max_depth).fit(X, residual)
                leaves = tree.apply(X)
                values = np.zeros(tree.n_leaves)
                for leaf in range(tree.n_leaves):
                    mask = leaves == leaf
                    if not np.any(mask):
                        continue
                    hessian = float(np.sum(p[mask] * (1.0 - p[mask])))
                    values[leaf] = float(np.sum(residual[mask])) / max(hessian, 1e-12)
                values = np.clip(values, -8.0, 8.0)
                scores[c] += self.learning_rate * values[leaves]
                stage.append((tree, values))
            self.stages.append(stage)
        return self

    def predict(self, X):
        scores = np.repeat(self.base_scores[:, None], X.shape[0], axis=1)
        for stage in self.stages:
            for c, (tree, values) in enumerate(stage):
                scores[c] += self.learning_rate * values[tree.apply(X)]
        return np.argmax(scores.T, axis=1)


FAMILIES = ("logistic_regression", "knn", "random_forest",
            "gradient_boosting", "gaussian_nb")

_BUILDERS = {
    "logistic_regression": lambda p: LogisticRegressionClassifier(l2=p.get("l2", 1.0)),
    "knn": lambda p: KNNClassifier(k=p.get("k", 5)),
    "random_forest": lambda p: RandomForestClassifier(
        n_trees=p.get("n_trees", 100), max_depth=p.get("max_depth", 10),
        max_features=p.get("max_features", "sqrt")),
    "gradient_boosting": lambda p: GradientBoostingClassifier(
        n_trees=p.get("n_trees", 100), max_depth=p.get("max_depth", 3),
        learning_rate=p.get("learning_rate", 0.1)),
    "gaussian_nb": lambda p: GaussianNBClassifier(
        var_smoothing=p.get("var_smoothing", 1e-9)),
}

DEFAULT_SPACES: dict[str, dict] = {
    "logistic_regression": {"l2": ("loguniform", 1e-4, 1e2)},
    "knn": {"k": ("int", 1, 50)},
    "random_forest": {
        "n_trees": ("int", 50, 500),
        "max_depth": ("int", 2, 20),
        "max_features": ("choice", ["sqrt", "third", "all"]),
    },
    "gradient_boosting": {
        "n_trees": ("int", 50, 500),
        "max_depth": ("int", 1, 6),
        "learning_rate": ("loguniform", 0.01, 0.3),
    },
    "gaussian_nb": {"var_smoothing": ("loguniform", 1e-10, 1e-6)},
}


def sample_params(space: Mapping[str, Sequence], rng: random.Random) -> dict:
    """Draw one configuration; dimension kinds are loguniform / int / choice."""
    params = {}
    for name in sorted(space):
        kind, *args = space[name]
        if kind == "loguniform":
            lo, hi = args
            params[name] = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        elif kind == "int":
            lo, hi = args
            params[name] = rng.randint(int(lo), int(hi))
        elif kind == "choice":
            params[name] = rng.choice(list(args[0]))
        else:
            raise ValueError(f"unknown space kind {kind!r} for {name!r}")
    return params


def build_classifier(family: str, params: Mapping):
    if family not in _BUILDERS:
        raise ValueError(f"unknown classifier family {family!r}")
    return _BUILDERS[family](dict(params))


def train_predict(family: str, params: Mapping, X_train, y_train, X_eval,
                  seed: int = 0, n_classes: int = 3) -> np.ndarray:
    """Fit one configuration on the training set and predict the eval set."""
    X_train = np.asarray(X_train, dtype=np.float64)
    X_eval = np.asarray(X_eval, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    if X_eval.size and not np.all(np.isfinite(X_eval)):
        raise ValueError("eval features must be finite")
    model = build_classifier(family, params)
    model.fit(X_train, y_train, n_classes, seed)
    return model.predict(X_eval)
