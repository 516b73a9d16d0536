"""Random forest (bagged CART) and gradient-boosted regression trees."""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, log_expit

from .tree import GINI, SQUARED_ERROR, TreeModel, build_tree


def tree_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for tree ``index``, whatever order trees are built in."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


class RandomForest:
    """Bootstrap CART ensemble with ``sqrt(d)`` features tried per split.

    The score is the fraction of trees voting class 1.
    """

    def __init__(self, n_estimators=100, max_features="sqrt", max_depth=None,
                 min_samples_split=2, seed=0):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.seed = seed

    def _n_features(self, d: int) -> int | None:
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(d)))
        if self.max_features is None:
            return None
        return int(self.max_features)

    def fit(self, X: sp.csr_matrix, y: np.ndarray):
        n = X.shape[0]
        k = self._n_features(X.shape[1])
        self.trees_ = []
        for t in range(self.n_estimators):
            rng = tree_rng(self.seed, t)
            boot = rng.integers(0, n, size=n)
            self.trees_.append(build_tree(X[boot], y[boot], GINI, self.max_depth,
                                          self.min_samples_split, k, rng))
        return self

    def votes(self, X) -> np.ndarray:
        """(n_samples, n_trees) boolean matrix of class-1 votes."""
        X = sp.csr_matrix(X)
        # a tree whose leaf is an exact 50/50 mix votes for class 0
        return np.column_stack([tree.predict_value(X) > 0.5 for tree in self.trees_])

    def score(self, X) -> np.ndarray:
        return self.votes(X).mean(axis=1)

    def get_state(self):
        return {"n_estimators": self.n_estimators, "max_features": self.max_features,
                "max_depth": self.max_depth, "min_samples_split": self.min_samples_split,
                "seed": self.seed, "trees": [t.get_state() for t in self.trees_]}

    @classmethod
    def from_state(cls, state):
        model = cls(state["n_estimators"], state["max_features"], state["max_depth"],
                    state["min_samples_split"], state["seed"])
        model.trees_ = [TreeModel.from_state(s) for s in state["trees"]]
        return model


def binomial_deviance(y: np.ndarray, raw: np.ndarray) -> float:
    """Mean logistic loss of raw (log-odds) predictions."""
    return float(-np.mean(y * log_expit(raw) + (1 - y) * log_expit(-raw)))


class GradientBoosting:
    """Stage-wise additive log-odds model of depth-limited regression trees.

    Each stage fits a squared-error tree to the residuals ``y - p`` and sets the
    leaf outputs to one Newton step, ``sum(r) / sum(p (1 - p))``, shrunk by the
    learning rate.
    """

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3, min_samples_split=2, seed=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.seed = seed

    def fit(self, X: sp.csr_matrix, y: np.ndarray):
        X = sp.csr_matrix(X)
        y = y.astype(np.float64)
        p = y.mean()
        self.init_ = float(np.log(p / (1 - p)))
        raw = np.full(y.size, self.init_)
        self.trees_ = []
        self.train_loss_ = [binomial_deviance(y, raw)]
        for _ in range(self.n_estimators):
            prob = expit(raw)
            residual = y - prob
            tree = build_tree(X, residual, SQUARED_ERROR, self.max_depth, self.min_samples_split)
            leaves = tree.apply(X)
            num = np.bincount(leaves, weights=residual, minlength=tree.n_nodes)
            den = np.bincount(leaves, weights=prob * (1 - prob), minlength=tree.n_nodes)
            value = np.where(np.abs(den) < 1e-150, 0.0, num / np.where(den == 0, 1.0, den))
            tree.value = np.where(tree.feature < 0, value, 0.0)
            raw = raw + self.learning_rate * tree.value[leaves]
            self.trees_.append(tree)
            self.train_loss_.append(binomial_deviance(y, raw))
        return self

    def decision_function(self, X) -> np.ndarray:
        X = sp.csr_matrix(X)
        raw = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            raw += self.learning_rate * tree.predict_value(X)
        return raw

    def score(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def get_state(self):
        return {"n_estimators": self.n_estimators, "learning_rate": self.learning_rate,
                "max_depth": self.max_depth, "min_samples_split": self.min_samples_split,
                "seed": self.seed, "init": self.init_,
                "trees": [t.get_state() for t in self.trees_]}

    @classmethod
    def from_state(cls, state):
        model = cls(state["n_estimators"], state["learning_rate"], state["max_depth"],
                    state["min_samples_split"], state["seed"])
        model.init_ = state["init"]
        model.trees_ = [TreeModel.from_state(s) for s in state["trees"]]
        return model
