"""Multinomial naive Bayes with additive smoothing."""
import numpy as np
import scipy.sparse as sp


class MultinomialNB:
    """Class-conditional multinomial likelihoods over non-negative feature weights.

    Fractional weights (TF-IDF) are treated as pseudo-counts.  Class priors are
    the empirical class frequencies.
    """

    def __init__(self, alpha=1.0):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = alpha

    def fit(self, X: sp.csr_matrix, y: np.ndarray):
        if X.nnz and X.data.min() < 0:
            raise ValueError("MultinomialNB needs non-negative feature weights")
        Y = np.column_stack([y == 0, y == 1]).astype(np.float64)
        counts = np.asarray(X.T @ Y).T + self.alpha           # (2, d)
        self.feature_log_prob_ = np.log(counts) - np.log(counts.sum(axis=1, keepdims=True))
        self.class_log_prior_ = np.log(Y.sum(axis=0) / Y.shape[0])
        return self

    def joint_log_likelihood(self, X: sp.csr_matrix) -> np.ndarray:
        return np.asarray(X @ self.feature_log_prob_.T) + self.class_log_prior_

    def score(self, X: sp.csr_matrix) -> np.ndarray:
        """Posterior probability of class 1."""
        jll = self.joint_log_likelihood(X)
        return 1.0 / (1.0 + np.exp(jll[:, 0] - jll[:, 1]))

    def get_state(self):
        return {"alpha": self.alpha, "feature_log_prob": self.feature_log_prob_,
                "class_log_prior": self.class_log_prior_}

    @classmethod
    def from_state(cls, state):
        model = cls(state["alpha"])
        model.feature_log_prob_ = state["feature_log_prob"]
        model.class_log_prior_ = state["class_log_prior"]
        return model
