"""L2-regularised logistic regression fitted by full-batch gradient descent."""
import numpy as np
import scipy.sparse as sp
from scipy.special import expit, log_expit


def loss_and_grad(theta: np.ndarray, X, y: np.ndarray, C: float):
    """Objective ``C * sum(logloss) + 0.5 * ||w||^2`` and its gradient.

    ``theta`` packs the weights followed by the (unpenalised) intercept.
    """
    w, b = theta[:-1], theta[-1]
    z = np.asarray(X @ w).ravel() + b
    # log(1 + e^-z) for y=1 and log(1 + e^z) for y=0, computed stably
    loss = -C * np.sum(y * log_expit(z) + (1 - y) * log_expit(-z)) + 0.5 * np.dot(w, w)
    r = C * (expit(z) - y)
    grad = np.empty_like(theta)
    grad[:-1] = np.asarray(X.T @ r).ravel() + w
    grad[-1] = r.sum()
    return float(loss), grad


class LogisticRegression:
    """Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.

    The Armijo test is nonmonotone (against the largest of the last ``memory``
    losses), which lets the BB steps do their job.  Stops when the largest
    gradient component falls below ``tol``; after ``max_iter`` iterations the
    lowest-loss iterate is kept and ``converged_`` is False.
    """

    memory = 10

    def __init__(self, C=1.0, tol=1e-4, max_iter=100):
        if C <= 0:
            raise ValueError("C must be positive")
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X: sp.csr_matrix, y: np.ndarray):
        y = y.astype(np.float64)
        theta = np.zeros(X.shape[1] + 1)
        f, g = loss_and_grad(theta, X, y, self.C)
        # 1/L for the logistic part: L <= C/4 * ||[X 1]||_2^2 + 1, bounded by the Frobenius norm
        lipschitz = 0.25 * self.C * (X.multiply(X).sum() + X.shape[0]) + 1.0
        step = 1.0 / lipschitz
        best = (f, theta, g)
        self.converged_ = False
        self.n_iter_ = 0
        self.loss_history_ = [f]
        for it in range(self.max_iter):
            if np.max(np.abs(g)) <= self.tol:
                self.converged_ = True
                break
            gg = float(np.dot(g, g))
            # nonmonotone Armijo: compare with the worst of the recent losses
            f_ref = max(self.loss_history_[-self.memory:])
            t = step
            while True:
                cand = theta - t * g
                f_new, g_new = loss_and_grad(cand, X, y, self.C)
                if f_new <= f_ref - 1e-4 * t * gg or t < 1e-20:
                    break
                t *= 0.5
            if t < 1e-20 and f_new >= f:
                break  # line search stalled at machine precision
            s = cand - theta
            d = g_new - g
            sd = float(np.dot(s, d))
            theta, f, g = cand, f_new, g_new
            if f < best[0]:
                best = (f, theta, g)
            self.n_iter_ = it + 1
            self.loss_history_.append(f)
            step = float(np.dot(s, s)) / sd if sd > 0 else t
        else:
            self.converged_ = bool(np.max(np.abs(g)) <= self.tol)
        if not self.converged_:
            f, theta, g = best
        self.coef_ = theta[:-1]
        self.intercept_ = float(theta[-1])
        self.loss_ = f
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X @ self.coef_).ravel() + self.intercept_

    def score(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def get_state(self):
        return {"C": self.C, "tol": self.tol, "max_iter": self.max_iter,
                "coef": self.coef_, "intercept": self.intercept_,
                "converged": self.converged_}

    @classmethod
    def from_state(cls, state):
        model = cls(state["C"], state["tol"], state["max_iter"])
        model.coef_ = state["coef"]
        model.intercept_ = state["intercept"]
        model.converged_ = state["converged"]
        return model
