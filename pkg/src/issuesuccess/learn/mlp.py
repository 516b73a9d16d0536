"""Feed-forward network with ReLU hidden layers and a logistic output unit."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import expit, log_expit


def _shapes(n_features: int, hidden: tuple[int, ...]) -> list[tuple[int, int]]:
    sizes = [n_features, *hidden, 1]
    return [(sizes[k], sizes[k + 1]) for k in range(len(sizes) - 1)]


def unpack(theta: np.ndarray, shapes):
    weights, biases, pos = [], [], 0
    for fan_in, fan_out in shapes:
        weights.append(theta[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out))
        pos += fan_in * fan_out
    for _, fan_out in shapes:
        biases.append(theta[pos:pos + fan_out])
        pos += fan_out
    return weights, biases


def loss_and_grad(theta: np.ndarray, X, y: np.ndarray, shapes, alpha: float):
    """Mean log-loss plus ``alpha / (2n) * sum ||W||^2``, with backprop gradient."""
    n = X.shape[0]
    weights, biases = unpack(theta, shapes)
    acts = [X]
    pre = []
    h = X
    for k, (W, b) in enumerate(zip(weights, biases)):
        z = np.asarray(h @ W) + b
        pre.append(z)
        h = np.maximum(z, 0.0) if k < len(weights) - 1 else z
        acts.append(h)
    out = pre[-1].ravel()
    loss = -np.mean(y * log_expit(out) + (1 - y) * log_expit(-out))
    loss += alpha / (2 * n) * sum(np.sum(W * W) for W in weights)

    grad_w, grad_b = [None] * len(weights), [None] * len(weights)
    delta = ((expit(out) - y) / n)[:, None]
    for k in range(len(weights) - 1, -1, -1):
        grad_w[k] = np.asarray(acts[k].T @ delta) + (alpha / n) * weights[k]
        grad_b[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ weights[k].T) * (pre[k - 1] > 0)
    grad = np.concatenate([g.ravel() for g in grad_w] + [g.ravel() for g in grad_b])
    return float(loss), grad


def dead_layer(theta: np.ndarray, X, shapes) -> bool:
    """True when some hidden layer outputs zero for every row of ``X``.

    Such a network has a constant output and a zero gradient for all hidden
    weights, so no optimiser can leave that point.
    """
    weights, biases = unpack(theta, shapes)
    h = X
    for W, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(np.asarray(h @ W) + b, 0.0)
        if not np.any(h):
            return True
    return False


class MLPClassifier:
    """Full-batch backpropagation optimised with L-BFGS.

    A fit that ends with a dead hidden layer is restarted from a fresh
    initialisation (stream ``(seed, attempt)``), at most ``restarts`` times.
    """

    restarts = 4

    def __init__(self, hidden_layer_sizes=(5, 2), alpha=1e-5, max_iter=200, tol=1e-4, seed=1):
        self.hidden_layer_sizes = tuple(hidden_layer_sizes)
        self.alpha = alpha
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def _init_params(self, n_features: int, attempt: int = 0) -> np.ndarray:
        rng = np.random.default_rng(self.seed if attempt == 0 else np.random.SeedSequence([self.seed, attempt]))
        shapes = _shapes(n_features, self.hidden_layer_sizes)
        weights, biases = [], []
        for k, (fan_in, fan_out) in enumerate(shapes):
            # Glorot uniform; the factor for the logistic output layer is 2, for ReLU layers 6
            factor = 2.0 if k == len(shapes) - 1 else 6.0
            bound = np.sqrt(factor / (fan_in + fan_out))
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return np.concatenate([w.ravel() for w in weights] + [b.ravel() for b in biases])

    def fit(self, X: sp.csr_matrix, y: np.ndarray):
        y = y.astype(np.float64)
        self.shapes_ = _shapes(X.shape[1], self.hidden_layer_sizes)
        best = None
        for attempt in range(self.restarts + 1):
            res = minimize(loss_and_grad, self._init_params(X.shape[1], attempt),
                           args=(X, y, self.shapes_, self.alpha), jac=True, method="L-BFGS-B",
                           options={"maxiter": self.max_iter, "maxfun": 15000, "gtol": self.tol})
            dead = dead_layer(res.x, X, self.shapes_)
            if best is None or (best[1] and not dead) or (dead == best[1] and res.fun < best[0].fun):
                best = (res, dead)
            if not dead:
                break
        res = best[0]
        self.n_attempts_ = attempt + 1
        self.theta_ = res.x
        self.loss_ = float(res.fun)
        self.n_iter_ = int(res.nit)
        self.converged_ = bool(res.success) and res.nit < self.max_iter
        return self

    def decision_function(self, X) -> np.ndarray:
        weights, biases = unpack(self.theta_, self.shapes_)
        h = X
        for k, (W, b) in enumerate(zip(weights, biases)):
            z = np.asarray(h @ W) + b
            h = np.maximum(z, 0.0) if k < len(weights) - 1 else z
        return h.ravel()

    def score(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def get_state(self):
        return {"hidden_layer_sizes": list(self.hidden_layer_sizes), "alpha": self.alpha,
                "max_iter": self.max_iter, "tol": self.tol, "seed": self.seed,
                "theta": self.theta_, "n_features": self.shapes_[0][0],
                "converged": self.converged_}

    @classmethod
    def from_state(cls, state):
        model = cls(tuple(state["hidden_layer_sizes"]), state["alpha"], state["max_iter"],
                    state["tol"], state["seed"])
        model.shapes_ = _shapes(state["n_features"], model.hidden_layer_sizes)
        model.theta_ = state["theta"]
        model.converged_ = state["converged"]
        return model
