"""Soft-margin SVM trained with sequential minimal optimisation.

Working-set selection follows the second-order rule of Fan, Chen & Lin (2005):
the first index is the maximal KKT violator, the second maximises the
guaranteed decrease of the dual objective.  Kernel columns are computed on
demand from the sparse inputs and kept in a bounded LRU cache.

Scores are turned into probabilities with Platt's sigmoid fitted on the
training decision values.
"""
from __future__ import annotations

from collections import OrderedDict

import numpy as np
import scipy.sparse as sp

TAU = 1e-12


def rbf_gamma(X: sp.csr_matrix, gamma) -> float:
    """Resolve ``"scale"`` (1 / (d * Var[X])) and ``"auto"`` (1 / d) to a number."""
    d = X.shape[1]
    if gamma == "scale":
        n_entries = X.shape[0] * d
        mean = X.sum() / n_entries
        var = X.multiply(X).sum() / n_entries - mean * mean
        return 1.0 / (d * var) if var > 0 else 1.0
    if gamma == "auto":
        return 1.0 / d
    return float(gamma)


class _KernelColumns:
    def __init__(self, X: sp.csr_matrix, kernel: str, gamma: float, cache_mb: float = 200.0):
        self.X = X
        self.kernel = kernel
        self.gamma = gamma
        self.sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
        self.capacity = max(2, int(cache_mb * 2**20 / (8 * max(X.shape[0], 1))))
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()

    def diag(self) -> np.ndarray:
        if self.kernel == "linear":
            return self.sq.copy()
        return np.ones(self.X.shape[0])

    def column(self, i: int) -> np.ndarray:
        col = self.cache.get(i)
        if col is not None:
            self.cache.move_to_end(i)
            return col
        dots = np.asarray(self.X @ self.X[i].T.toarray()).ravel()
        if self.kernel == "linear":
            col = dots
        else:
            col = np.exp(-self.gamma * np.maximum(self.sq + self.sq[i] - 2.0 * dots, 0.0))
        self.cache[i] = col
        if len(self.cache) > self.capacity:
            self.cache.popitem(last=False)
        return col


def kernel_matrix(A: sp.csr_matrix, B: sp.csr_matrix, kernel: str, gamma: float) -> np.ndarray:
    dots = np.asarray((A @ B.T).todense())
    if kernel == "linear":
        return dots
    sa = np.asarray(A.multiply(A).sum(axis=1)).ravel()
    sb = np.asarray(B.multiply(B).sum(axis=1)).ravel()
    return np.exp(-gamma * np.maximum(sa[:, None] + sb[None, :] - 2.0 * dots, 0.0))


def platt_fit(decision: np.ndarray, y: np.ndarray, max_iter: int = 100):
    """Sigmoid ``1 / (1 + exp(A f + B))`` by Newton's method with backtracking.

    Uses the regularised targets of Platt (1999) and the numerically stable
    formulation of Lin, Lin & Weng (2007).
    """
    n_pos = float(np.sum(y == 1))
    n_neg = float(y.size - n_pos)
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(y == 1, hi, lo)
    A, B = 0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))
    sigma, eps = 1e-12, 1e-5

    def objective(a, b):
        fApB = decision * a + b
        return np.sum(np.where(fApB >= 0, t * fApB + np.log1p(np.exp(-fApB)),
                               (t - 1) * fApB + np.log1p(np.exp(fApB))))

    fval = objective(A, B)
    for _ in range(max_iter):
        fApB = decision * A + B
        p = np.where(fApB >= 0, np.exp(-fApB) / (1.0 + np.exp(-fApB)), 1.0 / (1.0 + np.exp(fApB)))
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + np.dot(decision * decision, d2)
        h22 = sigma + d2.sum()
        h21 = np.dot(decision, d2)
        d1 = t - p
        g1 = np.dot(decision, d1)
        g2 = d1.sum()
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            newA, newB = A + step * dA, B + step * dB
            newf = objective(newA, newB)
            if newf < fval + 1e-4 * step * gd:
                A, B, fval = newA, newB, newf
                break
            step /= 2.0
        else:
            break
    return float(A), float(B)


class SVC:
    """Binary soft-margin SVM; labels are 0/1 externally and -1/+1 internally."""

    def __init__(self, C=1.0, kernel="rbf", gamma="scale", tol=1e-3, max_iter=None, cache_mb=200.0):
        if C <= 0:
            raise ValueError("C must be positive")
        if kernel not in ("rbf", "linear"):
            raise ValueError(f"unsupported kernel {kernel!r}")
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.cache_mb = cache_mb

    def fit(self, X: sp.csr_matrix, y: np.ndarray):
        X = sp.csr_matrix(X, dtype=np.float64)
        n = X.shape[0]
        ys = np.where(y == 1, 1.0, -1.0)
        self.gamma_ = rbf_gamma(X, self.gamma) if self.kernel == "rbf" else 0.0
        K = _KernelColumns(X, self.kernel, self.gamma_, self.cache_mb)
        QD = K.diag()
        C = self.C
        alpha = np.zeros(n)
        G = -np.ones(n)  # gradient of 0.5 a'Qa - e'a
        max_iter = self.max_iter or max(10_000_000, 100 * n)
        self.converged_ = False
        it = 0
        while it < max_iter:
            # I_up / I_low membership
            up = ((ys > 0) & (alpha < C)) | ((ys < 0) & (alpha > 0))
            low = ((ys > 0) & (alpha > 0)) | ((ys < 0) & (alpha < C))
            v = -ys * G
            v_up = np.where(up, v, -np.inf)
            i = int(np.argmax(v_up))
            gmax = v_up[i]
            gmax2 = np.max(np.where(low, -v, -np.inf))
            if gmax + gmax2 < self.tol:
                self.converged_ = True
                break
            Ki = K.column(i)
            b = gmax - v  # > 0 for candidate j
            cand = low & (b > 0)
            if not cand.any():
                self.converged_ = True
                break
            a = QD[i] + QD - 2.0 * Ki
            a = np.where(a > 0, a, TAU)
            obj = np.where(cand, -(b * b) / a, np.inf)
            j = int(np.argmin(obj))
            Kj = K.column(j)
            Qij = ys[i] * ys[j] * Ki[j]
            ai_old, aj_old = alpha[i], alpha[j]
            if ys[i] != ys[j]:
                quad = QD[i] + QD[j] + 2.0 * Qij
                quad = quad if quad > 0 else TAU
                delta = (-G[i] - G[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j], alpha[i] = 0.0, diff
                elif alpha[i] < 0:
                    alpha[i], alpha[j] = 0.0, -diff
                if diff > 0:
                    if alpha[i] > C:
                        alpha[i], alpha[j] = C, C - diff
                elif alpha[j] > C:
                    alpha[j], alpha[i] = C, C + diff
            else:
                quad = QD[i] + QD[j] - 2.0 * Qij
                quad = quad if quad > 0 else TAU
                delta = (G[i] - G[j]) / quad
                total = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if total > C:
                    if alpha[i] > C:
                        alpha[i], alpha[j] = C, total - C
                elif alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, total
                if total > C:
                    if alpha[j] > C:
                        alpha[j], alpha[i] = C, total - C
                elif alpha[i] < 0:
                    alpha[i], alpha[j] = 0.0, total
            dai = alpha[i] - ai_old
            daj = alpha[j] - aj_old
            # G += Q[:, i] dai + Q[:, j] daj with Q = yy'K
            G += ys * (ys[i] * Ki * dai + ys[j] * Kj * daj)
            it += 1
        self.n_iter_ = it
        self.rho_ = self._rho(alpha, ys, G)
        self.alpha_ = alpha
        self.gradient_ = G
        sv = alpha > 0
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv]
        self.dual_coef_ = alpha[sv] * ys[sv]
        self.platt_ = platt_fit(self.decision_function(X), y)
        return self

    def _rho(self, alpha, ys, G) -> float:
        yG = ys * G
        free = (alpha > 0) & (alpha < self.C)
        if free.any():
            return float(yG[free].mean())
        ub, lb = np.inf, -np.inf
        at_upper = alpha >= self.C
        at_lower = alpha <= 0
        # bounds on rho from variables stuck at a box edge
        m1 = (at_upper & (ys < 0)) | (at_lower & (ys > 0))
        m2 = (at_upper & (ys > 0)) | (at_lower & (ys < 0))
        if m1.any():
            ub = float(yG[m1].min())
        if m2.any():
            lb = float(yG[m2].max())
        if np.isinf(ub):
            return lb
        if np.isinf(lb):
            return ub
        return 0.5 * (ub + lb)

    def decision_function(self, X) -> np.ndarray:
        if self.support_vectors_.shape[0] == 0:
            return np.full(X.shape[0], -self.rho_)
        Kx = kernel_matrix(sp.csr_matrix(X), self.support_vectors_, self.kernel, self.gamma_)
        return Kx @ self.dual_coef_ - self.rho_

    def score(self, X) -> np.ndarray:
        A, B = self.platt_
        f = self.decision_function(X) * A + B
        return np.where(f >= 0, np.exp(-f) / (1.0 + np.exp(-f)), 1.0 / (1.0 + np.exp(f)))

    def get_state(self):
        sv = self.support_vectors_.tocsr()
        return {"C": self.C, "kernel": self.kernel, "gamma": self.gamma_, "tol": self.tol,
                "rho": self.rho_, "dual_coef": self.dual_coef_, "platt": list(self.platt_),
                "sv_data": sv.data, "sv_indices": sv.indices, "sv_indptr": sv.indptr,
                "sv_shape": list(sv.shape)}

    @classmethod
    def from_state(cls, state):
        model = cls(state["C"], state["kernel"], state["gamma"], state["tol"])
        model.gamma_ = state["gamma"]
        model.rho_ = state["rho"]
        model.dual_coef_ = state["dual_coef"]
        model.platt_ = tuple(state["platt"])
        model.support_vectors_ = sp.csr_matrix(
            (state["sv_data"], state["sv_indices"], state["sv_indptr"]), shape=tuple(state["sv_shape"]))
        return model


def kkt_violations(model: SVC, X, y) -> np.ndarray:
    """Per-sample KKT violation of a fitted SVC on its training data.

    With margins ``m_i = y_i f(x_i)``: alpha=0 needs m >= 1, 0<alpha<C needs
    m == 1 and alpha=C needs m <= 1.  Returns how far each sample is from
    satisfying its condition (0 when satisfied).
    """
    ys = np.where(np.asarray(y) == 1, 1.0, -1.0)
    m = ys * model.decision_function(X)
    a = model.alpha_
    out = np.zeros_like(m)
    at_lower = a <= 0
    at_upper = a >= model.C
    free = ~at_lower & ~at_upper
    out[at_lower] = np.maximum(0.0, 1.0 - m[at_lower])
    out[at_upper] = np.maximum(0.0, m[at_upper] - 1.0)
    out[free] = np.abs(m[free] - 1.0)
    return out
