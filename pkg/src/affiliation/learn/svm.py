"""Soft-margin RBF kernel machines trained by SMO.

Both the classifier and the epsilon-insensitive regressor reduce to the
same box-constrained dual::

    min_a  0.5 a'Qa + p'a   s.t.  y'a = 0,  0 <= a <= C

which is solved with second-order working-set selection (Fan, Chen & Lin,
2005). Decision values are ``sum_i coef_i K(x_i, x) - rho``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

TAU = 1e-12


def sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    sq = (A**2).sum(1)[:, None] + (B**2).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(sq, 0.0)


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * sq_distances(A, B))


@njit(cache=True)
def _smo(Q, p, y, C, eps, max_iter):
    n = p.shape[0]
    alpha = np.zeros(n)
    G = p.copy()
    QD = np.empty(n)
    for k in range(n):
        QD[k] = Q[k, k]
    it = 0
    while it < max_iter:
        # select i: maximal violating index among I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if y[t] == 1:
                if alpha[t] < C:
                    if -G[t] >= gmax:
                        gmax = -G[t]
                        i = t
            else:
                if alpha[t] > 0:
                    if G[t] >= gmax:
                        gmax = G[t]
                        i = t
        if i == -1:
            break
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if y[t] == 1:
                if alpha[t] > 0:
                    grad_diff = gmax + G[t]
                    if G[t] >= gmax2:
                        gmax2 = G[t]
                    if grad_diff > 0:
                        quad = QD[i] + QD[t] - 2.0 * y[i] * Q[i, t]
                        if quad <= 0:
                            quad = TAU
                        obj = -(grad_diff * grad_diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
            else:
                if alpha[t] < C:
                    grad_diff = gmax - G[t]
                    if -G[t] >= gmax2:
                        gmax2 = -G[t]
                    if grad_diff > 0:
                        quad = QD[i] + QD[t] + 2.0 * y[i] * Q[i, t]
                        if quad <= 0:
                            quad = TAU
                        obj = -(grad_diff * grad_diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
        if gmax + gmax2 < eps or j == -1:
            break
        it += 1

        old_ai = alpha[i]
        old_aj = alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:  # C_i - C_j == 0
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        for t in range(n):
            G[t] += Q[i, t] * dai + Q[j, t] * daj

    # offset rho from free variables, or the midpoint of the feasible range
    ub = np.inf
    lb = -np.inf
    s = 0.0
    nfree = 0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] == -1:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] == 1:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            s += yg
    if nfree > 0:
        rho = s / nfree
    else:
        rho = 0.5 * (ub + lb)
    return alpha, rho, it


class DegenerateTrainingSet(ValueError):
    """Training labels contain a single class."""


@dataclass
class KernelMachine:
    support_vectors: np.ndarray
    coef: np.ndarray
    rho: float
    gamma: float
    classify: bool
    n_iter: int = 0

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        if len(self.coef) == 0:
            return np.full(len(X), -self.rho)
        return rbf_kernel(np.asarray(X, dtype=float), self.support_vectors, self.gamma) @ self.coef - self.rho

    def predict(self, X: np.ndarray) -> np.ndarray:
        d = self.decision_function(X)
        if self.classify:
            return (d > 0).astype(int)
        return d


def _finish(X, coef, rho, gamma, classify, it) -> KernelMachine:
    sv = np.abs(coef) > 0
    return KernelMachine(X[sv].copy(), coef[sv].copy(), float(rho), float(gamma), classify, int(it))


def fit_svc(X, y, C: float = 1.0, gamma: float = 1.0, tol: float = 1e-3, max_iter: int = 10_000_000) -> KernelMachine:
    """Binary soft-margin classifier; ``y`` in {0, 1}."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise DegenerateTrainingSet("margin classifier needs both classes in the training set")
    coef, rho, it = svc_dual(rbf_kernel(X, X, gamma), y, C, tol, max_iter)
    return _finish(X, coef, rho, gamma, True, it)


def svc_dual(K: np.ndarray, y, C: float, tol: float = 1e-3, max_iter: int = 10_000_000):
    """Classifier dual on a precomputed kernel: (coef = alpha * y, rho, iterations)."""
    ys = np.where(np.asarray(y) > 0, 1.0, -1.0)
    Q = (ys[:, None] * ys[None, :]) * K
    alpha, rho, it = _smo(Q, -np.ones(len(ys)), ys, float(C), tol, max_iter)
    return alpha * ys, rho, it


def svr_dual(K: np.ndarray, y, C: float, epsilon: float, tol: float = 1e-3, max_iter: int = 10_000_000):
    """Epsilon-SVR dual on a precomputed kernel: (coef, rho, iterations)."""
    z = np.asarray(y, dtype=float)
    n = len(z)
    ys = np.concatenate((np.ones(n), -np.ones(n)))
    KK = np.block([[K, K], [K, K]])
    Q = (ys[:, None] * ys[None, :]) * KK
    p = np.concatenate((epsilon - z, epsilon + z))
    alpha, rho, it = _smo(Q, p, ys, float(C), tol, max_iter)
    return alpha[:n] - alpha[n:], rho, it


def fit_svr(X, y, C: float = 1.0, gamma: float = 1.0, epsilon: float = 0.1, tol: float = 1e-3,
            max_iter: int = 10_000_000) -> KernelMachine:
    """Epsilon-insensitive support vector regression."""
    X = np.ascontiguousarray(X, dtype=float)
    coef, rho, it = svr_dual(rbf_kernel(X, X, gamma), y, C, epsilon, tol, max_iter)
    return _finish(X, coef, rho, gamma, False, it)
