"""RBF-kernel SVM trained in the dual by sequential minimal optimization.

The dual is ``min 0.5 a'Qa - sum(a)`` subject to ``0 <= a_i <= C`` and
``sum(a_i y_i) = 0`` with ``Q_ij = y_i y_j k(x_i, x_j)`` and
``k(x, x') = exp(-gamma ||x - x'||^2)``. Each step updates the maximal
violating pair; training stops when the KKT gap ``m(a) - M(a)`` drops to
``tol``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import ConvergenceError

TAU = 1e-12


@dataclass(eq=False)
class KernelModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for each support vector
    intercept: float
    gamma: float
    C: float
    alpha: np.ndarray = None  # all multipliers, in training order
    n_iter: int = 0
    violation: float = 0.0

    @property
    def n_features(self):
        return self.support_vectors.shape[1]


def squared_distances(A, B):
    # direct differences: identical rows give exactly 0, so k(x, x) == 1
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return cdist(A, B, "sqeuclidean")


def rbf_kernel(A, B, gamma):
    return np.exp(-gamma * squared_distances(A, B))


def dual_objective(alpha, y, K):
    """Dual objective to maximize: ``sum(a) - 0.5 sum a_i a_j y_i y_j K_ij``."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def _smo(Q, y, C, tol, max_iter):
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(Q).copy()
    pos = y > 0
    gap = np.inf
    for it in range(1, max_iter + 1):
        minus_yg = -y * grad
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        cand_up = np.where(up, minus_yg, -np.inf)
        cand_low = np.where(low, minus_yg, np.inf)
        i = int(np.argmax(cand_up))
        j = int(np.argmin(cand_low))
        gap = cand_up[i] - cand_low[j]
        if gap <= tol:
            return alpha, grad, it - 1, gap
        old_ai, old_aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] + 2.0 * Q[i, j], TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = old_ai - old_aj
            ai, aj = old_ai + delta, old_aj + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * Q[i, j], TAU)
            delta = (grad[i] - grad[j]) / quad
            total = old_ai + old_aj
            ai, aj = old_ai - delta, old_aj + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        grad += Q[:, i] * (ai - old_ai) + Q[:, j] * (aj - old_aj)
    raise ConvergenceError(f"SMO did not converge in {max_iter} pair updates "
                           f"(KKT gap {gap:.3g} > tol {tol:g})", residual=gap)


def _intercept(alpha, grad, y, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        rho = yg[free].mean()
    else:
        pos = y > 0
        at_upper = alpha >= C
        at_lower = alpha <= 0
        # bounds on rho from the multipliers stuck at the box edges
        ub_mask = (at_upper & ~pos) | (at_lower & pos)
        lb_mask = (at_upper & pos) | (at_lower & ~pos)
        ub = yg[ub_mask].min(initial=np.inf)
        lb = yg[lb_mask].max(initial=-np.inf)
        if np.isfinite(ub) and np.isfinite(lb):
            rho = 0.5 * (ub + lb)
        else:
            rho = ub if np.isfinite(ub) else (lb if np.isfinite(lb) else 0.0)
    return -float(rho)


def train_svm_rbf(X, y, C=1.0, gamma=1.0, tol=1e-3, max_iter=1_000_000, kernel=None):
    """Train a binary RBF SVM.

    ``kernel`` may supply the precomputed training Gram matrix.
    Raises :class:`ConvergenceError` if ``max_iter`` pair updates do not
    bring the KKT gap below ``tol``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, d) and y must be (n,)")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise ValueError("training data must contain both classes labelled -1 and +1")
    if not C > 0 or not gamma > 0:
        raise ValueError("C and gamma must be positive")
    K = rbf_kernel(X, X, gamma) if kernel is None else np.asarray(kernel, dtype=float)
    Q = (y[:, None] * y[None, :]) * K
    alpha, grad, n_iter, gap = _smo(Q, y, float(C), tol, max_iter)
    b = _intercept(alpha, grad, y, C)
    sv = alpha > 0
    return KernelModel(X[sv].copy(), (alpha * y)[sv], b, float(gamma), float(C),
                       alpha, n_iter, float(gap))


def predict_svm(model, X, kernel=None):
    """Labels and decision scores ``sum_i a_i y_i k(s_i, x) + b``.

    ``kernel`` may supply ``k(X, support_vectors)`` precomputed.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape}")
    if kernel is None:
        kernel = rbf_kernel(X, model.support_vectors, model.gamma)
    scores = kernel @ model.dual_coef + model.intercept
    return np.where(scores > 0, 1, -1), scores
