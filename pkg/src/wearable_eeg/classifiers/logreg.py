"""L1-regularized logistic regression.

Minimizes ``||w||_1 + C * sum_i log(1 + exp(-y_i (w.x_i + b)))`` with an
unpenalized intercept ``b``. The solver is accelerated proximal gradient
(FISTA) with backtracking and gradient-based restarts; soft-thresholding
produces exact zeros, and the returned point is certified by the L1
first-order optimality residual.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(eq=False)
class LinearModel:
    w: np.ndarray
    intercept: float
    C: float
    fit_intercept: bool = True
    converged: bool = True
    n_iter: int = 0
    residual: float = 0.0

    @property
    def n_features(self):
        return self.w.size


def _logloss(margins):
    # sum log(1 + exp(-m)), stable for large |m|
    return np.sum(np.logaddexp(0.0, -margins))


def objective(w, b, X, y, C):
    """Penalized objective value at ``(w, b)``."""
    return np.abs(w).sum() + C * _logloss(y * (X @ w + b))


def loss_gradient(w, b, X, y, C):
    """Gradient of the C-scaled logistic loss with respect to (w, b)."""
    margins = y * (X @ w + b)
    r = -y * expit(-margins)
    return C * (X.T @ r), C * r.sum()


def optimality_residual(w, b, X, y, C, fit_intercept=True):
    """Largest violation of the L1 first-order optimality conditions.

    For ``w_j == 0`` the loss gradient must satisfy ``|g_j| <= 1``; for
    ``w_j != 0`` it must equal ``-sign(w_j)``; the intercept gradient must
    vanish.
    """
    g, gb = loss_gradient(w, b, X, y, C)
    zero = w == 0
    viol = np.where(zero, np.maximum(np.abs(g) - 1.0, 0.0), np.abs(g + np.sign(w)))
    res = viol.max(initial=0.0)
    if fit_intercept:
        res = max(res, abs(gb))
    return float(res)


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def train_l1_logreg(X, y, C=1.0, tol=1e-5, fit_intercept=True, max_iter=50_000,
                    check_every=10):
    """Fit the L1-penalized logistic model.

    Parameters
    ----------
    X : ndarray, shape (n, d)
    y : ndarray, shape (n,)
        Labels in {-1, +1}.
    C : float
        Weight of the loss term (the penalty has weight 1).
    tol : float
        Target optimality residual, see :func:`optimality_residual`.

    Returns
    -------
    LinearModel
        ``converged`` is False if ``max_iter`` ran out first.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, d) and y must be (n,)")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise ValueError("training data must contain both classes labelled -1 and +1")
    if not C > 0:
        raise ValueError("C must be positive")
    n, d = X.shape

    def smooth(w, b):
        return C * _logloss(y * (X @ w + b))

    # Lipschitz bound of the loss gradient, used for the first step only
    spec = np.linalg.norm(np.column_stack([X, np.ones(n)]) if fit_intercept else X, 2)
    L = max(C * spec ** 2 / 4.0, 1e-12)

    w = np.zeros(d)
    b = 0.0
    if fit_intercept:
        p = np.clip(np.mean(y > 0), 1e-12, 1 - 1e-12)
        b = float(np.log(p / (1 - p)))
    zw, zb = w.copy(), b
    t = 1.0
    f_prev = smooth(w, b) + np.abs(w).sum()
    residual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        if it % check_every == 1 or check_every == 1:
            residual = optimality_residual(w, b, X, y, C, fit_intercept)
            if residual <= tol:
                break
        gw, gb = loss_gradient(zw, zb, X, y, C)
        fz = smooth(zw, zb)
        while True:
            w_new = _soft_threshold(zw - gw / L, 1.0 / L)
            b_new = zb - gb / L if fit_intercept else 0.0
            dw, db = w_new - zw, b_new - zb
            quad = fz + gw @ dw + gb * db + 0.5 * L * (dw @ dw + db * db)
            if smooth(w_new, b_new) <= quad + 1e-12 * abs(quad):
                break
            L *= 2.0
        f_new = smooth(w_new, b_new) + np.abs(w_new).sum()
        # restart momentum when the objective goes up
        if f_new > f_prev:
            t = 1.0
            zw, zb = w.copy(), b
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_new
        zw = w_new + beta * (w_new - w)
        zb = b_new + beta * (b_new - b) if fit_intercept else 0.0
        w, b, t, f_prev = w_new, b_new, t_new, f_new
        L *= 0.9
    residual = optimality_residual(w, b, X, y, C, fit_intercept)
    return LinearModel(w, float(b), float(C), fit_intercept, residual <= tol, it, residual)


def predict_linear(model, X):
    """Labels (score > 0 gives +1, otherwise -1) and real scores."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.w.size:
        raise ValueError(f"expected {model.w.size} features, got {X.shape}")
    scores = X @ model.w + model.intercept
    return np.where(scores > 0, 1, -1), scores
