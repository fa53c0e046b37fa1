"""One-class SVM with an RBF kernel, solved in the dual by pairwise updates."""
from __future__ import annotations

import warnings

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning

from .._validation import check_matrix
from ..base import AnomalyDetectorMixin, Standardizer


def rbf_kernel(A, B, gamma):
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


def solve_dual(K: np.ndarray, nu: float, tol: float = 1e-6, max_iter: int = 100_000):
    """Minimize ``0.5 a^T K a`` s.t. ``sum(a) = 1``, ``0 <= a <= 1/(nu*l)``.

    Returns ``(alpha, rho, converged)``. Each iteration moves weight between
    the maximal violating pair; ``rho`` is the mean gradient over free
    coefficients (or the midpoint of its feasible interval if none are free).
    """
    n = K.shape[0]
    C = 1.0 / (nu * n)
    alpha = np.zeros(n)
    full = min(int(np.floor(nu * n + 1e-12)), n)
    alpha[:full] = C
    if full < n:
        alpha[full] = 1.0 - full * C
    grad = K @ alpha
    converged = False
    for _ in range(max_iter):
        up = alpha < C - 1e-15
        low = alpha > 1e-15
        gi = np.where(up, grad, np.inf)
        gj = np.where(low, grad, -np.inf)
        i, j = int(np.argmin(gi)), int(np.argmax(gj))
        if gj[j] - gi[i] < tol:
            converged = True
            break
        eta = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        delta = min((grad[j] - grad[i]) / eta, C - alpha[i], alpha[j])
        alpha[i] += delta
        alpha[j] -= delta
        grad += delta * (K[:, i] - K[:, j])
    alpha = np.clip(alpha, 0.0, C)
    free = (alpha > 1e-12) & (alpha < C - 1e-12)
    if free.any():
        rho = float(grad[free].mean())
    else:
        at_zero = alpha <= 1e-12
        at_c = ~at_zero
        hi = grad[at_zero].min() if at_zero.any() else grad.max()
        lo = grad[at_c].max() if at_c.any() else grad.min()
        rho = 0.5 * (hi + lo)
    return alpha, rho, converged


class OneClassSVMDetector(AnomalyDetectorMixin, BaseEstimator):
    """One-class SVM; anomaly score ``rho - sum_i alpha_i k(x_i, x)``.

    Parameters
    ----------
    nu : float, default=0.1
    gamma : float or "scale", default="scale"
        RBF width; "scale" uses ``1 / (n_features * X.var())`` on the
        (standardized) training data.
    standardize : bool, default=True
    tol : float, default=1e-6
        KKT violation tolerance of the dual solver.
    max_iter : int, default=100000
    contamination : float, default=0.1
    """

    def __init__(self, nu=0.1, gamma="scale", standardize=True, tol=1e-6, max_iter=100_000,
                 contamination=0.1):
        self.nu = nu
        self.gamma = gamma
        self.standardize = standardize
        self.tol = tol
        self.max_iter = max_iter
        self.contamination = contamination

    def fit(self, X, y=None):
        X = check_matrix(X)
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must lie in (0, 1]")
        self.n_features_in_ = X.shape[1]
        self.scaler_ = Standardizer().fit(X) if self.standardize else None
        Z = self.scaler_.transform(X) if self.scaler_ else X
        if self.gamma == "scale":
            var = Z.var()
            self.gamma_ = 1.0 / (Z.shape[1] * var) if var > 0 else 1.0
        else:
            self.gamma_ = float(self.gamma)
            if self.gamma_ <= 0:
                raise ValueError("gamma must be positive")
        K = rbf_kernel(Z, Z, self.gamma_)
        alpha, rho, converged = solve_dual(K, self.nu, self.tol, self.max_iter)
        if not converged:
            warnings.warn(f"dual solver hit max_iter={self.max_iter} before reaching "
                          f"tol={self.tol}; using the last iterate", ConvergenceWarning)
        self.converged_ = converged
        self.dual_coef_ = alpha
        self.rho_ = rho
        self.support_ = np.flatnonzero(alpha > 0)
        self.support_vectors_ = Z[self.support_]
        self.dual_objective_ = 0.5 * alpha @ K @ alpha
        self._set_threshold(self._anomaly_score(X), self.contamination)
        return self

    def _anomaly_score(self, X):
        Z = self.scaler_.transform(X) if self.scaler_ else X
        k = rbf_kernel(Z, self.support_vectors_, self.gamma_)
        return self.rho_ - k @ self.dual_coef_[self.support_]


def ocsvm_fit(train, nu=0.1, gamma="scale") -> OneClassSVMDetector:
    return OneClassSVMDetector(nu=nu, gamma=gamma).fit(train)


def ocsvm_score(model: OneClassSVMDetector, row) -> float:
    return float(model.anomaly_score(np.atleast_2d(row))[0])
