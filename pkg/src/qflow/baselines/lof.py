"""Local outlier factor in novelty mode (queries scored against training points)."""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from .._validation import check_matrix
from ..base import AnomalyDetectorMixin, Standardizer


def _ratio(num, den):
    """``num / den`` with inf/inf read as 1 (equal, infinitely dense neighborhoods)."""
    num, den = np.broadcast_arrays(np.asarray(num, float), np.asarray(den, float))
    out = np.empty(num.shape)
    both = np.isinf(num) & np.isinf(den)
    out[both] = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~both] = num[~both] / den[~both]
    return out


def _neighborhoods(dist, k):
    """k-distance and tie-inclusive k-neighborhood per row of a distance matrix."""
    kdist = np.sort(dist, axis=1)[:, k - 1]
    return kdist, [np.flatnonzero(row <= kd) for row, kd in zip(dist, kdist)]


def _lrd(dist, neighbors, kdist_train):
    out = np.empty(dist.shape[0])
    for i, nb in enumerate(neighbors):
        reach = np.maximum(kdist_train[nb], dist[i, nb])
        mean = reach.mean()
        out[i] = np.inf if mean == 0 else 1.0 / mean
    return out


class LocalOutlierFactorDetector(AnomalyDetectorMixin, BaseEstimator):
    """Local outlier factor with Euclidean distance.

    The k-neighborhood of a point contains every training point within its
    k-distance, so ties can make it larger than ``k``. Queries take their
    neighbors from the training set only.

    Parameters
    ----------
    n_neighbors : int, default=20
        Capped at ``n_train - 1``.
    standardize : bool, default=True
    contamination : float, default=0.1
    """

    def __init__(self, n_neighbors=20, standardize=True, contamination=0.1):
        self.n_neighbors = n_neighbors
        self.standardize = standardize
        self.contamination = contamination

    def fit(self, X, y=None):
        X = check_matrix(X, min_samples=2)
        n = X.shape[0]
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        self.n_neighbors_ = min(int(self.n_neighbors), n - 1)
        self.n_features_in_ = X.shape[1]
        self.scaler_ = Standardizer().fit(X) if self.standardize else None
        self.train_points_ = self.scaler_.transform(X) if self.scaler_ else X
        dist = cdist(self.train_points_, self.train_points_)
        np.fill_diagonal(dist, np.inf)  # a point is not its own neighbor
        self.kdist_, nbs = _neighborhoods(dist, self.n_neighbors_)
        self.lrd_ = _lrd(dist, nbs, self.kdist_)
        self.train_lof_ = np.array([_ratio(self.lrd_[nb], self.lrd_[i]).mean()
                                    for i, nb in enumerate(nbs)])
        self._set_threshold(self.train_lof_, self.contamination)
        return self

    def _anomaly_score(self, X):
        Z = self.scaler_.transform(X) if self.scaler_ else X
        dist = cdist(Z, self.train_points_)
        _, nbs = _neighborhoods(dist, self.n_neighbors_)
        lrd = _lrd(dist, nbs, self.kdist_)
        return np.array([_ratio(self.lrd_[nb], lrd[i]).mean() for i, nb in enumerate(nbs)])


def lof_fit(train, k=20) -> LocalOutlierFactorDetector:
    return LocalOutlierFactorDetector(n_neighbors=k).fit(train)


def lof_score(model: LocalOutlierFactorDetector, row) -> float:
    return float(model.anomaly_score(np.atleast_2d(row))[0])
