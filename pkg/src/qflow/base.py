"""Shared estimator plumbing for the anomaly detectors."""
from __future__ import annotations

import numpy as np
from sklearn.base import OutlierMixin

from ._validation import check_is_fitted, check_matrix, check_n_features


class AnomalyDetectorMixin(OutlierMixin):
    """sklearn outlier API on top of an ``_anomaly_score`` method.

    Subclasses implement ``_anomaly_score(X)`` (higher = more anomalous) and
    set ``threshold_`` during ``fit``. ``score_samples`` follows the sklearn
    sign convention (higher = more normal).
    """

    def _check_X(self, X) -> np.ndarray:
        check_is_fitted(self, "threshold_")
        X = check_matrix(X)
        check_n_features(X, self.n_features_in_)
        return X

    def anomaly_score(self, X) -> np.ndarray:
        return self._anomaly_score(self._check_X(X))

    def score_samples(self, X) -> np.ndarray:
        return -self.anomaly_score(X)

    def decision_function(self, X) -> np.ndarray:
        return self.threshold_ - self.anomaly_score(X)

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) < 0, -1, 1)

    def _set_threshold(self, train_scores, contamination):
        finite = np.asarray(train_scores)[np.isfinite(train_scores)]
        if finite.size == 0:
            self.threshold_ = np.inf
        else:
            self.threshold_ = float(np.quantile(finite, 1.0 - contamination))


class Standardizer:
    """Z-score scaling with training statistics; constant columns keep unit scale."""

    def fit(self, X):
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        return self

    def transform(self, X):
        return (X - self.mean_) / self.scale_
