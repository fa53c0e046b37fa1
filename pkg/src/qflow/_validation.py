"""Input validation shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted  # noqa: F401


def check_matrix(X, min_samples: int = 1) -> np.ndarray:
    """2-D finite float array with at least ``min_samples`` rows."""
    return check_array(X, dtype=np.float64, ensure_min_samples=min_samples)


def check_row(row, n_features: int) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64).reshape(-1)
    if row.shape[0] != n_features:
        raise ValueError(f"expected {n_features} features, got {row.shape[0]}")
    if not np.all(np.isfinite(row)):
        raise ValueError("row contains NaN or infinity")
    return row


def check_n_features(X: np.ndarray, n_features: int) -> None:
    if X.shape[1] != n_features:
        raise ValueError(
            f"X has {X.shape[1]} features, but the estimator was fitted with {n_features}"
        )
