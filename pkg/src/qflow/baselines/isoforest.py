"""Isolation forest."""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from .._validation import check_matrix
from ..base import AnomalyDetectorMixin, Standardizer

EULER_GAMMA = 0.5772156649


def average_path_length(m) -> np.ndarray:
    """Mean unsuccessful-search path length ``c(m)`` of a BST with ``m`` keys."""
    m = np.asarray(m, dtype=np.float64)
    out = np.zeros_like(m)
    out[m == 2] = 1.0
    big = m > 2
    mb = m[big]
    out[big] = 2.0 * (np.log(mb - 1.0) + EULER_GAMMA) - 2.0 * (mb - 1.0) / mb
    return out


class _Tree:
    __slots__ = ("feature", "threshold", "left", "right", "size")

    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.size = [], [], [], [], []

    def _node(self, size):
        for lst, v in ((self.feature, -1), (self.threshold, 0.0), (self.left, -1),
                       (self.right, -1), (self.size, size)):
            lst.append(v)
        return len(self.size) - 1

    def grow(self, X, height_limit, rng):
        stack = [(self._node(len(X)), X, 0)]
        while stack:
            nid, data, depth = stack.pop()
            if depth >= height_limit or len(data) <= 1:
                continue
            lo, hi = data.min(axis=0), data.max(axis=0)
            usable = np.flatnonzero(hi > lo)
            if usable.size == 0:
                continue
            f = int(rng.choice(usable))
            t = float(rng.uniform(lo[f], hi[f]))
            mask = data[:, f] < t
            left, right = data[mask], data[~mask]
            self.feature[nid], self.threshold[nid] = f, t
            li, ri = self._node(len(left)), self._node(len(right))
            self.left[nid], self.right[nid] = li, ri
            stack.append((ri, right, depth + 1))
            stack.append((li, left, depth + 1))
        for name in self.__slots__:
            setattr(self, name, np.asarray(getattr(self, name)))
        return self

    def depth_of_leaves(self):
        depth = np.zeros(len(self.size), dtype=int)
        for nid in range(len(self.size)):
            if self.left[nid] >= 0:
                depth[self.left[nid]] = depth[self.right[nid]] = depth[nid] + 1
        return depth[self.left < 0]

    def path_length(self, X):
        n = X.shape[0]
        node = np.zeros(n, dtype=int)
        depth = np.zeros(n)
        active = self.left[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] < self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            depth[idx] += 1
            active = self.left[node] >= 0
        return depth + average_path_length(self.size[node])


class IsolationForestDetector(AnomalyDetectorMixin, BaseEstimator):
    """Isolation forest with score ``2 ** (-E[h(x)] / c(psi))``.

    Parameters
    ----------
    n_estimators : int, default=100
    max_samples : int or None, default=None
        Subsample size psi per tree; ``None`` means ``min(256, n)``.
    standardize : bool, default=True
        Z-score features with training statistics before fitting.
    contamination : float, default=0.1
        Training fraction above the ``predict`` threshold.
    random_state : int or None, default=0
    """

    def __init__(self, n_estimators=100, max_samples=None, standardize=True,
                 contamination=0.1, random_state=0):
        self.n_estimators = n_estimators
        self.max_samples = max_samples
        self.standardize = standardize
        self.contamination = contamination
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_matrix(X)
        n = X.shape[0]
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        psi = min(256, n) if self.max_samples is None else int(self.max_samples)
        if not 1 <= psi <= n:
            raise ValueError(f"max_samples must lie in [1, {n}]")
        self.n_features_in_ = X.shape[1]
        self.scaler_ = Standardizer().fit(X) if self.standardize else None
        Z = self.scaler_.transform(X) if self.scaler_ else X
        rng = np.random.default_rng(self.random_state)
        self.max_samples_ = psi
        self.height_limit_ = math.ceil(math.log2(psi)) if psi > 1 else 0
        self.trees_ = []
        for _ in range(self.n_estimators):
            sub = Z[rng.choice(n, size=psi, replace=False)]
            self.trees_.append(_Tree().grow(sub, self.height_limit_, rng))
        self._set_threshold(self._anomaly_score(X), self.contamination)
        return self

    def mean_path_length(self, X) -> np.ndarray:
        X = self._check_X(X)
        Z = self.scaler_.transform(X) if self.scaler_ else X
        return np.mean([t.path_length(Z) for t in self.trees_], axis=0)

    def _anomaly_score(self, X):
        Z = self.scaler_.transform(X) if self.scaler_ else X
        h = np.mean([t.path_length(Z) for t in self.trees_], axis=0)
        c = average_path_length(np.array([self.max_samples_]))[0]
        if c == 0:
            return np.full(X.shape[0], 0.5)
        return 2.0 ** (-h / c)


def isoforest_fit(train, num_trees=100, psi=None, seed=0) -> IsolationForestDetector:
    return IsolationForestDetector(num_trees, psi, random_state=seed).fit(train)


def isoforest_score(model: IsolationForestDetector, row) -> float:
    return float(model.anomaly_score(np.atleast_2d(row))[0])
