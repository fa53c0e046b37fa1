"""Datasets, per-feature k-means binning and amplitude encoding."""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_is_fitted, check_matrix, check_n_features, check_row
from .lossdist import DiscreteDistribution
from .qstate import QuantumState

DATA_ENV = "QFLOW_DATA_DIR"
_FIXTURE_DIR = Path(__file__).parent / "data"

# file name and class-column position of the UCI-style fixtures
DATASETS = {
    "iris": ("iris.data", -1),
    "wine": ("wine.data", 0),
}


class DegenerateFeatureError(ValueError):
    """A feature has fewer distinct values than requested bins."""


class UndecodableError(ValueError):
    """A candidate state carries no mass in some feature group."""


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        X = check_matrix(self.features)
        y = np.asarray(self.labels).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValueError("features and labels differ in length")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(int))

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.labels.astype(np.int64)).tobytes())
        return h.hexdigest()


def data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV) or _FIXTURE_DIR)


def read_uci_csv(path, class_column: int = -1, name: str = "") -> Dataset:
    """Read a header-less comma-separated file with one class column.

    Class values are mapped to 1, 2, ... in order of first appearance, which
    reproduces the UCI numbering for both iris (names) and wine (integers).
    """
    rows, classes = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            cls = cells.pop(class_column)
            rows.append([float(c) for c in cells])
            classes.append(cls)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    ids = {}
    for c in classes:
        ids.setdefault(c, len(ids) + 1)
    labels = np.array([ids[c] for c in classes])
    return Dataset(np.array(rows), labels, name or Path(path).stem)


def load_dataset(name: str, directory=None, append_constant: bool = False) -> Dataset:
    """Load a bundled dataset by name (``iris`` or ``wine``).

    ``append_constant`` adds a constant feature column; wine then has 14
    features instead of the 13 attributes of the UCI file.
    """
    if name not in DATASETS:
        raise ValueError(f"unknown dataset {name!r}; expected one of {sorted(DATASETS)}")
    fname, class_col = DATASETS[name]
    path = Path(directory) if directory is not None else data_dir()
    path = path / fname
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    ds = read_uci_csv(path, class_col, name)
    if append_constant:
        X = np.hstack([ds.features, np.ones((ds.features.shape[0], 1))])
        ds = Dataset(X, ds.labels, name)
    return ds


def _sse_table(values, weights):
    # prefix sums for weighted within-segment squared error of sorted values
    w = np.concatenate([[0.0], np.cumsum(weights)])
    s1 = np.concatenate([[0.0], np.cumsum(weights * values)])
    s2 = np.concatenate([[0.0], np.cumsum(weights * values ** 2)])
    return w, s1, s2


def kmeans_1d(values, k: int, tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    """Globally optimal 1-D k-means centroids, sorted ascending.

    The optimal partition of the sorted distinct values into ``k`` contiguous
    groups is found by dynamic programming; a Lloyd pass from that partition
    then confirms the fixed point to ``tol``.
    """
    # sorted input makes the result independent of row order, bit for bit
    x = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    uniq, counts = np.unique(x, return_counts=True)
    m = uniq.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if m < k:
        raise DegenerateFeatureError(f"{m} distinct value(s) but {k} bins requested")
    w, s1, s2 = _sse_table(uniq, counts.astype(np.float64))

    def cost(i, j):
        # SSE of uniq[i:j]; i, j broadcastable index arrays
        cw = w[j] - w[i]
        cs = s1[j] - s1[i]
        return np.maximum(s2[j] - s2[i] - cs * cs / cw, 0.0)

    inf = np.inf
    best = np.full((k + 1, m + 1), inf)
    arg = np.zeros((k + 1, m + 1), dtype=int)
    best[0, 0] = 0.0
    for c in range(1, k + 1):
        for j in range(c, m - (k - c) + 1):
            i = np.arange(c - 1, j)
            tot = best[c - 1, i] + cost(i, j)
            t = int(np.argmin(tot))
            best[c, j] = tot[t]
            arg[c, j] = i[t]
    cuts = [m]
    for c in range(k, 0, -1):
        cuts.append(arg[c, cuts[-1]])
    cuts = cuts[::-1]
    centers = np.array([(s1[b] - s1[a]) / (w[b] - w[a]) for a, b in zip(cuts[:-1], cuts[1:])])
    return _lloyd(x, centers, tol, max_iter)


def _lloyd(x, centers, tol, max_iter):
    for _ in range(max_iter):
        assign = nearest_bin(x, centers)
        new = centers.copy()
        for b in range(centers.shape[0]):
            members = x[assign == b]
            if members.size:
                new[b] = members.mean()
        moved = np.max(np.abs(new - centers))
        centers = np.sort(new)
        if moved <= tol:
            break
    return centers


def nearest_bin(values, centers) -> np.ndarray:
    """Index of the nearest center; exact ties go to the lower index."""
    d = np.abs(np.asarray(values, dtype=np.float64)[..., None] - centers)
    return np.argmin(d, axis=-1)


class KMeansBinEncoder(TransformerMixin, BaseEstimator):
    """One-hot bin each feature by its nearest 1-D k-means centroid.

    A row with ``F`` features becomes a binary vector of length ``F * n_bins``
    with exactly ``F`` ones, zero-padded to ``2**num_qubits_`` entries.
    ``transform`` returns these binary vectors; ``encode`` returns the
    L2-normalized amplitude vectors.

    Parameters
    ----------
    n_bins : int, default=3
        Bins (centroids) per feature.
    allow_degenerate : bool, default=False
        Accept features with fewer than ``n_bins`` distinct values by filling
        the missing centroids above the largest value.
    """

    def __init__(self, n_bins: int = 3, allow_degenerate: bool = False):
        self.n_bins = n_bins
        self.allow_degenerate = allow_degenerate

    def fit(self, X, y=None):
        X = check_matrix(X)
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        centroids = []
        for j in range(X.shape[1]):
            try:
                centroids.append(kmeans_1d(X[:, j], self.n_bins))
            except DegenerateFeatureError as exc:
                if not self.allow_degenerate:
                    raise DegenerateFeatureError(f"feature {j}: {exc}") from None
                uniq = np.unique(X[:, j])
                extra = uniq[-1] + np.arange(1, self.n_bins - uniq.size + 1)
                centroids.append(np.concatenate([uniq, extra]))
        self._set_centroids(np.array(centroids))
        return self

    def _set_centroids(self, centroids):
        centroids = np.asarray(centroids, dtype=np.float64)
        if np.any(np.diff(centroids, axis=1) <= 0):
            raise ValueError("centroids must be strictly increasing per feature")
        self.centroids_ = centroids
        self.n_features_in_ = centroids.shape[0]
        self.binary_dim_ = centroids.shape[0] * centroids.shape[1]
        self.num_qubits_ = max(1, math.ceil(math.log2(self.binary_dim_)))
        return self

    @property
    def dim_(self) -> int:
        return 2 ** self.num_qubits_

    def bins(self, X) -> np.ndarray:
        check_is_fitted(self, "centroids_")
        X = check_matrix(X)
        check_n_features(X, self.n_features_in_)
        d = np.abs(X[:, :, None] - self.centroids_[None, :, :])
        return np.argmin(d, axis=2)

    def transform(self, X) -> np.ndarray:
        b = self.bins(X)
        n, F = b.shape
        out = np.zeros((n, self.dim_))
        cols = np.arange(F) * self.centroids_.shape[1] + b
        out[np.arange(n)[:, None], cols] = 1.0
        return out

    def encode(self, X) -> np.ndarray:
        return self.transform(X) / math.sqrt(self.n_features_in_)

    def encode_sample(self, row) -> QuantumState:
        check_is_fitted(self, "centroids_")
        row = check_row(row, self.n_features_in_)
        return QuantumState(self.num_qubits_, self.encode(row[None, :])[0])

    def histogram(self, X) -> tuple[DiscreteDistribution, QuantumState]:
        """Normalized bin histogram of ``X`` and its square-root state."""
        counts = self.transform(X).mean(axis=0)
        nhist = DiscreteDistribution(counts / counts.sum())
        return nhist, QuantumState(self.num_qubits_, np.sqrt(nhist.probs))

    def decode(self, amplitudes) -> np.ndarray:
        """Centroid vector of the highest-mass bin in each feature group."""
        check_is_fitted(self, "centroids_")
        amps = amplitudes.amplitudes if isinstance(amplitudes, QuantumState) else amplitudes
        amps = np.asarray(amps)
        if amps.shape[-1] != self.dim_:
            raise ValueError(f"expected {self.dim_} amplitudes, got {amps.shape[-1]}")
        F, k = self.centroids_.shape
        mass = np.abs(amps[: F * k]) ** 2
        groups = mass.reshape(F, k)
        if np.any(groups.sum(axis=1) <= 0):
            bad = np.flatnonzero(groups.sum(axis=1) <= 0).tolist()
            raise UndecodableError(f"no mass in feature group(s) {bad}")
        return self.centroids_[np.arange(F), np.argmax(groups, axis=1)]

    def to_dict(self) -> dict:
        check_is_fitted(self, "centroids_")
        return {
            "k": int(self.centroids_.shape[1]),
            "num_features": int(self.n_features_in_),
            "num_qubits": int(self.num_qubits_),
            "centroids": self.centroids_.tolist(),
        }

    @classmethod
    def from_dict(cls, doc) -> "KMeansBinEncoder":
        enc = cls(n_bins=int(doc["k"]))
        enc._set_centroids(doc["centroids"])
        if enc.centroids_.shape[1] != enc.n_bins:
            raise ValueError("centroid rows do not match k")
        return enc


def fit_encoder(train, k: int) -> KMeansBinEncoder:
    return KMeansBinEncoder(n_bins=k).fit(train)


def encode_sample(enc: KMeansBinEncoder, row) -> QuantumState:
    return enc.encode_sample(row)


def train_histogram(enc: KMeansBinEncoder, train) -> tuple[DiscreteDistribution, QuantumState]:
    return enc.histogram(train)


def decode_sample(enc: KMeansBinEncoder, candidate) -> np.ndarray:
    return enc.decode(candidate)


@dataclass(frozen=True)
class SplitSpec:
    normal_class: int
    anomaly_class: int
    train_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.normal_class == self.anomaly_class:
            raise ValueError("normal and anomaly class must differ")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError("train_fraction must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class Split:
    """Row indices into the dataset for each role."""

    spec: SplitSpec
    train_idx: np.ndarray
    test_idx: np.ndarray
    test_is_anomaly: np.ndarray
    dataset_hash: str = ""

    def train(self, ds: Dataset) -> np.ndarray:
        return ds.features[self.train_idx]

    def test(self, ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
        return ds.features[self.test_idx], self.test_is_anomaly

    @property
    def counts(self) -> tuple[int, int, int]:
        n_pos = int(self.test_is_anomaly.sum())
        return len(self.train_idx), len(self.test_idx) - n_pos, n_pos

    def to_dict(self, dataset_name: str = "") -> dict:
        return {
            "dataset": dataset_name,
            "dataset_hash": self.dataset_hash,
            "normal_class": self.spec.normal_class,
            "anomaly_class": self.spec.anomaly_class,
            "train_fraction": self.spec.train_fraction,
            "seed": self.spec.seed,
            "train": self.train_idx.tolist(),
            "test": self.test_idx.tolist(),
            "test_is_anomaly": self.test_is_anomaly.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, doc) -> "Split":
        spec = SplitSpec(doc["normal_class"], doc["anomaly_class"],
                         doc["train_fraction"], doc["seed"])
        return cls(spec, np.array(doc["train"], dtype=int), np.array(doc["test"], dtype=int),
                   np.array(doc["test_is_anomaly"], dtype=bool), doc.get("dataset_hash", ""))


def make_split(ds: Dataset, spec: SplitSpec) -> Split:
    """Seeded train/test split of one normal class against one anomaly class.

    ``floor(train_fraction * n)`` shuffled normal rows (at least one) train; the
    remaining normal rows are test negatives and every anomaly-class row is a
    test positive.
    """
    normal = np.flatnonzero(ds.labels == spec.normal_class)
    anomal = np.flatnonzero(ds.labels == spec.anomaly_class)
    if normal.size == 0:
        raise ValueError(f"class {spec.normal_class} is empty")
    if anomal.size == 0:
        raise ValueError(f"class {spec.anomaly_class} is empty")
    rng = np.random.default_rng(spec.seed)
    normal = normal[rng.permutation(normal.size)]
    n_train = max(1, int(math.floor(spec.train_fraction * normal.size + 1e-9)))
    train, rest = normal[:n_train], normal[n_train:]
    test = np.concatenate([rest, anomal])
    labels = np.concatenate([np.zeros(rest.size, bool), np.ones(anomal.size, bool)])
    return Split(spec, train, test, labels, ds.content_hash())


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
