"""Per-sample flow scores and ROC analysis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lossdist import DiscreteDistribution, LossKind, loss_from_amplitudes


@dataclass(frozen=True)
class ScoredSample:
    score: float
    is_anomaly: bool


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auroc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def flow_score(U, enc, row, Y: DiscreteDistribution, kind=LossKind.KL) -> float:
    """Flow loss of one raw row after encoding; higher means more anomalous."""
    return loss_from_amplitudes(np.asarray(U) @ enc.encode_sample(row).amplitudes, Y, kind)


def flow_scores(U, enc, X, Y: DiscreteDistribution, kind=LossKind.KL) -> np.ndarray:
    states = enc.encode(X) @ np.asarray(U).T
    return np.array([loss_from_amplitudes(s, Y, kind) for s in states])


def roc_curve(scores, is_anomaly) -> RocCurve:
    """ROC points over every distinct score threshold and the trapezoidal area.

    Samples scoring at or above a threshold are flagged. Tied scores move
    both rates at once, so ties get half credit in the area. ``inf`` scores
    are ordinary values that rank above every finite score.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(is_anomaly, dtype=bool).reshape(-1)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    if np.isnan(scores).any():
        raise ValueError("scores contain NaN")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC analysis needs at least one anomaly and one normal sample")
    order = np.argsort(-scores, kind="mergesort")
    s, lab = scores[order], labels[order]
    # last index of each block of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(lab)[ends]
    fp = (ends + 1) - tp
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[ends]]
    area = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, area)


def auroc(samples) -> RocCurve:
    """ROC curve of a list of :class:`ScoredSample`."""
    samples = list(samples)
    return roc_curve([s.score for s in samples], [s.is_anomaly for s in samples])


def auroc_score(scores, is_anomaly) -> float:
    return roc_curve(scores, is_anomaly).auroc
