"""Classical novelty detectors used as comparison baselines."""
from .isoforest import IsolationForestDetector, average_path_length, isoforest_fit, isoforest_score
from .lof import LocalOutlierFactorDetector, lof_fit, lof_score
from .ocsvm import OneClassSVMDetector, ocsvm_fit, ocsvm_score

__all__ = [
    "IsolationForestDetector", "LocalOutlierFactorDetector", "OneClassSVMDetector",
    "average_path_length", "isoforest_fit", "isoforest_score", "lof_fit", "lof_score",
    "ocsvm_fit", "ocsvm_score",
]
