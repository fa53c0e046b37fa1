"""Quantum normalizing flows for anomaly detection, simulated classically."""
from .anomaly import RocCurve, ScoredSample, auroc, auroc_score, flow_score, roc_curve
from .dataenc import (Dataset, KMeansBinEncoder, Split, SplitSpec, decode_sample,
                      encode_sample, fit_encoder, load_dataset, make_split, train_histogram)
from .flow import QuantumFlowDetector
from .gatepool import Circuit, GateSpec, PoolConfig, deserialize, enumerate_pool, serialize
from .lossdist import (DiscreteDistribution, LossKind, binomial_target, cosine_dissimilarity,
                       flow_loss, kl_divergence)
from .mcgs import SearchConfig, SearchGraph, search, select_nodes
from .qstate import QuantumState, apply_gate, compose, gate_unitary, measurement_distribution

__version__ = "0.1.0"
