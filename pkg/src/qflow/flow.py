"""Quantum normalizing-flow anomaly detector."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_is_fitted, check_matrix
from .anomaly import flow_scores
from .base import AnomalyDetectorMixin
from .dataenc import KMeansBinEncoder
from .gatepool import Circuit, PoolConfig, enumerate_pool
from .genflow import GenerationResult, generate
from .lossdist import LossKind, binomial_target, loss_from_amplitudes
from .mcgs import SearchConfig, search
from .qstate import compose
from .swaptest import swap_test_scores


class QuantumFlowDetector(AnomalyDetectorMixin, BaseEstimator):
    """Learn a gate sequence that maps the binned training histogram to a binomial.

    Training rows are binned per feature, turned into the square-root state of
    their bin histogram, and a Monte Carlo graph search looks for the circuit
    whose output distribution is closest to ``Binomial(2**N - 1, binomial_p)``.
    A sample's anomaly score is the same loss evaluated on its own encoded
    state pushed through the learned circuit.

    Parameters
    ----------
    n_bins : int, default=3
        k-means bins per feature.
    loss : {"kl", "cos"}, default="kl"
    binomial_p : float, default=0.5
    max_depth : int, default=20
        Longest circuit the search may build.
    max_nodes : int, default=20000
        Node budget per search.
    beta : float, default=5.0
        Selection sharpness; nodes are picked with weight ``exp(-beta * loss)``.
    expansions_per_step : float, default=8.0
        Mean of the Poisson number of expansions per step.
    stall_window : int, default=2000
        Stop after this many new nodes without improving the best loss.
    target_loss : float, default=1e-9
    n_restarts : int, default=1
        Independent searches; the one with the lowest training loss is kept.
    gate_kinds : sequence of str or None
        Gate kinds in the pool; ``None`` enables all.
    thetas : sequence of Fraction or None
        Phase angles as multiples of pi; ``None`` means pi/4, pi/2, pi.
    contamination : float, default=0.1
        Fraction of training scores above the ``predict`` threshold.
    allow_degenerate_bins : bool, default=False
        Passed to the encoder; needed for constant feature columns.
    random_state : int, default=0

    Attributes
    ----------
    encoder_ : KMeansBinEncoder
    histogram_ : DiscreteDistribution
    input_state_ : QuantumState
    target_ : DiscreteDistribution
    circuit_ : Circuit
    unitary_ : ndarray
    loss_ : float
        Training loss of the selected circuit.
    search_results_ : list of SearchResult
    """

    def __init__(self, n_bins=3, loss="kl", binomial_p=0.5, max_depth=20, max_nodes=20000,
                 beta=5.0, expansions_per_step=8.0, stall_window=2000, target_loss=1e-9,
                 n_restarts=1, gate_kinds=None, thetas=None, contamination=0.1,
                 allow_degenerate_bins=False, random_state=0):
        self.n_bins = n_bins
        self.loss = loss
        self.binomial_p = binomial_p
        self.max_depth = max_depth
        self.max_nodes = max_nodes
        self.beta = beta
        self.expansions_per_step = expansions_per_step
        self.stall_window = stall_window
        self.target_loss = target_loss
        self.n_restarts = n_restarts
        self.gate_kinds = gate_kinds
        self.thetas = thetas
        self.contamination = contamination
        self.allow_degenerate_bins = allow_degenerate_bins
        self.random_state = random_state

    def _pool_config(self) -> PoolConfig:
        kw = {}
        if self.gate_kinds is not None:
            kw["kinds"] = tuple(self.gate_kinds)
        if self.thetas is not None:
            kw["thetas"] = tuple(Fraction(t) for t in self.thetas)
        return PoolConfig(**kw)

    def _search_config(self, seed) -> SearchConfig:
        return SearchConfig(max_depth=self.max_depth, max_nodes=self.max_nodes,
                            loss_kind=self.loss, target_loss=self.target_loss, beta=self.beta,
                            expansions_per_step=self.expansions_per_step,
                            stall_window=self.stall_window, seed=seed)

    def restart_seeds(self) -> list[int]:
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        ss = np.random.SeedSequence(self.random_state)
        return [int(s) for s in ss.generate_state(self.n_restarts)]

    def fit(self, X, y=None):
        X = check_matrix(X)
        self.loss_kind_ = LossKind.parse(self.loss)
        self.encoder_ = KMeansBinEncoder(
            n_bins=self.n_bins, allow_degenerate=self.allow_degenerate_bins).fit(X)
        self.n_features_in_ = X.shape[1]
        self.histogram_, self.input_state_ = self.encoder_.histogram(X)
        self.target_ = binomial_target(self.encoder_.dim_, self.binomial_p)
        self.pool_ = enumerate_pool(self.encoder_.num_qubits_, self._pool_config())
        self.search_results_ = [
            search(self.input_state_, self.target_, self.pool_, self._search_config(seed))
            for seed in self.restart_seeds()
        ]
        best = min(range(len(self.search_results_)),
                   key=lambda i: (self.search_results_[i].loss,
                                  len(self.search_results_[i].circuit), i))
        self._set_circuit(self.search_results_[best].circuit)
        self._set_threshold(self._anomaly_score(X), self.contamination)
        return self

    def _set_circuit(self, circuit: Circuit):
        if circuit.num_qubits != self.encoder_.num_qubits_:
            raise ValueError(f"circuit acts on {circuit.num_qubits} qubits, encoder needs "
                             f"{self.encoder_.num_qubits_}")
        self.circuit_ = circuit
        self.unitary_ = compose(circuit)
        self.loss_ = loss_from_amplitudes(self.unitary_ @ self.input_state_.amplitudes,
                                          self.target_, self.loss_kind_)

    @classmethod
    def from_circuit(cls, circuit: Circuit, encoder: KMeansBinEncoder, train, **params):
        """Detector around an existing circuit and encoder, without searching."""
        det = cls(n_bins=encoder.n_bins, **params)
        train = check_matrix(train)
        det.loss_kind_ = LossKind.parse(det.loss)
        det.encoder_ = encoder
        det.n_features_in_ = encoder.n_features_in_
        det.histogram_, det.input_state_ = encoder.histogram(train)
        det.target_ = binomial_target(encoder.dim_, det.binomial_p)
        det.search_results_ = []
        det._set_circuit(circuit)
        det._set_threshold(det._anomaly_score(train), det.contamination)
        return det

    def _anomaly_score(self, X):
        return flow_scores(self.unitary_, self.encoder_, X, self.target_, self.loss_kind_)

    def swap_test_score(self, X, shots=None, random_state=None) -> np.ndarray:
        """``1 - |<U x|sqrt(Y)>|**2``, estimated from ``shots`` swap tests (exact if None)."""
        X = self._check_X(X)
        rng = np.random.default_rng(random_state)
        return swap_test_scores(self.unitary_, self.encoder_, X, self.target_, shots, rng)

    def generate(self, n_samples, tau=None, random_state=None, max_attempts=None,
                 min_acceptance=0.0, train=None) -> GenerationResult:
        """Sample rows through the inverse flow; see :func:`qflow.genflow.generate`.

        ``tau`` defaults to the 90th percentile of training scores, which
        requires ``train``.
        """
        check_is_fitted(self, "unitary_")
        if tau is None:
            if train is None:
                raise ValueError("pass tau or the training rows to derive it")
            tau = self.default_tau(train)
        rng = np.random.default_rng(random_state)
        return generate(self.unitary_, self.encoder_, self.target_, n_samples, tau, rng,
                        self.loss_kind_, max_attempts, min_acceptance)

    def default_tau(self, train) -> float:
        scores = self.anomaly_score(train)
        return float(np.quantile(scores[np.isfinite(scores)], 0.9))
