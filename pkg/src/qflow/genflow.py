"""Sampling new data through the inverse flow."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataenc import KMeansBinEncoder, UndecodableError
from .lossdist import DiscreteDistribution, LossKind, loss_from_amplitudes
from .qstate import QuantumState


class LowAcceptanceError(RuntimeError):
    """Fewer candidates were accepted than the configured floor allows."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


@dataclass
class GenerationResult:
    samples: np.ndarray
    scores: np.ndarray
    attempts: int
    rejected_scores: list = field(default_factory=list)

    @property
    def acceptance_rate(self) -> float:
        return len(self.samples) / self.attempts if self.attempts else 0.0


def sample_latent(Y: DiscreteDistribution, rng: np.random.Generator,
                  zero_phase: bool = False) -> QuantumState:
    """State with magnitudes ``sqrt(Y)`` and independent uniform phases."""
    mags = np.sqrt(Y.probs)
    if zero_phase:
        return QuantumState.from_vector(mags.astype(np.complex128), normalize=False)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=mags.shape[0])
    return QuantumState.from_vector(mags * np.exp(1j * phases), normalize=False)


def invert_flow(U, latent: QuantumState) -> QuantumState:
    """Backward pass ``U^dagger * latent``."""
    U = np.asarray(U)
    if U.shape[1] != latent.dim:
        raise ValueError(f"dimension mismatch: U is {U.shape}, state has {latent.dim}")
    return QuantumState(latent.num_qubits, U.conj().T @ latent.amplitudes)


def generate(U, enc: KMeansBinEncoder, Y: DiscreteDistribution, count: int, tau: float,
             rng: np.random.Generator, kind=LossKind.KL, max_attempts: int | None = None,
             min_acceptance: float = 0.0) -> GenerationResult:
    """Draw latent states, map them back to data space and keep plausible ones.

    Each candidate is decoded to centroid values, re-encoded and pushed through
    the forward flow; it is accepted when that forward loss is at most ``tau``.
    Stops after ``count`` acceptances or ``max_attempts`` draws (default
    ``100 * count``). Raises :class:`LowAcceptanceError`, carrying the partial
    result, when the acceptance rate falls below ``min_acceptance``.
    """
    if not tau >= 0:
        raise ValueError("tau must be >= 0")
    if count < 0:
        raise ValueError("count must be >= 0")
    U = np.asarray(U)
    max_attempts = max_attempts if max_attempts is not None else max(100 * count, 1)
    samples, scores, rejected = [], [], []
    attempts = 0
    while len(samples) < count and attempts < max_attempts:
        attempts += 1
        candidate = invert_flow(U, sample_latent(Y, rng))
        try:
            row = enc.decode(candidate)
        except UndecodableError:
            rejected.append(math.inf)
            continue
        score = loss_from_amplitudes(U @ enc.encode_sample(row).amplitudes, Y, kind)
        if score <= tau:
            samples.append(row)
            scores.append(score)
        else:
            rejected.append(score)
    n_features = enc.n_features_in_
    result = GenerationResult(np.array(samples).reshape(-1, n_features), np.array(scores),
                              attempts, rejected)
    if result.acceptance_rate < min_acceptance:
        raise LowAcceptanceError(
            f"accepted {len(samples)} of {attempts} candidates "
            f"({result.acceptance_rate:.3f} < {min_acceptance})", result)
    return result
