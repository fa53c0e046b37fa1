"""Swap-test overlap estimation, sampled from its outcome probability.

The ancilla of a swap test reads 1 with probability ``1/2 - |<psi|phi>|**2 / 2``.
Instead of simulating the ancilla and controlled-SWAP, shots are drawn as
Bernoulli trials with that probability.

The estimated quantity is the squared overlap ``|<psi|phi>|**2``. For real
nonnegative ``psi`` this relates to the magnitude cosine used by the COS flow
loss; with nonuniform phases in ``psi`` the two differ, and both are exposed
so the gap can be measured.
"""
from __future__ import annotations

import numpy as np

from .lossdist import DiscreteDistribution
from .qstate import QuantumState


def _amps(s):
    return s.amplitudes if isinstance(s, QuantumState) else np.asarray(s, dtype=np.complex128)


def exact_overlap(psi, phi) -> float:
    """``|<psi|phi>|**2``."""
    a, b = _amps(psi), _amps(phi)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(min(max(abs(np.vdot(a, b)) ** 2, 0.0), 1.0))


def swap_test_probability(psi, phi) -> float:
    """Probability that the swap-test ancilla is measured as 1."""
    return 0.5 - 0.5 * exact_overlap(psi, phi)


def swap_test_estimate(psi, phi, shots: int, rng: np.random.Generator) -> tuple[float, float]:
    """Return ``(p_hat, overlap_hat)`` from ``shots`` sampled ancilla outcomes."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = swap_test_probability(psi, phi)
    p_hat = rng.binomial(shots, p) / shots
    return p_hat, float(np.clip(1.0 - 2.0 * p_hat, 0.0, 1.0))


def shots_for(eps: float, delta: float) -> int:
    """Shots giving ``|p_hat - p| <= eps`` with probability ``>= 1 - delta`` (Hoeffding)."""
    return int(np.ceil(np.log(2.0 / delta) / (2.0 * eps ** 2)))


def swap_test_score(U, enc, row, Y: DiscreteDistribution, shots: int | None,
                    rng: np.random.Generator | None = None) -> float:
    """``1 - overlap`` between ``U * encode(row)`` and the zero-phase target state.

    ``shots=None`` returns the exact (infinite-shot) value.
    """
    psi = np.asarray(U) @ enc.encode_sample(row).amplitudes
    phi = np.sqrt(Y.probs)
    if shots is None:
        return 1.0 - exact_overlap(psi, phi)
    if rng is None:
        raise ValueError("a random generator is required for finite shots")
    return 1.0 - swap_test_estimate(psi, phi, shots, rng)[1]


def swap_test_scores(U, enc, X, Y: DiscreteDistribution, shots: int | None,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    return np.array([swap_test_score(U, enc, row, Y, shots, rng)
                     for row in np.atleast_2d(X)])
