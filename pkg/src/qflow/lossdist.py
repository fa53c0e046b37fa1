"""Discrete distributions, the binomial target and flow losses."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .qstate import QuantumState

SUM_ATOL = 1e-9


class LossKind(str, Enum):
    KL = "kl"
    COS = "cos"

    @classmethod
    def parse(cls, value) -> "LossKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown loss kind {value!r}; expected 'kl' or 'cos'") from None


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64).reshape(-1)
        if p.size == 0:
            raise ValueError("empty distribution")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > SUM_ATOL:
            raise ValueError(f"probabilities sum to {p.sum():.12g}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.shape[0]

    def sqrt_state(self) -> QuantumState:
        """Real nonnegative state whose measurement distribution is this one."""
        return QuantumState.from_vector(np.sqrt(self.probs))


def binomial_target(num_states: int, p: float = 0.5) -> DiscreteDistribution:
    """``C(n,k) p^k (1-p)^(n-k)`` over ``k = 0..n`` with ``n = num_states - 1``."""
    if num_states < 2:
        raise ValueError("num_states must be >= 2")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    n = num_states - 1
    if p == 0.5 and n <= 1000:
        # exact integer weights keep probs[k] == probs[n - k] bit for bit
        probs = np.array([math.comb(n, k) for k in range(num_states)], dtype=np.float64)
        return DiscreteDistribution(probs / 2.0 ** n)
    k = np.arange(num_states)
    logc = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
                     for i in range(num_states)])
    probs = np.exp(logc + k * math.log(p) + (n - k) * math.log1p(-p))
    if p == 0.5:
        probs = 0.5 * (probs + probs[::-1])
    return DiscreteDistribution(probs / probs.sum())


def _as_probs(x) -> np.ndarray:
    if isinstance(x, DiscreteDistribution):
        return x.probs
    return np.asarray(x, dtype=np.float64).reshape(-1)


def kl_divergence(P, Q) -> float:
    """Relative entropy ``sum p ln(p/q)`` in nats; ``inf`` if P has mass where Q has none."""
    p, q = _as_probs(P), _as_probs(Q)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape[0]} vs {q.shape[0]}")
    support = p > 0
    if np.any(q[support] <= 0):
        return math.inf
    ps, qs = p[support], q[support]
    return max(float(np.sum(ps * (np.log(ps) - np.log(qs)))), 0.0)


def cosine_dissimilarity(a, b, atol: float = 1e-6) -> float:
    """``1 - a.b`` for two unit vectors."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    for name, v in (("a", a), ("b", b)):
        if abs(np.linalg.norm(v) - 1.0) > atol:
            raise ValueError(f"{name} is not a unit vector (norm={np.linalg.norm(v):.9g})")
    return float(1.0 - a @ b)


def flow_loss(U: np.ndarray, X: QuantumState | np.ndarray, Y: DiscreteDistribution,
              kind: LossKind | str = LossKind.KL) -> float:
    """Loss of the flowed state ``U X`` against target ``Y``.

    KL compares the measurement distribution ``|U X|**2`` with ``Y``; COS
    compares the magnitudes ``|U X|`` with ``sqrt(Y)``.
    """
    amps = X.amplitudes if isinstance(X, QuantumState) else np.asarray(X)
    out = np.asarray(U) @ amps
    return loss_from_amplitudes(out, Y, kind)


def loss_from_amplitudes(amps: np.ndarray, Y: DiscreteDistribution,
                         kind: LossKind | str = LossKind.KL) -> float:
    kind = LossKind.parse(kind)
    y = Y.probs
    if amps.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: state {amps.shape[0]} vs target {y.shape[0]}")
    mag2 = amps.real ** 2 + amps.imag ** 2
    if kind is LossKind.KL:
        return kl_divergence(mag2 / mag2.sum(), y)
    mag = np.sqrt(mag2 / mag2.sum())
    return cosine_dissimilarity(mag, np.sqrt(y))
