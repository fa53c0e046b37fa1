"""Dense statevector and unitary algebra for small qubit registers.

Basis convention: in the binary expansion of a basis index, qubit 0 is the
most significant bit, so ``|q0 q1 ... q_{N-1}>`` maps to index
``q0 * 2**(N-1) + ... + q_{N-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 12
NORM_ATOL = 1e-9


class GateError(ValueError):
    """Raised for gates whose qubit indices do not fit the register."""


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized complex amplitude vector of an ``num_qubits`` register."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.num_qubits < 1 or self.num_qubits > MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {self.num_qubits}")
        if amps.shape[0] != 2 ** self.num_qubits:
            raise ValueError(
                f"expected {2 ** self.num_qubits} amplitudes, got {amps.shape[0]}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalized (norm={norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec, normalize: bool = True) -> "QuantumState":
        vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
        n = vec.shape[0]
        num_qubits = n.bit_length() - 1
        if n < 2 or 2 ** num_qubits != n:
            raise ValueError(f"vector length {n} is not a power of two >= 2")
        if normalize:
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / norm
        return cls(num_qubits, vec)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "QuantumState":
        vec = np.zeros(2 ** num_qubits, dtype=np.complex128)
        vec[index] = 1.0
        return cls(num_qubits, vec)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def __len__(self):
        return self.dim

    def __eq__(self, other):
        if not isinstance(other, QuantumState):
            return NotImplemented
        return self.num_qubits == other.num_qubits and np.array_equal(
            self.amplitudes, other.amplitudes
        )

    __hash__ = None


def check_qubits(qubits: Sequence[int], num_qubits: int) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    if len(set(qubits)) != len(qubits):
        raise GateError(f"repeated qubit index in {qubits}")
    for q in qubits:
        if q < 0 or q >= num_qubits:
            raise GateError(f"qubit index {q} out of range for {num_qubits} qubits")
    return qubits


def apply_matrix(arr: np.ndarray, matrix: np.ndarray, qubits: Sequence[int],
                 num_qubits: int) -> np.ndarray:
    """Apply a ``2**k x 2**k`` matrix acting on ``qubits`` to the leading axis of ``arr``.

    ``arr`` has shape ``(2**num_qubits, ...)``; trailing axes are carried along,
    which lets the same routine act on a state or on the columns of a matrix.
    The first entry of ``qubits`` is the most significant bit of ``matrix``'s basis.
    """
    k = len(qubits)
    trailing = arr.shape[1:]
    tensor = arr.reshape((2,) * num_qubits + trailing)
    gate = matrix.reshape((2,) * (2 * k))
    # contract the gate's input legs with the addressed register axes
    out = np.tensordot(gate, tensor, axes=(list(range(k, 2 * k)), list(qubits)))
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return out.reshape(arr.shape)


def apply_gate(state: QuantumState, gate) -> QuantumState:
    """Return the state after ``gate`` acts on its qubits."""
    qubits = check_qubits(gate.qubits, state.num_qubits)
    out = apply_matrix(state.amplitudes, gate.matrix(), qubits, state.num_qubits)
    return QuantumState(state.num_qubits, out)


def gate_unitary(gate, num_qubits: int) -> np.ndarray:
    """Full-register ``2**N x 2**N`` matrix of ``gate``."""
    qubits = check_qubits(gate.qubits, num_qubits)
    eye = np.eye(2 ** num_qubits, dtype=np.complex128)
    return apply_matrix(eye, gate.matrix(), qubits, num_qubits)


def compose(circuit) -> np.ndarray:
    """Unitary ``O(L) ... O(2) O(1)`` of a circuit; the first gate acts first."""
    n = circuit.num_qubits
    u = np.eye(2 ** n, dtype=np.complex128)
    for gate in circuit.gates:
        u = gate_unitary(gate, n) @ u
    return u


def apply_unitary(u: np.ndarray, state: QuantumState) -> QuantumState:
    return QuantumState(state.num_qubits, u @ state.amplitudes)


def measurement_distribution(state: QuantumState):
    """Born-rule probabilities ``|amplitude_k|**2`` of a state."""
    from .lossdist import DiscreteDistribution

    probs = np.abs(state.amplitudes) ** 2
    return DiscreteDistribution(probs / probs.sum())


def is_unitary(u: np.ndarray, atol: float = 1e-8) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0
    )
