"""Elementary gate set, circuits, pool enumeration and circuit files."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .qstate import check_qubits

_S2 = 1.0 / np.sqrt(2.0)

ARITY = {
    "X": 1, "Y": 1, "Z": 1, "H": 1, "T": 1, "P": 1,
    "CNOT": 2, "CZ": 2, "CP": 2, "SWAP": 2,
    "CSWAP": 3, "TOFFOLI": 3,
}
PARAMETRIC = frozenset({"P", "CP"})
# gates whose matrix is invariant under any permutation of the listed qubits
_SYMMETRIC = frozenset({"CZ", "CP", "SWAP"})

DEFAULT_THETAS = (Fraction(1, 4), Fraction(1, 2), Fraction(1, 1))


class CircuitFormatError(ValueError):
    """Malformed circuit document."""


def _phase(theta: Fraction) -> complex:
    return complex(np.exp(1j * np.pi * float(theta)))


@lru_cache(maxsize=None)
def _matrix(kind: str, theta: Fraction | None) -> np.ndarray:
    if kind == "X":
        m = [[0, 1], [1, 0]]
    elif kind == "Y":
        m = [[0, -1j], [1j, 0]]
    elif kind == "Z":
        m = [[1, 0], [0, -1]]
    elif kind == "H":
        m = [[_S2, _S2], [_S2, -_S2]]
    elif kind == "T":
        m = [[1, 0], [0, _phase(Fraction(1, 4))]]
    elif kind == "P":
        m = [[1, 0], [0, _phase(theta)]]
    elif kind == "CNOT":
        m = np.eye(4)[[0, 1, 3, 2]]
    elif kind == "CZ":
        m = np.diag([1, 1, 1, -1])
    elif kind == "CP":
        m = np.diag([1, 1, 1, _phase(theta)])
    elif kind == "SWAP":
        m = np.eye(4)[[0, 2, 1, 3]]
    elif kind == "CSWAP":
        m = np.eye(8)[[0, 1, 2, 3, 4, 6, 5, 7]]
    elif kind == "TOFFOLI":
        m = np.eye(8)[[0, 1, 2, 3, 4, 5, 7, 6]]
    else:
        raise ValueError(f"unknown gate kind {kind!r}")
    m = np.array(m, dtype=np.complex128)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class GateSpec:
    """One gate instance.

    ``qubits`` lists controls before targets (CNOT: ctrl, tgt; CSWAP: ctrl,
    a, b; TOFFOLI: c1, c2, tgt). ``theta`` is the phase angle as a rational
    multiple of pi and is only present for P and CP.
    """

    kind: str
    qubits: tuple[int, ...]
    theta: Fraction | None = None

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        if len(qubits) != ARITY[kind]:
            raise ValueError(f"{kind} takes {ARITY[kind]} qubit(s), got {len(qubits)}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit index in {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {qubits}")
        theta = self.theta
        if kind in PARAMETRIC:
            if theta is None:
                raise ValueError(f"{kind} requires theta")
            if isinstance(theta, float):
                raise ValueError("theta must be an exact rational multiple of pi")
            theta = Fraction(theta)
        elif theta is not None:
            raise ValueError(f"{kind} takes no theta")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "theta", theta)

    def matrix(self) -> np.ndarray:
        """Local ``2**k x 2**k`` matrix; ``qubits[0]`` is its most significant bit."""
        return _matrix(self.kind, self.theta)

    def dagger(self) -> "GateSpec":
        if self.kind in PARAMETRIC:
            return GateSpec(self.kind, self.qubits, -self.theta)
        if self.kind == "T":
            return GateSpec("P", self.qubits, Fraction(-1, 4))
        return self

    def label(self) -> str:
        args = ",".join(str(q) for q in self.qubits)
        if self.theta is not None:
            return f"{self.kind}({_theta_str(self.theta)})[{args}]"
        return f"{self.kind}[{args}]"

    def __str__(self):
        return self.label()


def _theta_str(theta: Fraction) -> str:
    if theta.denominator == 1:
        return f"{theta.numerator}pi"
    return f"{theta.numerator}pi/{theta.denominator}"


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[GateSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        gates = tuple(self.gates)
        for g in gates:
            if not isinstance(g, GateSpec):
                raise TypeError(f"expected GateSpec, got {type(g).__name__}")
            check_qubits(g.qubits, self.num_qubits)
        object.__setattr__(self, "gates", gates)

    def __len__(self):
        return len(self.gates)

    def inverse(self) -> "Circuit":
        """Reverse-conjugate circuit, whose unitary is the adjoint."""
        return Circuit(self.num_qubits, tuple(g.dagger() for g in reversed(self.gates)))

    def __str__(self):
        body = " ".join(g.label() for g in self.gates) or "(identity)"
        return f"Circuit[{self.num_qubits}q]: {body}"


@dataclass(frozen=True)
class PoolConfig:
    """Which gate kinds and phase angles the pool enumerates."""

    kinds: tuple[str, ...] = ("X", "Y", "Z", "H", "T", "P", "CNOT", "CZ", "CP",
                              "SWAP", "CSWAP", "TOFFOLI")
    thetas: tuple[Fraction, ...] = DEFAULT_THETAS

    def __post_init__(self):
        kinds = tuple(k.upper() for k in self.kinds)
        for k in kinds:
            if k not in ARITY:
                raise ValueError(f"unknown gate kind {k!r}")
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "thetas", tuple(Fraction(t) for t in self.thetas))


def _placements(kind: str, num_qubits: int) -> Iterable[tuple[int, ...]]:
    qs = range(num_qubits)
    if kind in _SYMMETRIC:
        return itertools.combinations(qs, ARITY[kind])
    if kind == "CSWAP":
        return ((c, a, b) for c in qs for a, b in itertools.combinations(qs, 2)
                if c not in (a, b))
    if kind == "TOFFOLI":
        return ((a, b, t) for a, b in itertools.combinations(qs, 2) for t in qs
                if t not in (a, b))
    return itertools.permutations(qs, ARITY[kind])


def enumerate_pool(num_qubits: int, config: PoolConfig | None = None) -> list[GateSpec]:
    """Every enabled gate kind at every distinct placement (and angle).

    Gates that are symmetric in their qubits (CZ, CP, SWAP) and the
    interchangeable qubit pairs of CSWAP targets / TOFFOLI controls are
    enumerated once. The order is deterministic.
    """
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    config = config or PoolConfig()
    pool = []
    for kind in config.kinds:
        if ARITY[kind] > num_qubits:
            continue
        thetas = config.thetas if kind in PARAMETRIC else (None,)
        for qubits in _placements(kind, num_qubits):
            for theta in thetas:
                pool.append(GateSpec(kind, qubits, theta))
    if not pool:
        raise ValueError("gate pool is empty; enable at least one gate kind")
    return pool


def serialize(circuit: Circuit, indent: int | None = 2) -> str:
    gates = []
    for g in circuit.gates:
        entry = {"kind": g.kind, "qubits": list(g.qubits)}
        if g.theta is not None:
            entry["theta"] = {"num": g.theta.numerator, "den": g.theta.denominator}
        gates.append(entry)
    return json.dumps({"num_qubits": circuit.num_qubits, "gates": gates}, indent=indent)


def circuit_from_dict(doc) -> Circuit:
    if not isinstance(doc, dict) or "num_qubits" not in doc or "gates" not in doc:
        raise CircuitFormatError("circuit document needs 'num_qubits' and 'gates'")
    n = doc["num_qubits"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise CircuitFormatError(f"invalid num_qubits {n!r}")
    if not isinstance(doc["gates"], list):
        raise CircuitFormatError("'gates' must be a list")
    gates = []
    for i, entry in enumerate(doc["gates"]):
        try:
            theta = entry.get("theta")
            if theta is not None:
                num, den = theta["num"], theta["den"]
                if not all(isinstance(v, int) and not isinstance(v, bool) for v in (num, den)):
                    raise ValueError("theta must be an exact rational multiple of pi")
                if den == 0:
                    raise ValueError("theta denominator is zero")
                theta = Fraction(num, den)
            qubits = entry["qubits"]
            if not isinstance(qubits, list) or not all(
                isinstance(q, int) and not isinstance(q, bool) for q in qubits
            ):
                raise ValueError("qubits must be a list of integers")
            gates.append(GateSpec(entry["kind"], tuple(qubits), theta))
        except (KeyError, TypeError, AttributeError, ValueError) as exc:
            raise CircuitFormatError(f"gate {i}: {exc}") from exc
    try:
        return Circuit(n, tuple(gates))
    except ValueError as exc:
        raise CircuitFormatError(str(exc)) from exc


def deserialize(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"not valid JSON: {exc}") from exc
    return circuit_from_dict(doc)
