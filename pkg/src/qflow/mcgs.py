"""Monte Carlo graph search over gate sequences.

The graph starts at the identity. Each node holds a unitary (deduplicated up
to global phase) and the flow loss of that unitary applied to the input
state; edges are labelled with pool gates. Nodes are picked for expansion
with probability proportional to ``exp(-beta * loss)``, a Poisson-distributed
number of times per step, and the best circuit is read back along the
shortest known path from the root.
"""
from __future__ import annotations

import hashlib
import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .gatepool import Circuit, GateSpec
from .lossdist import DiscreteDistribution, LossKind, loss_from_amplitudes
from .qstate import QuantumState, gate_unitary

logger = logging.getLogger(__name__)

FINGERPRINT_DECIMALS = 8
PHASE_EPS = 1e-6


def fingerprint(u: np.ndarray) -> bytes:
    """Hash of a unitary that ignores global phase.

    The matrix is divided by the phase of its first entry with magnitude
    above ``PHASE_EPS`` and rounded to ``FINGERPRINT_DECIMALS`` decimals.
    """
    flat = np.asarray(u, dtype=np.complex128).reshape(-1)
    big = np.flatnonzero(np.abs(flat) > PHASE_EPS)
    if big.size:
        ref = flat[big[0]]
        flat = flat * (abs(ref) / ref)
    parts = np.round(np.concatenate([flat.real, flat.imag]), FINGERPRINT_DECIMALS) + 0.0
    return hashlib.blake2b(parts.tobytes(), digest_size=16).digest()


@dataclass
class SearchConfig:
    max_depth: int = 20
    max_nodes: int = 20000
    loss_kind: LossKind = LossKind.KL
    target_loss: float = 1e-9
    beta: float = 5.0
    expansions_per_step: float = 8.0
    stall_window: int = 2000
    seed: int = 0

    def __post_init__(self):
        self.loss_kind = LossKind.parse(self.loss_kind)
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.max_nodes < 1:
            raise ValueError("max_nodes (node budget) must be >= 1")
        if self.beta <= 0 or self.expansions_per_step <= 0:
            raise ValueError("beta and expansions_per_step must be positive")
        if self.stall_window < 1:
            raise ValueError("stall_window must be >= 1")


@dataclass
class SearchNode:
    id: int
    fingerprint: bytes
    unitary: np.ndarray
    loss: float
    depth: int
    best_parent: tuple[int, int] | None = None  # (parent id, pool index)
    children: dict = field(default_factory=dict)  # pool index -> child id
    order: np.ndarray | None = None  # shuffled pool indices still to try
    cursor: int = 0


class SearchGraph:
    """Deduplicated graph of unitaries reachable from the identity."""

    def __init__(self, X: QuantumState, Y: DiscreteDistribution, pool: list[GateSpec],
                 loss_kind: LossKind | str = LossKind.KL, max_depth: int = 20):
        if not pool:
            raise ValueError("gate pool is empty")
        if X.dim != len(Y):
            raise ValueError(f"state dimension {X.dim} does not match target {len(Y)}")
        self.X = X
        self.Y = Y
        self.pool = list(pool)
        self.loss_kind = LossKind.parse(loss_kind)
        self.max_depth = max_depth
        self.num_qubits = X.num_qubits
        self._gates = [gate_unitary(g, self.num_qubits) for g in self.pool]
        self.nodes: list[SearchNode] = []
        self.index: dict[bytes, int] = {}
        self.evaluations = 0
        # per-node columns mirrored from the node objects for vectorized selection
        self._loss = np.empty(1024)
        self._depth = np.empty(1024, dtype=np.int64)
        self._open = np.empty(1024, dtype=bool)
        root = np.eye(X.dim, dtype=np.complex128)
        self._add(root, 0, None)

    @property
    def root(self) -> SearchNode:
        return self.nodes[0]

    def __len__(self):
        return len(self.nodes)

    def loss_of(self, u: np.ndarray) -> float:
        self.evaluations += 1
        return loss_from_amplitudes(u @ self.X.amplitudes, self.Y, self.loss_kind)

    def _add(self, u, depth, parent):
        fp = fingerprint(u)
        node = SearchNode(len(self.nodes), fp, u, self.loss_of(u), depth, parent)
        if node.id == self._loss.shape[0]:
            grow = node.id
            self._loss = np.concatenate([self._loss, np.empty(grow)])
            self._depth = np.concatenate([self._depth, np.empty(grow, dtype=np.int64)])
            self._open = np.concatenate([self._open, np.empty(grow, dtype=bool)])
        self.nodes.append(node)
        self.index[fp] = node.id
        self._loss[node.id] = node.loss
        self._depth[node.id] = depth
        self._open[node.id] = True
        return node.id

    def expand(self, node_id: int, gate: int | GateSpec) -> int:
        """Apply a pool gate after ``node_id``'s unitary; return the resulting node id."""
        gi = self.pool.index(gate) if isinstance(gate, GateSpec) else int(gate)
        parent = self.nodes[node_id]
        cached = parent.children.get(gi)
        if cached is not None:
            return cached
        u = self._gates[gi] @ parent.unitary
        fp = fingerprint(u)
        child_id = self.index.get(fp)
        if child_id is None:
            child_id = self._add(u, parent.depth + 1, (node_id, gi))
        else:
            child = self.nodes[child_id]
            if parent.depth + 1 < child.depth:
                child.depth = parent.depth + 1
                child.best_parent = (node_id, gi)
                self._depth[child_id] = child.depth
                self._relax_from(child_id)
        parent.children[gi] = child_id
        return child_id

    def _relax_from(self, start: int) -> None:
        queue = deque([start])
        while queue:
            nid = queue.popleft()
            node = self.nodes[nid]
            for gi, cid in node.children.items():
                child = self.nodes[cid]
                if node.depth + 1 < child.depth:
                    child.depth = node.depth + 1
                    child.best_parent = (nid, gi)
                    self._depth[cid] = child.depth
                    queue.append(cid)

    @property
    def losses(self) -> np.ndarray:
        return self._loss[: len(self.nodes)]

    def expandable(self) -> np.ndarray:
        """Ids of nodes below the depth limit that still have untried gates."""
        n = len(self.nodes)
        return np.flatnonzero(self._open[:n] & (self._depth[:n] < self.max_depth))

    def next_gate(self, node_id: int, rng: np.random.Generator) -> int | None:
        """Next untried pool index for a node, in a seeded random order."""
        node = self.nodes[node_id]
        if node.order is None:
            node.order = rng.permutation(len(self.pool))
        while node.cursor < len(self.pool):
            gi = int(node.order[node.cursor])
            node.cursor += 1
            if gi not in node.children:
                if node.cursor == len(self.pool):
                    self._open[node_id] = False
                return gi
        self._open[node_id] = False
        return None

    def best_node(self) -> SearchNode:
        return min(self.nodes, key=lambda n: (n.loss, n.depth, n.id))

    def path_to(self, node_id: int) -> Circuit:
        """Gate sequence along best-parent links from the root."""
        gates = []
        nid = node_id
        while self.nodes[nid].best_parent is not None:
            pid, gi = self.nodes[nid].best_parent
            gates.append(self.pool[gi])
            nid = pid
        return Circuit(self.num_qubits, tuple(reversed(gates)))


def select_nodes(graph: SearchGraph, cfg: SearchConfig, rng: np.random.Generator,
                 candidates: np.ndarray | None = None) -> list[int]:
    """Draw ``Poisson(lambda)`` node ids with probability ``∝ exp(-beta * loss)``."""
    if candidates is None:
        candidates = np.arange(len(graph.nodes))
    if candidates.size == 0:
        return []
    count = int(rng.poisson(cfg.expansions_per_step))
    if count == 0:
        return []
    losses = graph.losses[candidates]
    finite = np.isfinite(losses)
    if not finite.any():
        weights = np.ones(losses.size)
    else:
        weights = np.zeros(losses.size)
        shifted = losses[finite] - losses[finite].min()
        weights[finite] = np.exp(-cfg.beta * shifted)
    weights /= weights.sum()
    picks = rng.choice(candidates.size, size=count, p=weights)
    return [int(candidates[i]) for i in picks]


@dataclass
class SearchResult:
    circuit: Circuit
    loss: float
    trace: list[tuple[int, int, float]]
    nodes: int
    evaluations: int
    stop_reason: str
    graph: SearchGraph | None = None


def search(X: QuantumState, Y: DiscreteDistribution, pool: list[GateSpec],
           cfg: SearchConfig | None = None, keep_graph: bool = False) -> SearchResult:
    """Grow a search graph from the identity and return the lowest-loss circuit."""
    cfg = cfg or SearchConfig()
    graph = SearchGraph(X, Y, pool, cfg.loss_kind, cfg.max_depth)
    rng = np.random.default_rng(cfg.seed)
    best = graph.root.loss
    trace = [(0, 1, best)]
    since_improvement = 0
    step = 0
    reason = "budget"
    while True:
        if best <= cfg.target_loss:
            reason = "target"
            break
        if len(graph) >= cfg.max_nodes:
            reason = "budget"
            break
        if since_improvement >= cfg.stall_window:
            reason = "stall"
            break
        candidates = graph.expandable()
        if candidates.size == 0:
            reason = "exhausted"
            break
        step += 1
        for nid in select_nodes(graph, cfg, rng, candidates):
            gi = graph.next_gate(nid, rng)
            if gi is None:
                continue
            before = len(graph)
            cid = graph.expand(nid, gi)
            if len(graph) > before:
                loss = graph.nodes[cid].loss
                if loss < best:
                    best = loss
                    since_improvement = 0
                else:
                    since_improvement += 1
            if len(graph) >= cfg.max_nodes or best <= cfg.target_loss:
                break
        trace.append((step, len(graph), best))
    node = graph.best_node()
    circuit = graph.path_to(node.id)
    logger.debug("search stopped (%s) after %d nodes, best loss %.6g, %d gates",
                 reason, len(graph), node.loss, len(circuit))
    return SearchResult(circuit, node.loss, trace, len(graph), graph.evaluations, reason,
                        graph if keep_graph else None)
