from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import _kernels as K


class UndefinedFlowError(ValueError):
    """The random-walk flow is undefined (graph without edges)."""


@dataclass(frozen=True)
class FlowDistribution:
    visit_rate: np.ndarray
    total_weight: float

    @property
    def node_entropy(self) -> float:
        p = self.visit_rate[self.visit_rate > 0]
        return float(np.sum(p * np.log2(p)))


class FlowGraph(NamedTuple):
    """CSR link flows without self-loops, plus node flow and node out-flow."""

    indptr: np.ndarray
    indices: np.ndarray
    flows: np.ndarray
    node_flow: np.ndarray
    node_out: np.ndarray

    @property
    def n(self) -> int:
        return len(self.node_flow)


def _edge_arrays(g):
    src = np.asarray(g.src, dtype=np.int64)
    dst = np.asarray(g.dst, dtype=np.int64)
    w = np.asarray(g.weight, dtype=np.float64)
    if np.any(w <= 0):
        raise ValueError("edge weights must be positive")
    return src, dst, w


def visit_rates(g) -> FlowDistribution:
    """Stationary visit rates of the undirected random walk: strength / 2W."""
    src, dst, w = _edge_arrays(g)
    total = float(w.sum())
    if total <= 0:
        raise UndefinedFlowError("flow is undefined on a graph without edges")
    strength = np.bincount(src, w, minlength=g.n_nodes) + np.bincount(dst, w, minlength=g.n_nodes)
    return FlowDistribution(strength / (2.0 * total), total)


def flow_graph(g) -> FlowGraph:
    fd = visit_rates(g)
    src, dst, w = _edge_arrays(g)
    n = g.n_nodes
    off = src != dst
    f = w[off] / (2.0 * fd.total_weight)
    a = sp.csr_matrix(
        (np.concatenate([f, f]), (np.concatenate([src[off], dst[off]]), np.concatenate([dst[off], src[off]]))),
        shape=(n, n),
    )
    a.sum_duplicates()
    a.sort_indices()
    out = np.asarray(a.sum(axis=1)).ravel()
    return FlowGraph(a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data.copy(), fd.visit_rate, out)


def canonical_labels(labels) -> np.ndarray:
    """Relabel to 0..K-1 in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inv.ravel()]


@dataclass(frozen=True)
class Partition:
    """Module assignment with per-module visit mass and exit probability."""

    labels: np.ndarray
    module_flow: np.ndarray
    module_exit: np.ndarray

    @property
    def n_modules(self) -> int:
        return len(self.module_flow)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_modules)


@dataclass(frozen=True)
class CodelengthBreakdown:
    L: float
    index_term: float
    module_term: float


def _check_labels(g, labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (g.n_nodes,):
        raise ValueError(f"partition covers {labels.size} of {g.n_nodes} nodes")
    if labels.size and (not np.issubdtype(labels.dtype, np.integer) or labels.min() < 0):
        raise ValueError("module ids must be non-negative integers")
    return labels


def make_partition(g, labels, flow: FlowDistribution | None = None) -> Partition:
    labels = canonical_labels(_check_labels(g, labels))
    fd = flow or visit_rates(g)
    src, dst, w = _edge_arrays(g)
    k = int(labels.max()) + 1 if labels.size else 0
    module_flow = np.bincount(labels, fd.visit_rate, minlength=k)
    cut = labels[src] != labels[dst]
    f = w[cut] / (2.0 * fd.total_weight)
    module_exit = np.bincount(labels[src[cut]], f, minlength=k) + np.bincount(labels[dst[cut]], f, minlength=k)
    return Partition(labels, module_flow, module_exit)


def codelength(g, partition, flow: FlowDistribution | None = None) -> CodelengthBreakdown:
    """Two-level map equation L = q H(Q) + sum_i p_i H(P_i) in bits.

    ``partition`` is a :class:`Partition` or a per-node label array.
    """
    fd = flow or visit_rates(g)
    if not isinstance(partition, Partition):
        partition = make_partition(g, partition, fd)
    elif partition.labels.shape != (g.n_nodes,):
        raise ValueError("partition does not cover the graph")
    L, idx, mod = K.modules_codelength(partition.module_flow, partition.module_exit, fd.node_entropy)
    return CodelengthBreakdown(float(L), float(idx), float(mod))


class ModuleState:
    """Mutable partition supporting O(degree) codelength deltas and moves."""

    def __init__(self, g, labels=None):
        self.fg = flow_graph(g)
        self.node_entropy = float(np.sum([K.plogp(x) for x in self.fg.node_flow]))
        n = self.fg.n
        labels = np.arange(n) if labels is None else canonical_labels(_check_labels(g, labels))
        self.labels = labels.astype(np.int64)
        self.mod_flow, self.mod_exit, self.mod_size = K.init_modules(
            self.fg.indptr, self.fg.indices, self.fg.flows, self.fg.node_flow, self.labels, n
        )
        self.sum_q = np.array([self.mod_exit.sum()])

    def _links(self, node: int):
        lo, hi = self.fg.indptr[node], self.fg.indptr[node + 1]
        return self.labels[self.fg.indices[lo:hi]], self.fg.flows[lo:hi]

    def _resolve(self, node: int, target) -> int:
        if target == "new":
            empty = np.flatnonzero(self.mod_size == 0)
            return int(empty[0]) if len(empty) else int(self.labels[node])
        target = int(target)
        if not 0 <= target < len(self.mod_size) or (self.mod_size[target] == 0):
            raise ValueError(f"module {target} does not exist")
        return target

    def delta(self, node: int, target) -> float:
        a = int(self.labels[node])
        b = self._resolve(node, target)
        if b == a or (target == "new" and self.mod_size[a] == 1):
            return 0.0
        mods, flows = self._links(node)
        return float(
            K.delta_move(
                self.fg.node_flow[node], self.fg.node_out[node],
                flows[mods == a].sum(), flows[mods == b].sum(),
                self.mod_exit[a], self.mod_flow[a], self.mod_exit[b], self.mod_flow[b],
                self.sum_q[0], self.mod_size[a] == 1,
            )
        )

    def move(self, node: int, target) -> None:
        a = int(self.labels[node])
        b = self._resolve(node, target)
        if b == a or (target == "new" and self.mod_size[a] == 1):
            return
        mods, flows = self._links(node)
        K.apply_move(
            node, a, b, self.fg.node_flow[node], self.fg.node_out[node],
            flows[mods == a].sum(), flows[mods == b].sum(),
            self.mod_flow, self.mod_exit, self.mod_size, self.sum_q,
        )
        self.labels[node] = b

    def modules(self) -> np.ndarray:
        return np.flatnonzero(self.mod_size > 0)

    def codelength(self) -> float:
        return float(K.modules_codelength(self.mod_flow, self.mod_exit, self.node_entropy)[0])


def delta_codelength(state: ModuleState, node: int, target) -> float:
    """Codelength change of moving ``node`` to module ``target`` (an id or ``"new"``)."""
    return state.delta(node, target)
