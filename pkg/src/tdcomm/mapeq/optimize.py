"""Greedy two-level map-equation optimizer: local moving, aggregation, fine tuning."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels as K
from .core import (
    CodelengthBreakdown,
    FlowGraph,
    Partition,
    canonical_labels,
    codelength,
    flow_graph,
    make_partition,
    visit_rates,
)

logger = logging.getLogger(__name__)

MAX_ROUNDS = 20


@dataclass(frozen=True)
class OptimizeConfig:
    n_trials: int = 10
    seed: int = 0
    max_sweeps: int = 100
    tolerance: float = 1e-10


@dataclass
class OptimizeResult:
    partition: Partition
    codelength: CodelengthBreakdown
    trial: int
    trial_codelengths: list[float] = field(default_factory=list)


def _aggregate(fg: FlowGraph, labels: np.ndarray, k: int) -> FlowGraph:
    rows = np.repeat(np.arange(fg.n), np.diff(fg.indptr))
    a = sp.csr_matrix((fg.flows, (labels[rows], labels[fg.indices])), shape=(k, k))
    a.sum_duplicates()
    a.setdiag(0)
    a.eliminate_zeros()
    a.sort_indices()
    node_flow = np.bincount(labels, fg.node_flow, minlength=k)
    out = np.asarray(a.sum(axis=1)).ravel()
    return FlowGraph(a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data.copy(), node_flow, out)


def _move_nodes(fg: FlowGraph, labels: np.ndarray, node_entropy: float, rng, cfg: OptimizeConfig) -> np.ndarray:
    n = fg.n
    labels = labels.astype(np.int64).copy()
    mod_flow, mod_exit, mod_size = K.init_modules(fg.indptr, fg.indices, fg.flows, fg.node_flow, labels, n)
    free_ids = np.zeros(n, dtype=np.int64)
    empty = np.flatnonzero(mod_size == 0)[::-1]
    free_ids[: len(empty)] = empty
    n_free = np.array([len(empty)], dtype=np.int64)
    state = np.array([mod_exit.sum()])
    scratch = np.zeros(n)
    marked = np.zeros(n, dtype=np.bool_)
    touched = np.zeros(n, dtype=np.int64)
    L = K.modules_codelength(mod_flow, mod_exit, node_entropy)[0]
    for _ in range(cfg.max_sweeps):
        order = rng.permutation(n).astype(np.int64)
        moves = K.sweep(fg.indptr, fg.indices, fg.flows, fg.node_flow, fg.node_out, labels,
                        mod_flow, mod_exit, mod_size, free_ids, n_free, state, order,
                        scratch, marked, touched)
        new_L = K.modules_codelength(mod_flow, mod_exit, node_entropy)[0]
        improved = L - new_L
        L = new_L
        if moves == 0 or improved < cfg.tolerance:
            break
    return labels


def _hierarchical(base: FlowGraph, labels0: np.ndarray, node_entropy: float, rng, cfg) -> np.ndarray:
    """Local moving from ``labels0``, then repeated aggregation until no merges occur."""
    fg = base
    member = np.arange(base.n)
    labels = labels0
    while True:
        labels = canonical_labels(_move_nodes(fg, labels, node_entropy, rng, cfg))
        k = int(labels.max()) + 1
        member = labels[member]
        if k == fg.n:
            return member
        fg = _aggregate(fg, labels, k)
        labels = np.arange(k)


def _level_codelength(fg: FlowGraph, labels: np.ndarray, node_entropy: float) -> float:
    mod_flow, mod_exit, _ = K.init_modules(fg.indptr, fg.indices, fg.flows, fg.node_flow,
                                           labels.astype(np.int64), fg.n)
    return float(K.modules_codelength(mod_flow, mod_exit, node_entropy)[0])


def _trial(base: FlowGraph, node_entropy: float, seed: int, index: int, cfg: OptimizeConfig):
    rng = np.random.default_rng([seed, index])
    labels = np.arange(base.n)
    L = _level_codelength(base, labels, node_entropy)
    for _ in range(MAX_ROUNDS):
        # later rounds restart node-level moves from the current modules
        new = canonical_labels(_hierarchical(base, labels, node_entropy, rng, cfg))
        new_L = _level_codelength(base, new, node_entropy)
        if new_L < L - cfg.tolerance:
            labels, L = new, new_L
        else:
            if new_L < L:
                labels, L = new, new_L
            break
    return labels, L


def optimize(g, config: OptimizeConfig | None = None, threads: int = 1) -> OptimizeResult:
    """Minimize the two-level map equation over ``config.n_trials`` seeded trials.

    Each trial draws node orders from its own generator seeded by
    ``(seed, trial)``; the result is the lowest codelength, earliest trial on
    ties, so it does not depend on ``threads``.
    """
    cfg = config or OptimizeConfig()
    if cfg.n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    fd = visit_rates(g)
    base = flow_graph(g)
    node_entropy = fd.node_entropy

    def run(i):
        return _trial(base, node_entropy, cfg.seed, i, cfg)

    if threads > 1 and cfg.n_trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(cfg.n_trials)))
    else:
        results = [run(i) for i in range(cfg.n_trials)]
    best = min(range(len(results)), key=lambda i: (results[i][1], i))
    labels = results[best][0]
    part = make_partition(g, labels, fd)
    logger.debug("trial codelengths: %s", [r[1] for r in results])
    return OptimizeResult(part, codelength(g, part, fd), best, [float(r[1]) for r in results])
