"""Connected time-dependent network: nodes are (user, day) pairs, edges join
nodes on the same or consecutive days that used a common hashtag.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .ingest import PostRecord

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TemporalGraph:
    """Undirected weighted graph over temporal nodes.

    Nodes are indexed densely and sorted by (day, user). ``day_offsets[d]``
    is the first node index of day ``d``. Each undirected edge is stored once
    with ``src < dst``.
    """

    users: list[str]
    days: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    n_days: int
    hashtags: list[frozenset[str]] | None = None

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[Sequence], days=None, users=None, n_days=None):
        """Hand-built graph, mostly for tests. ``edges`` holds (u, v) or (u, v, w)."""
        rows = [tuple(e) for e in edges]
        u = np.array([r[0] for r in rows], dtype=np.int64)
        v = np.array([r[1] for r in rows], dtype=np.int64)
        w = np.array([r[2] if len(r) > 2 else 1.0 for r in rows], dtype=np.float64)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        days = np.zeros(n_nodes, dtype=np.int64) if days is None else np.asarray(days, dtype=np.int64)
        if users is None:
            users = [str(i) for i in range(n_nodes)]
        if n_days is None:
            n_days = int(days.max()) + 1 if n_nodes else 0
        return cls(list(users), days, lo, hi, w, n_days)

    @property
    def n_nodes(self) -> int:
        return len(self.users)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @cached_property
    def day_offsets(self) -> np.ndarray:
        return np.searchsorted(self.days, np.arange(self.n_days + 1), side="left")

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric weighted adjacency (self-loops on the diagonal, if any)."""
        n = self.n_nodes
        off = self.src != self.dst
        rows = np.concatenate([self.src, self.dst[off]])
        cols = np.concatenate([self.dst, self.src[off]])
        vals = np.concatenate([self.weight, self.weight[off]])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def node_label(self, i: int) -> tuple[str, int]:
        return self.users[i], int(self.days[i])


def _clique_pairs(ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(len(ids), k=1)
    return ids[i], ids[j]


def _cap(ids: np.ndarray, cap: int | None, where: str) -> np.ndarray:
    if cap is not None and len(ids) > cap:
        logger.warning("capping hashtag group %s from %d to %d nodes", where, len(ids), cap)
        return ids[:cap]
    return ids


def _intra_block(groups: dict[str, np.ndarray], cap) -> tuple[np.ndarray, np.ndarray]:
    us, vs = [], []
    for tag in sorted(groups):
        ids = _cap(groups[tag], cap, tag)
        if len(ids) > 1:
            u, v = _clique_pairs(ids)
            us.append(u)
            vs.append(v)
    if not us:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(us), np.concatenate(vs)


def _inter_block(a: dict[str, np.ndarray], b: dict[str, np.ndarray], cap) -> tuple[np.ndarray, np.ndarray]:
    us, vs = [], []
    for tag in sorted(a.keys() & b.keys()):
        left, right = _cap(a[tag], cap, tag), _cap(b[tag], cap, tag)
        us.append(np.repeat(left, len(right)))
        vs.append(np.tile(right, len(left)))
    if not us:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(us), np.concatenate(vs)


def build_network(
    per_day: Sequence[Sequence[PostRecord]],
    mode: str = "binary",
    max_group: int | None = None,
    threads: int = 1,
) -> TemporalGraph:
    """Build the connected time-dependent network from day-binned records.

    One node per (user, active day). Two nodes on the same day are linked if
    their day hashtag sets intersect; nodes on consecutive days likewise
    (including a user's own consecutive-day nodes). ``mode='weighted'`` sets
    the weight to the number of shared hashtags, ``'binary'`` to 1.
    """
    if mode not in ("binary", "weighted"):
        raise ValueError(f"unknown edge mode {mode!r}")
    n_days = len(per_day)
    users: list[str] = []
    days: list[int] = []
    node_tags: list[frozenset[str]] = []
    groups: list[dict[str, np.ndarray]] = []
    for d, records in enumerate(per_day):
        tags_by_user: dict[str, set[str]] = defaultdict(set)
        for r in records:
            tags_by_user[r.user].update(r.hashtags)
        base = len(users)
        by_tag: dict[str, list[int]] = defaultdict(list)
        for k, user in enumerate(sorted(tags_by_user)):
            users.append(user)
            days.append(d)
            node_tags.append(frozenset(tags_by_user[user]))
            for tag in tags_by_user[user]:
                by_tag[tag].append(base + k)
        groups.append({t: np.array(sorted(ids), dtype=np.int64) for t, ids in by_tag.items()})

    tasks = [(_intra_block, (groups[d], max_group)) for d in range(n_days)]
    tasks += [(_inter_block, (groups[d], groups[d + 1], max_group)) for d in range(n_days - 1)]
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(lambda t: t[0](*t[1]), tasks))
    else:
        blocks = [fn(*args) for fn, args in tasks]

    n = len(users)
    if blocks:
        u = np.concatenate([b[0] for b in blocks])
        v = np.concatenate([b[1] for b in blocks])
    else:
        u = v = np.empty(0, np.int64)
    keys, counts = np.unique(u * np.int64(max(n, 1)) + v, return_counts=True)
    src, dst = keys // max(n, 1), keys % max(n, 1)
    weight = counts.astype(np.float64) if mode == "weighted" else np.ones(len(keys))
    return TemporalGraph(users, np.array(days, dtype=np.int64), src, dst, weight, n_days, node_tags)


def degree_distribution(g: TemporalGraph) -> dict[int, int]:
    """Histogram degree -> node count; weights ignored, isolated nodes count as degree 0."""
    deg = np.bincount(np.concatenate([g.src, g.dst]), minlength=g.n_nodes)
    values, counts = np.unique(deg, return_counts=True)
    return {int(k): int(c) for k, c in zip(values, counts)}


def local_clustering(g: TemporalGraph, nodes: np.ndarray | None = None) -> np.ndarray:
    """C_i = 2 t_i / (k_i (k_i - 1)), 0 when k_i < 2; weights and self-loops ignored."""
    a = g.adjacency.copy()
    a.setdiag(0)
    a.eliminate_zeros()
    a.data[:] = 1.0
    rows = a if nodes is None else a[nodes]
    k = np.asarray(rows.sum(axis=1)).ravel()
    # rows @ a counts 2-paths; masking by rows keeps those closing a triangle
    tri = np.asarray((rows @ a).multiply(rows).sum(axis=1)).ravel() / 2.0
    out = np.zeros(len(k))
    ok = k >= 2
    out[ok] = 2.0 * tri[ok] / (k[ok] * (k[ok] - 1))
    return out


def avg_local_clustering(g: TemporalGraph, sample: tuple[int, int] | None = None) -> float:
    """Mean local clustering coefficient, exact or estimated on ``sample=(size, seed)`` nodes."""
    if g.n_nodes == 0:
        raise ValueError("clustering coefficient is undefined on an empty graph")
    if sample is None:
        return float(local_clustering(g).mean())
    size, seed = sample
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(g.n_nodes, size=min(size, g.n_nodes), replace=False))
    return float(local_clustering(g, idx).mean())


@dataclass
class BlockReport:
    violations: list[tuple[int, int, int, int]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        rows = [f"  edge {u}-{v}: day {du} vs day {dv}" for u, v, du, dv in self.violations]
        return "block structure violated:\n" + "\n".join(rows)


def validate_block_structure(g: TemporalGraph, limit: int = 10) -> BlockReport:
    """Check every edge joins nodes at most one day apart; report the first ``limit`` offenders."""
    du, dv = g.days[g.src], g.days[g.dst]
    bad = np.flatnonzero(np.abs(du - dv) > 1)[:limit]
    return BlockReport([(int(g.src[i]), int(g.dst[i]), int(du[i]), int(dv[i])) for i in bad])


def graph_stats(g: TemporalGraph, sample: tuple[int, int] | None = None) -> dict:
    return {
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "degree_histogram": {str(k): v for k, v in degree_distribution(g).items()},
        "avg_local_clustering": avg_local_clustering(g, sample) if g.n_nodes else None,
    }
