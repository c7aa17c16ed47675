"""Post-detection analyses over community structure in time."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .ingest import PostRecord
from .mapeq import OptimizeConfig, optimize
from .tdnet import TemporalGraph, build_network

DEFAULT_TOPICS = ("food", "expo", "politics", "noexpo", "women", "other")
DEFAULT_SIZE_FLOOR = 3


@dataclass(frozen=True)
class CommunityTimeline:
    id: int
    daily_counts: dict[int, int]
    first_day: int
    last_day: int
    lifespan: int
    total_users: int
    n_nodes: int
    top_hashtags: list[tuple[str, int]] = field(default_factory=list)
    topic: str = "other"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "first_day": self.first_day,
            "last_day": self.last_day,
            "lifespan": self.lifespan,
            "total_users": self.total_users,
            "n_nodes": self.n_nodes,
            "daily_counts": {str(d): c for d, c in sorted(self.daily_counts.items())},
            "top_hashtags": [[t, c] for t, c in self.top_hashtags],
            "topic": self.topic,
        }


class TopicMap(dict):
    """hashtag -> topic; anything unmapped resolves to ``other``."""

    def topic(self, hashtag: str) -> str:
        return self.get(hashtag, "other")

    @classmethod
    def from_json(cls, obj: Mapping) -> "TopicMap":
        """Accept either {topic: [hashtags]} or a flat {hashtag: topic} mapping."""
        out = cls()
        for key, val in obj.items():
            if isinstance(val, list):
                for tag in val:
                    out[tag.lstrip("#").lower()] = key
            else:
                out[key.lstrip("#").lower()] = val
        return out

    @classmethod
    def load(cls, path) -> "TopicMap":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    @classmethod
    def example(cls) -> "TopicMap":
        text = resources.files("tdcomm").joinpath("data/topics_example.json").read_text(encoding="utf-8")
        return cls.from_json(json.loads(text)["topics"])


def hashtag_usage(per_day: Sequence[Sequence[PostRecord]]) -> dict[tuple[str, int], Counter]:
    """(user, day) -> hashtag post counts."""
    usage: dict[tuple[str, int], Counter] = defaultdict(Counter)
    for d, records in enumerate(per_day):
        for r in records:
            usage[(r.user, d)].update(r.hashtags)
    return dict(usage)


def rank_communities(labels: np.ndarray) -> np.ndarray:
    """Renumber communities by decreasing node count, ties by lowest member index."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return labels.astype(np.int64)
    uniq, first, inv, counts = np.unique(labels, return_index=True, return_inverse=True, return_counts=True)
    order = np.lexsort((first, -counts))
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[order] = np.arange(len(uniq))
    return rank[inv.ravel()]


def build_timelines(
    g: TemporalGraph,
    labels,
    usage: Mapping[tuple[str, int], Counter] | None = None,
    min_size: int = DEFAULT_SIZE_FLOOR,
    top_n: int = 10,
    lifespan_mode: str = "span",
) -> list[CommunityTimeline]:
    """One timeline per community with at least ``min_size`` nodes.

    Community ids are ranks by decreasing node count. ``lifespan_mode='span'``
    gives last - first + 1; ``'active'`` counts days with members.
    """
    if lifespan_mode not in ("span", "active"):
        raise ValueError(f"unknown lifespan mode {lifespan_mode!r}")
    labels = rank_communities(labels)
    if len(labels) != g.n_nodes:
        raise ValueError("partition does not cover the graph")
    members: dict[int, list[int]] = defaultdict(list)
    for i, c in enumerate(labels):
        members[int(c)].append(i)
    out = []
    for c in sorted(members):
        nodes = members[c]
        if len(nodes) < min_size:
            continue
        days = g.days[nodes]
        dc = Counter(int(d) for d in days)
        tags: Counter = Counter()
        if usage is not None:
            for i in nodes:
                tags.update(usage.get(g.node_label(i), {}))
        elif g.hashtags is not None:
            for i in nodes:
                tags.update(g.hashtags[i])
        first, last = int(days.min()), int(days.max())
        out.append(
            CommunityTimeline(
                id=c,
                daily_counts=dict(sorted(dc.items())),
                first_day=first,
                last_day=last,
                lifespan=last - first + 1 if lifespan_mode == "span" else len(dc),
                total_users=len({g.users[i] for i in nodes}),
                n_nodes=len(nodes),
                top_hashtags=sorted(tags.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n],
            )
        )
    return out


def lifespan_distribution(timelines: Sequence[CommunityTimeline], top_k: int | None = None) -> dict[int, int]:
    """d -> D(d); optionally over the ``top_k`` largest communities by user count."""
    chosen = list(timelines)
    if top_k is not None:
        chosen = sorted(chosen, key=lambda t: (-t.total_users, t.id))[:top_k]
    return dict(sorted(Counter(t.lifespan for t in chosen).items()))


def community_user_ratio(g: TemporalGraph, labels) -> list[float | None]:
    """Per day: communities present that day / nodes that day; None on empty days."""
    labels = np.asarray(labels)
    out: list[float | None] = []
    off = g.day_offsets
    for d in range(g.n_days):
        lo, hi = off[d], off[d + 1]
        out.append(None if hi == lo else len(np.unique(labels[lo:hi])) / (hi - lo))
    return out


def count_communities(labels, min_size: int = DEFAULT_SIZE_FLOOR) -> int:
    if len(labels) == 0:
        return 0
    return int(np.sum(np.bincount(np.asarray(labels)) >= min_size))


def detect_labels(g: TemporalGraph, config: OptimizeConfig, threads: int = 1) -> np.ndarray:
    """Optimized labels; singletons for a graph without edges."""
    if g.n_edges == 0:
        return np.arange(g.n_nodes)
    return optimize(g, config, threads=threads).partition.labels


def frame_ratio_analysis(
    per_day: Sequence[Sequence[PostRecord]],
    frames: Sequence[int],
    config: OptimizeConfig,
    mode: str = "binary",
    min_size: int = DEFAULT_SIZE_FLOOR,
    threads: int = 1,
    full_labels=None,
) -> dict[int, float | None]:
    """Ratio of communities found on days [0, n) to those on the whole network.

    Each frame is an independent detection job with the same config and seed.
    ``full_labels`` reuses an existing detection on the whole network.
    """
    n_days = len(per_day)
    for n in frames:
        if not 1 <= n <= n_days:
            raise ValueError(f"frame {n} outside [1, {n_days}]")

    def count(n: int) -> int:
        if n == n_days and full_labels is not None:
            return count_communities(full_labels, min_size)
        g = build_network(per_day[:n], mode=mode)
        return count_communities(detect_labels(g, config), min_size)

    jobs = sorted(set(frames) | {n_days})
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = dict(zip(jobs, pool.map(count, jobs)))
    else:
        counts = {n: count(n) for n in jobs}
    full = counts[n_days]
    return {n: (counts[n] / full if full else None) for n in frames}


def label_topics(timelines: Sequence[CommunityTimeline], topic_map: Mapping[str, str], k: int = 3) -> list[CommunityTimeline]:
    """Majority topic of each community's ``k`` most used hashtags.

    Ties go to the tied topic whose best-ranked hashtag comes first.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    out = []
    for t in timelines:
        topics = [topic_map.get(tag, "other") for tag, _ in t.top_hashtags[:k]]
        if not topics:
            out.append(replace(t, topic="other"))
            continue
        votes = Counter(topics)
        best = max(votes.values())
        label = next(tp for tp in topics if votes[tp] == best)
        out.append(replace(t, topic=label))
    return out


def cumulative_size_curve(timelines: Sequence[CommunityTimeline]) -> list[tuple[int, float]]:
    """(rank, cumulative user fraction) with communities by decreasing user count."""
    sizes = sorted((t.total_users for t in timelines), reverse=True)
    total = sum(sizes)
    if not total:
        return []
    csum = np.cumsum(sizes)
    return [(i + 1, float(c / total)) for i, c in enumerate(csum)]


def coverage_top_k(timelines: Sequence[CommunityTimeline], coverage: float = 0.5) -> int:
    """Smallest k whose largest communities hold ``coverage`` of all community users."""
    for rank, frac in cumulative_size_curve(timelines):
        if frac >= coverage - 1e-12:
            return rank
    return 0
