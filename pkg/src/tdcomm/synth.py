"""Planted-community post streams and partition agreement scores."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from typing import IO, Hashable, Mapping

import numpy as np

from .ingest import PostRecord


@dataclass(frozen=True)
class PlantedSpec:
    """Parameters of a planted stream.

    Every user belongs to one community for the whole stream. A community is
    active for ``lifespan`` consecutive days (default: all days); start days
    are spread evenly over the window. On an active day each member posts
    with probability ``activity``, making ``posts_per_day`` posts of 1-3
    hashtags from the community pool. ``cross_talk`` is the probability that
    a post also carries one hashtag from another community's pool.
    """

    n_communities: int = 4
    users_per_community: int = 25
    n_days: int = 14
    pool_size: int = 5
    activity: float = 1.0
    posts_per_day: int = 1
    cross_talk: float = 0.0
    lifespan: int | None = None
    start_date: date = date(2015, 5, 11)
    seed: int = 0

    def __post_init__(self):
        for name in ("n_communities", "users_per_community", "n_days", "pool_size", "posts_per_day"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("activity", "cross_talk"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.lifespan is not None and not 1 <= self.lifespan <= self.n_days:
            raise ValueError("lifespan must lie in [1, n_days]")

    def start_days(self) -> list[int]:
        span = self.lifespan or self.n_days
        slack = self.n_days - span
        if self.n_communities == 1:
            return [0]
        return [round(c * slack / (self.n_communities - 1)) for c in range(self.n_communities)]


def pool(c: int, size: int) -> list[str]:
    return [f"c{c:03d}t{j:02d}" for j in range(size)]


def generate_planted(spec: PlantedSpec) -> tuple[list[PostRecord], dict[tuple[str, int], int]]:
    """Return (records sorted by time, ground-truth community per (user, day index))."""
    rng = np.random.default_rng(spec.seed)
    pools = [pool(c, spec.pool_size) for c in range(spec.n_communities)]
    span = spec.lifespan or spec.n_days
    starts = spec.start_days()
    day0 = datetime.combine(spec.start_date, time(0), tzinfo=timezone.utc)
    records: list[PostRecord] = []
    truth: dict[tuple[str, int], int] = {}
    for d in range(spec.n_days):
        for c in range(spec.n_communities):
            if not starts[c] <= d < starts[c] + span:
                continue
            for i in range(spec.users_per_community):
                if rng.random() >= spec.activity:
                    continue
                user = f"u{c:03d}_{i:03d}"
                truth[(user, d)] = c
                for _ in range(spec.posts_per_day):
                    k = int(rng.integers(1, min(3, spec.pool_size) + 1))
                    tags = [pools[c][j] for j in rng.choice(spec.pool_size, size=k, replace=False)]
                    if spec.n_communities > 1 and rng.random() < spec.cross_talk:
                        other = int(rng.integers(spec.n_communities - 1))
                        other += other >= c
                        tags.append(pools[other][int(rng.integers(spec.pool_size))])
                    # posts between 08:00 and 22:00 UTC
                    t = day0 + timedelta(days=d, seconds=int(rng.integers(8 * 3600, 22 * 3600)))
                    records.append(PostRecord(user, t, tuple(dict.fromkeys(tags))))
    records.sort(key=lambda r: (r.time, r.user))
    return records, truth


def write_truth_tsv(truth: Mapping[tuple[str, int], int], fh: IO[str]) -> None:
    fh.write("user\tday\tcommunity_id\n")
    for (user, day), c in sorted(truth.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        fh.write(f"{user}\t{day}\t{c}\n")


def read_truth_tsv(fh: IO[str]) -> dict[tuple[str, int], int]:
    out = {}
    for line in fh:
        if line.startswith("#") or line.startswith("user\t") or not line.strip():
            continue
        user, day, c = line.rstrip("\n").split("\t")
        out[(user, int(day))] = int(c)
    return out


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(labels_a: Mapping[Hashable, Hashable], labels_b: Mapping[Hashable, Hashable]) -> float:
    """Normalized mutual information, arithmetic-mean normalization.

    Both arguments map node -> label over the same node set. Two trivial
    (single-cluster) partitions score 1.0; if only one is trivial the score
    is 0.0.
    """
    if labels_a.keys() != labels_b.keys():
        raise ValueError("partitions are over different node sets")
    if not labels_a:
        raise ValueError("empty partitions")
    keys = list(labels_a)
    _, a = np.unique(np.array([str(labels_a[k]) for k in keys]), return_inverse=True)
    _, b = np.unique(np.array([str(labels_b[k]) for k in keys]), return_inverse=True)
    joint = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(joint, (a, b), 1.0)
    ha, hb = _entropy(joint.sum(axis=1)), _entropy(joint.sum(axis=0))
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    mi = ha + hb - _entropy(joint.ravel())
    return float(min(max(2.0 * mi / (ha + hb), 0.0), 1.0))
