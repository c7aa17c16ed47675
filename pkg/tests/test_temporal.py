from collections import Counter
from datetime import timedelta

import numpy as np
import pytest

from tdcomm.ingest import bin_by_day
from tdcomm.mapeq import OptimizeConfig
from tdcomm.synth import PlantedSpec, generate_planted
from tdcomm.tdnet import TemporalGraph, build_network
from tdcomm.temporal import (
    CommunityTimeline,
    TopicMap,
    build_timelines,
    community_user_ratio,
    count_communities,
    coverage_top_k,
    cumulative_size_curve,
    detect_labels,
    frame_ratio_analysis,
    label_topics,
    lifespan_distribution,
    rank_communities,
)


def planted_days(spec):
    records, truth = generate_planted(spec)
    _, days = bin_by_day(records, spec.start_date, spec.start_date + timedelta(days=spec.n_days - 1))
    return days, truth


def graph_on_days(days_of_nodes, users=None):
    n = len(days_of_nodes)
    users = users or [f"u{i}" for i in range(n)]
    return TemporalGraph.from_edges(n, [], days=days_of_nodes, users=users, n_days=max(days_of_nodes) + 1)


def tl(id, lifespan, users):
    return CommunityTimeline(id, {0: users}, 0, lifespan - 1, lifespan, users, users)


def test_lifespan_is_span():
    g = graph_on_days([2, 3, 4, 5, 5, 7, 7, 7])
    labels = [0, 0, 0, 1, 1, 2, 2, 2]
    got = {t.first_day: t.lifespan for t in build_timelines(g, labels, min_size=1)}
    assert got == {2: 3, 5: 1, 7: 1}
    g2 = graph_on_days([2, 5, 5])
    assert build_timelines(g2, [0, 0, 0], min_size=1)[0].lifespan == 4
    assert build_timelines(g2, [0, 0, 0], min_size=1, lifespan_mode="active")[0].lifespan == 2


def test_timeline_counts_and_floor():
    g = graph_on_days([0, 0, 1, 1, 1, 2], users=["a", "b", "a", "c", "d", "e"])
    out = build_timelines(g, [0, 0, 0, 0, 0, 1])
    assert len(out) == 1
    t = out[0]
    assert t.daily_counts == {0: 2, 1: 3}
    assert sum(t.daily_counts.values()) == t.n_nodes == 5
    assert t.total_users == 4


def test_timeline_top_hashtags():
    g = graph_on_days([0, 0, 0], users=["a", "b", "c"])
    usage = {("a", 0): Counter({"vino": 2}), ("b", 0): Counter({"vino": 1, "pasta": 1}), ("c", 0): Counter({"x": 1})}
    t = build_timelines(g, [0, 0, 0], usage)[0]
    assert t.top_hashtags[:3] == [("vino", 3), ("pasta", 1), ("x", 1)]


def test_rank_communities_by_size():
    assert list(rank_communities([7, 3, 3, 9, 9, 9])) == [2, 1, 1, 0, 0, 0]


def test_lifespan_distribution():
    assert lifespan_distribution([tl(0, 1, 5), tl(1, 1, 4), tl(2, 4, 3)]) == {1: 2, 4: 1}
    assert lifespan_distribution([]) == {}
    assert lifespan_distribution([tl(0, 1, 5), tl(1, 1, 4), tl(2, 4, 3)], top_k=1) == {1: 1}


def test_planted_lifespans_all_at_full_span():
    spec = PlantedSpec(n_communities=3, users_per_community=10, n_days=14, seed=1)
    days, truth = planted_days(spec)
    g = build_network(days)
    labels = np.array([truth[g.node_label(i)] for i in range(g.n_nodes)])
    assert lifespan_distribution(build_timelines(g, labels)) == {14: 3}


def test_community_user_ratio():
    g = graph_on_days([0] * 10)
    assert community_user_ratio(g, [0] * 10) == [0.1]
    assert community_user_ratio(g, list(range(10))) == [1.0]
    gap = graph_on_days([0, 0, 2])
    assert community_user_ratio(gap, [0, 1, 2]) == [1.0, None, 1.0]


def test_planted_ratio():
    days, truth = planted_days(PlantedSpec(seed=2))
    g = build_network(days)
    labels = np.array([truth[g.node_label(i)] for i in range(g.n_nodes)])
    assert community_user_ratio(g, labels) == pytest.approx([0.04] * 14)


def test_label_topics_rules():
    topics = TopicMap(vino="food", pasta="food", cibo="food", renzi="politics")

    def with_tags(*tags):
        return CommunityTimeline(0, {0: 3}, 0, 0, 1, 3, 3, [(t, 10 - i) for i, t in enumerate(tags)])

    assert label_topics([with_tags("vino", "pasta", "cibo")], topics)[0].topic == "food"
    assert label_topics([with_tags("renzi", "vino", "zzz")], topics)[0].topic == "politics"
    assert label_topics([with_tags("zzz", "vino", "renzi", "pasta", "cibo")], topics, k=3)[0].topic == "other"
    assert label_topics([with_tags("vino", "pasta")], TopicMap())[0].topic == "other"
    assert label_topics([with_tags()], topics)[0].topic == "other"
    with pytest.raises(ValueError):
        label_topics([], topics, k=0)


def test_label_topics_tie_prefers_best_ranked_tied_topic():
    topics = TopicMap(a="A", b="B", c="C")
    t = CommunityTimeline(0, {0: 3}, 0, 0, 1, 3, 3, [("c", 9), ("a", 8), ("b", 7), ("a", 6), ("b", 5)])
    assert label_topics([t], topics, k=5)[0].topic == "A"


def test_topic_map_formats(tmp_path):
    flat = TopicMap.from_json({"#Vino": "food"})
    grouped = TopicMap.from_json({"food": ["vino"]})
    assert flat == grouped == {"vino": "food"}
    example = TopicMap.example()
    assert set(example.values()) <= {"food", "expo", "politics", "noexpo", "women"}
    assert example.topic("unmapped") == "other"


def test_cumulative_curve():
    curve = cumulative_size_curve([tl(0, 1, 30), tl(1, 1, 60), tl(2, 1, 10)])
    assert curve == [(1, 0.6), (2, 0.9), (3, 1.0)]
    equal = cumulative_size_curve([tl(i, 1, 25) for i in range(4)])
    assert [f for _, f in equal] == [0.25, 0.5, 0.75, 1.0]
    assert cumulative_size_curve([]) == []


def test_heavy_tailed_sizes_concentrate_users():
    sizes = np.floor(1000 / np.arange(1, 501) ** 1.2).astype(int) + 3
    curve = cumulative_size_curve([tl(i, 1, int(s)) for i, s in enumerate(sizes)])
    k = coverage_top_k([tl(i, 1, int(s)) for i, s in enumerate(sizes)], 0.75)
    assert k / len(sizes) < 0.5
    assert all(b[1] >= a[1] for a, b in zip(curve, curve[1:]))
    assert curve[-1][1] == pytest.approx(1.0, abs=1e-12)


def test_count_communities_floor():
    assert count_communities([0, 0, 0, 1, 1, 2, 2, 2, 2]) == 2
    assert count_communities([]) == 0


def test_frame_ratio_identity_and_bounds():
    spec = PlantedSpec(n_communities=8, users_per_community=10, n_days=16, lifespan=3, seed=4)
    days, _ = planted_days(spec)
    cfg = OptimizeConfig(n_trials=3, seed=1)
    ratios = frame_ratio_analysis(days, [2, 4, 8, 16], cfg)
    assert ratios[16] == 1.0
    assert all(0 < r <= 1 for r in ratios.values())
    assert [ratios[n] for n in (2, 4, 8, 16)] == sorted(ratios[n] for n in (2, 4, 8, 16))
    g = build_network(days)
    reuse = frame_ratio_analysis(days, [16, 4], cfg, full_labels=detect_labels(g, cfg), threads=2)
    assert reuse == {16: 1.0, 4: ratios[4]}


def test_frame_ratio_rejects_long_frames():
    with pytest.raises(ValueError):
        frame_ratio_analysis([[]] * 4, [5], OptimizeConfig(n_trials=1))
