import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from tdcomm.ingest import PostRecord, parse_time
from tdcomm.tdnet import (
    TemporalGraph,
    avg_local_clustering,
    build_network,
    degree_distribution,
    graph_stats,
    validate_block_structure,
)

T = parse_time("2015-05-11T10:00:00Z")


def posts(n_days, *items):
    """items: (user, day, tags)."""
    days = [[] for _ in range(n_days)]
    for user, day, tags in items:
        days[day].append(PostRecord(user, T, tuple(tags)))
    return days


def edge_set(g):
    return {
        tuple(sorted([g.node_label(u), g.node_label(v)])): w
        for u, v, w in zip(g.src, g.dst, g.weight)
    }


def test_intra_layer_edge():
    g = build_network(posts(5, ("a", 3, ["vino"]), ("b", 3, ["vino"])))
    assert edge_set(g) == {(("a", 3), ("b", 3)): 1.0}


def test_consecutive_day_edge():
    g = build_network(posts(5, ("a", 3, ["vino"]), ("b", 4, ["vino"])))
    assert edge_set(g) == {(("a", 3), ("b", 4)): 1.0}


def test_no_edge_across_a_gap():
    g = build_network(posts(6, ("a", 3, ["vino"]), ("b", 5, ["vino"])))
    assert g.n_edges == 0 and g.n_nodes == 2


def test_weighted_counts_shared_tags():
    items = [("a", 0, ["vino", "pasta"]), ("b", 0, ["pasta", "vino", "x"])]
    assert edge_set(build_network(posts(1, *items), mode="weighted")) == {(("a", 0), ("b", 0)): 2.0}
    assert edge_set(build_network(posts(1, *items))) == {(("a", 0), ("b", 0)): 1.0}


def test_same_user_continuity_needs_shared_tag():
    g = build_network(posts(2, ("a", 0, ["x"]), ("a", 1, ["x"])))
    assert edge_set(g) == {(("a", 0), ("a", 1)): 1.0}
    g = build_network(posts(2, ("a", 0, ["x"]), ("a", 1, ["y"])))
    assert g.n_edges == 0


def test_one_node_per_user_day():
    g = build_network(posts(2, ("a", 0, ["x"]), ("a", 0, ["y"]), ("b", 0, ["y"])))
    assert g.n_nodes == 2
    assert g.hashtags[0] == {"x", "y"}


def test_empty_input():
    g = build_network([[], []])
    assert g.n_nodes == 0 and g.n_edges == 0
    assert validate_block_structure(g).ok


def test_clique_property():
    k = 7
    g = build_network(posts(1, *[(f"u{i}", 0, ["t"]) for i in range(k)]))
    assert g.n_edges == k * (k - 1) // 2


def test_group_cap_warns(caplog):
    g = build_network(posts(1, *[(f"u{i}", 0, ["t"]) for i in range(6)]), max_group=3)
    assert g.n_edges == 3
    assert "capping" in caplog.text


def random_stream(seed, n_days=5, n_users=12, n_tags=6, n_posts=50):
    rng = random.Random(seed)
    return [
        (f"u{rng.randrange(n_users)}", rng.randrange(n_days), rng.sample([f"t{j}" for j in range(n_tags)], rng.randint(1, 3)))
        for _ in range(n_posts)
    ]


def brute_edges(items, mode):
    """Pairwise definition check over all (user, day) node pairs."""
    tags = {}
    for user, day, t in items:
        tags.setdefault((user, day), set()).update(t)
    out = {}
    nodes = sorted(tags, key=lambda x: (x[1], x[0]))
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if abs(a[1] - b[1]) <= 1 and tags[a] & tags[b]:
                out[tuple(sorted([a, b]))] = float(len(tags[a] & tags[b])) if mode == "weighted" else 1.0
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["binary", "weighted"]))
def test_matches_pairwise_definition(seed, mode):
    items = random_stream(seed)
    g = build_network(posts(5, *items), mode=mode)
    assert edge_set(g) == brute_edges(items, mode)
    assert validate_block_structure(g).ok
    assert not np.any(g.src == g.dst)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_record_order_and_threads_do_not_matter(seed):
    items = random_stream(seed)
    shuffled = items[:]
    random.Random(seed + 1).shuffle(shuffled)
    a = build_network(posts(5, *items))
    b = build_network(posts(5, *shuffled), threads=3)
    assert a.users == b.users
    assert np.array_equal(a.src, b.src) and np.array_equal(a.dst, b.dst)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_binary_and_weighted_share_edges(seed):
    items = random_stream(seed)
    a = build_network(posts(5, *items))
    b = build_network(posts(5, *items), mode="weighted")
    assert np.array_equal(a.src, b.src) and np.array_equal(a.dst, b.dst)
    assert np.all(b.weight >= 1) and np.all(a.weight == 1)


def test_degree_histograms():
    cycle = TemporalGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    star = TemporalGraph.from_edges(5, [(0, i) for i in range(1, 5)])
    assert degree_distribution(cycle) == {2: 4}
    assert degree_distribution(star) == {1: 4, 4: 1}
    assert degree_distribution(TemporalGraph.from_edges(0, [])) == {}


def test_degree_mass():
    g = build_network(posts(5, *random_stream(3)))
    hist = degree_distribution(g)
    assert sum(hist.values()) == g.n_nodes
    assert sum(k * c for k, c in hist.items()) == 2 * g.n_edges


def test_clustering_complete_and_tree():
    k4 = TemporalGraph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert avg_local_clustering(k4) == 1.0
    tree = TemporalGraph.from_edges(5, [(0, 1), (0, 2), (1, 3), (1, 4)])
    assert avg_local_clustering(tree) == 0.0


def test_clustering_cycle_with_chord():
    # triangle enumeration: C = (2/3, 1, 2/3, 1)
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]
    g = TemporalGraph.from_edges(4, edges)
    assert avg_local_clustering(g) == pytest.approx(5 / 6, abs=1e-12)
    assert avg_local_clustering(g) == pytest.approx(np.mean(oracles.local_clustering(4, edges)), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_clustering_matches_enumeration(seed):
    g = build_network(posts(5, *random_stream(seed)))
    if g.n_nodes == 0:
        return
    edges = list(zip(g.src.tolist(), g.dst.tolist()))
    assert avg_local_clustering(g) == pytest.approx(np.mean(oracles.local_clustering(g.n_nodes, edges)), abs=1e-12)


def test_clustering_sample_is_seeded_and_close():
    g = TemporalGraph.from_edges(200, [(u, v) for u, v in nx.gnp_random_graph(200, 0.1, seed=4).edges])
    exact = avg_local_clustering(g)
    a = avg_local_clustering(g, sample=(100, 7))
    assert a == avg_local_clustering(g, sample=(100, 7))
    assert abs(a - exact) < 0.05
    assert avg_local_clustering(g, sample=(500, 7)) == pytest.approx(exact)


def test_clustering_empty_graph():
    with pytest.raises(ValueError):
        avg_local_clustering(TemporalGraph.from_edges(0, []))


def test_block_violation_reported():
    g = TemporalGraph.from_edges(3, [(0, 1), (0, 2)], days=[0, 1, 2])
    report = validate_block_structure(g)
    assert not report.ok
    assert report.violations == [(0, 2, 0, 2)]
    assert "day 0 vs day 2" in str(report)


def test_block_report_limited_to_ten():
    g = TemporalGraph.from_edges(30, [(0, i) for i in range(15, 30)], days=[0] * 15 + [5] * 15)
    assert len(validate_block_structure(g).violations) == 10


def test_stats_json_shape():
    g = build_network(posts(5, *random_stream(1)))
    s = graph_stats(g)
    assert set(s) == {"n_nodes", "n_edges", "degree_histogram", "avg_local_clustering"}
    assert 0.0 <= s["avg_local_clustering"] <= 1.0
