import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import (
    bridges_by_removal,
    lexmin_shortest_path,
    net_of,
    random_network,
    simple_paths_by_permutation,
    spanning_trees,
    triangle,
)
from qkdplan.network import node_key
from qkdplan.graphs import (
    GraphError,
    components,
    enumerate_paths,
    find_bridges,
    is_connected,
    is_two_edge_connected,
    minimum_spanning_tree,
    path_table,
    prefix_subpaths,
    shortest_path,
    shortest_path_tree,
)

PATH4 = [("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0)]


def test_enumerate_triangle_len2():
    paths = enumerate_paths(triangle(), "a", 2)
    assert set(paths["c"]) == {("a", "c"), ("a", "b", "c")}
    assert paths["c"][0] == ("a", "c")  # shorter first


def test_enumerate_triangle_len1():
    assert enumerate_paths(triangle(), "a", 1)["c"] == [("a", "c")]


def test_enumerate_path_graph_needs_fallback():
    net = net_of(PATH4)
    assert enumerate_paths(net, "a", 2)["d"] == []
    table = path_table(net, 2)
    assert table.paths[("a", "d")] == [("a", "b", "c", "d")]
    assert ("a", "d") in table.fallback and ("a", "c") not in table.fallback


def test_enumerate_unknown_source():
    with pytest.raises(GraphError):
        enumerate_paths(triangle(), "z", 2)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 8), max_len=st.integers(1, 4))
def test_enumerate_matches_permutation_oracle(seed, n, max_len):
    net = random_network(random.Random(seed), n, extra_p=0.35)
    source = net.node_ids[0]
    got = enumerate_paths(net, source, max_len)
    flat = [p for ps in got.values() for p in ps]
    assert len(flat) == len(set(flat))
    assert set(flat) == simple_paths_by_permutation(net, source, max_len)
    for t, ps in got.items():
        assert all(p[-1] == t for p in ps)
        assert ps == sorted(ps, key=lambda p: (len(p), [node_key(x) for x in p]))


def test_shortest_path_examples():
    assert shortest_path(net_of(PATH4), "a", "d") == ("a", "b", "c", "d")
    assert shortest_path(triangle(), "a", "c", "inverse_key_rate") == ("a", "b", "c")
    assert shortest_path(triangle(), "a", "c", "hop") == ("a", "c")


def test_shortest_path_lexicographic_tie():
    # two hop-shortest routes a-b-d and a-c-d
    net = net_of([("a", "c", 1), ("a", "b", 1), ("b", "d", 1), ("c", "d", 1)])
    assert shortest_path(net, "a", "d") == ("a", "b", "d")


def test_shortest_path_rejects_same_node():
    with pytest.raises(GraphError):
        shortest_path(triangle(), "a", "a")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 10))
def test_shortest_path_tree_is_lexmin(seed, n):
    net = random_network(random.Random(seed), n)
    src = net.node_ids[-1]
    tree = shortest_path_tree(net, src)
    for t in net.node_ids:
        if t != src:
            assert tree[t] == lexmin_shortest_path(net.edge_keys, net.node_ids, src, t)
            # prefix closure
            assert tree[t][:-1] == (tree[tree[t][-2]] if len(tree[t]) > 2 else (src,))


def test_prefix_subpaths():
    assert prefix_subpaths(("a", "b", "c", "d")) == [("a", "b"), ("a", "b", "c")]
    assert prefix_subpaths(("a", "b")) == []
    assert prefix_subpaths(("a", "b", "c")) == [("a", "b")]


def test_mst_examples():
    weights = {("a", "b"): 1, ("b", "c"): 2, ("a", "c"): 3}
    assert minimum_spanning_tree(triangle(), weights) == {("a", "b"), ("b", "c")}
    star = net_of([("h", x, 1.0) for x in "pqrs"])
    assert minimum_spanning_tree(star) == set(star.edge_keys)
    equal = triangle((1.0, 1.0, 1.0))
    assert minimum_spanning_tree(equal) == {("a", "b"), ("a", "c")}


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 7))
def test_mst_weight_matches_brute_force(seed, n):
    net = random_network(random.Random(seed), n, extra_p=0.4)
    w = {e: 1.0 / net.key_rate(*e) for e in net.edge_keys}
    best = min(sum(w[e] for e in t) for t in spanning_trees(net))
    tree = minimum_spanning_tree(net)
    assert len(tree) == n - 1 and is_connected(tree, net.node_ids)
    assert sum(w[e] for e in tree) == pytest.approx(best, rel=1e-12)


def test_bridge_examples():
    assert find_bridges([("a", "b"), ("b", "c")]) == {("a", "b"), ("b", "c")}
    c4 = [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")]
    assert find_bridges(c4) == set()
    assert find_bridges(c4 + [("d", "e")]) == {("d", "e")}


def test_bridges_reject_disconnected():
    with pytest.raises(GraphError):
        find_bridges([("a", "b"), ("c", "d")])


@pytest.mark.parametrize("seed", range(200))
def test_bridges_match_removal_oracle(seed):
    rng = random.Random(seed)
    net = random_network(rng, rng.randint(2, 12), extra_p=rng.choice([0.0, 0.1, 0.2, 0.35]))
    edges = net.edge_keys
    assert find_bridges(edges, net.node_ids) == bridges_by_removal(edges, net.node_ids)


def test_two_edge_connected_examples():
    assert is_two_edge_connected([("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")])
    assert not is_two_edge_connected([("a", "b"), ("b", "c"), ("b", "d")])
    bowtie = [("a", "b"), ("b", "c"), ("a", "c"), ("c", "d"), ("d", "e"), ("c", "e")]
    assert is_two_edge_connected(bowtie)


def test_two_edge_connected_needs_spanning():
    assert not is_two_edge_connected([("a", "b"), ("b", "c"), ("a", "c")], ["a", "b", "c", "d"])


def test_components_largest_first():
    parts = components([("a", "b"), ("b", "c"), ("x", "y")], ["a", "b", "c", "x", "y", "z"])
    assert parts == [{"a", "b", "c"}, {"x", "y"}, {"z"}]
