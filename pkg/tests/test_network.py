import json
import random
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import net_of, random_network, triangle
from qkdplan.graphs import is_connected, is_two_edge_connected
from qkdplan.network import (
    REFERENCE_HUB,
    Network,
    NetworkError,
    canonical_edge,
    export_graph,
    load_network,
    node_key,
    reference_network,
    save_network,
    sort_nodes,
    traffic_csv,
)


def write_json(path, nodes, edges, traffic=()):
    path.write_text(json.dumps({
        "nodes": [{"id": n} for n in nodes],
        "edges": [{"u": u, "v": v, "key_rate_kbps": r} for u, v, r in edges],
        "traffic": [{"u": u, "v": v, "demand_kbps": d} for u, v, d in traffic],
    }))
    return path


TRIANGLE = [("a", "b", 10), ("b", "c", 5), ("a", "c", 2)]


def test_load_triangle_json(tmp_path):
    net = load_network(write_json(tmp_path / "t.json", "abc", TRIANGLE))
    assert len(net.nodes) == 3 and len(net.edges) == 3
    assert net.key_rate("c", "a") == 2.0


def test_zero_key_rate_named(tmp_path):
    bad = [("a", "b", 10), ("b", "c", 5), ("a", "c", 0)]
    with pytest.raises(NetworkError, match="nonpositive key rate a-c"):
        load_network(write_json(tmp_path / "t.json", "abc", bad))


def test_json_round_trip(tmp_path):
    net = reference_network(3)
    save_network(net, tmp_path / "ref.json")
    assert load_network(tmp_path / "ref.json") == net


def test_reference_file_counts(tmp_path):
    save_network(reference_network(0), tmp_path / "ref.json")
    net = load_network(tmp_path / "ref.json")
    assert (len(net.nodes), len(net.edges)) == (29, 48)


@pytest.mark.parametrize("edges, traffic, message", [
    ([("a", "b", 1), ("c", "d", 1)], [], "disconnected: node c"),
    ([("a", "a", 1), ("a", "b", 1)], [], "self-loop at node a"),
    ([("a", "b", 1), ("b", "a", 2)], [], "parallel edge a-b"),
    ([("a", "b", -1)], [], "nonpositive key rate a-b"),
    ([("a", "b", 1)], [("a", "b", 1), ("b", "a", 2)], "asymmetric traffic a-b"),
    ([("a", "b", 1)], [("a", "b", -1)], "negative traffic demand a-b"),
    ([("a", "b", 1)], [("a", "z", 1)], "unknown node z"),
])
def test_validation_errors(edges, traffic, message):
    with pytest.raises(NetworkError, match=message):
        net_of(edges, traffic)


def test_symmetric_traffic_listed_twice_is_fine():
    net = net_of([("a", "b", 1)], [("a", "b", 2), ("b", "a", 2)])
    assert net.demand("b", "a") == 2.0


def test_canonical_orientation_numeric_aware():
    assert canonical_edge("10", "9") == ("9", "10")
    assert sort_nodes(["10", "2", "a", "1"]) == ["1", "2", "10", "a"]
    net = net_of([("10", "9", 1.0)])
    assert [(e.u, e.v) for e in net.edges] == [("9", "10")]


def test_unknown_format(tmp_path):
    p = write_json(tmp_path / "t.json", "abc", TRIANGLE)
    with pytest.raises(NetworkError, match="unknown network format"):
        load_network(p, "yaml")


def test_unparsable_json(tmp_path):
    p = tmp_path / "t.json"
    p.write_text("{nope")
    with pytest.raises(NetworkError, match="cannot parse"):
        load_network(p)


def test_csv_triple_with_sibling_traffic(tmp_path):
    (tmp_path / "net.csv").write_text("u,v,key_rate\na,b,10\nb,c,5\na,c,2\n")
    (tmp_path / "net.traffic.csv").write_text("a,c,1.5\n")
    net = load_network(tmp_path / "net.csv", "csv-triple")
    assert net.demand("a", "c") == 1.5 and len(net.edges) == 3


def test_csv_bad_number(tmp_path):
    (tmp_path / "net.csv").write_text("a,b,10\nb,c,fast\n")
    with pytest.raises(NetworkError, match="not a number"):
        load_network(tmp_path / "net.csv", "csv-triple")


# reference network ------------------------------------------------------

def test_reference_counts_and_connectivity():
    net = reference_network(0)
    assert (len(net.nodes), len(net.edges)) == (29, 48)
    assert is_connected(net.edge_keys, net.node_ids)


def test_reference_deterministic():
    assert reference_network(0) == reference_network(0)
    assert reference_network(0) != reference_network(1)


def test_reference_hub_has_max_degree():
    net = reference_network(0)
    degrees = sorted((net.degree(n) for n in net.node_ids), reverse=True)
    assert net.degree(REFERENCE_HUB) == degrees[0] == 8
    assert degrees[1] < degrees[0]


def test_reference_two_edge_connected():
    net = reference_network(0)
    assert is_two_edge_connected(net.edge_keys, net.node_ids)


@pytest.mark.parametrize("seed", range(100))
def test_reference_invariants_any_seed(seed):
    net = reference_network(seed)
    assert (len(net.nodes), len(net.edges)) == (29, 48)
    assert all(1.0 <= e.key_rate <= 20.0 for e in net.edges)
    assert all(node_key(e.u) < node_key(e.v) for e in net.edges)
    assert len({e.key for e in net.edges}) == 48
    demands = set(net.traffic.values())
    assert len(net.traffic) == 29 * 28 // 2 and len(demands) == 1
    # revalidation through the public constructor must accept it unchanged
    assert Network.from_dict(net.to_dict()) == net


# export -------------------------------------------------------------------

def test_dot_solid_and_dashed():
    dot = export_graph(triangle(), [("a", "b"), ("b", "c")], "dot").decode()
    assert dot.count("style=solid") == 2 and dot.count("style=dashed") == 1
    assert 'label="10"' in dot


def test_dot_empty_subset_all_dashed():
    dot = export_graph(triangle(), [], "dot").decode()
    assert dot.count("style=dashed") == 3 and "style=solid" not in dot


@pytest.mark.parametrize("fmt", ["dot", "csv", "graphml"])
def test_export_deterministic(fmt):
    net = reference_network(0)
    sub = net.edge_keys[::2]
    assert export_graph(net, sub, fmt) == export_graph(net, list(reversed(sub)), fmt)


def test_graphml_well_formed():
    root = ET.fromstring(export_graph(reference_network(0), [], "graphml"))
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    assert len(root.findall(".//g:node", ns)) == 29
    assert len(root.findall(".//g:edge", ns)) == 48


def test_export_rejects_unknown_format_and_foreign_edges():
    with pytest.raises(NetworkError, match="unknown export format"):
        export_graph(triangle(), [], "svg")
    with pytest.raises(NetworkError, match="not part of the network"):
        export_graph(triangle(), [("a", "z")], "dot")


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 9))
def test_csv_export_round_trip(tmp_path_factory, seed, n):
    net = random_network(random.Random(seed), n)
    d = tmp_path_factory.mktemp("rt")
    (d / "net.csv").write_bytes(export_graph(net, net.edge_keys[:1], "csv"))
    (d / "net.traffic.csv").write_bytes(traffic_csv(net))
    assert load_network(d / "net.csv", "csv-triple") == net
