import random

import pytest

from helpers import brute_force_qubo, cycle, net_of, random_two_edge_connected, triangle
from qkdplan.graphs import enumerate_paths, is_two_edge_connected, minimum_spanning_tree, path_table
from qkdplan.qubo import MilpSolver, evaluate, solve_exhaustive
from qkdplan.redundancy import (
    Redundancy,
    RedundancyError,
    RedundancyFilter,
    bridge_workaround,
    build_redundancy_qubo,
    decode_redundancy,
    find_redundancies,
    run_redundancy,
)


def test_triangle_single_circle():
    rds = find_redundancies("a", enumerate_paths(triangle(), "a", 2), 2)
    # one circle, reachable through either target
    assert {rd.edges for rd in rds} == {frozenset({("a", "b"), ("b", "c"), ("a", "c")})}
    assert [rd.target for rd in rds] == ["b", "c"]
    for rd in rds:
        assert rd.op[0] == rd.ip[-1] == "a" and rd.length == 3


def test_path_graph_has_no_circle():
    net = net_of([("a", "b", 1), ("b", "c", 1), ("c", "d", 1)])
    assert find_redundancies("a", enumerate_paths(net, "a", 3), 3) == []


def test_four_cycle_circle_length():
    rds = find_redundancies("a", enumerate_paths(cycle(4), "a", 3), 3)
    assert rds and max(rd.length for rd in rds) == 4


def test_longest_kept_and_disjoint():
    # square with a diagonal: from a to c the longest circle is the square
    net = net_of([("a", "b", 1), ("b", "c", 1), ("c", "d", 1), ("a", "d", 1), ("a", "c", 1)])
    rds = find_redundancies("a", enumerate_paths(net, "a", 3), 3)
    to_c = [rd for rd in rds if rd.target == "c"]
    assert len(to_c) == 1 and to_c[0].length == 4
    for rd in rds:
        assert rd.edges and len(rd.edges) == rd.length  # edge-disjoint legs


def triangle_qubo():
    net = triangle()
    rds = find_redundancies("a", enumerate_paths(net, "a", 2), 2)
    return net, build_redundancy_qubo(net, "a", rds, [("a", "b"), ("b", "c")])


def test_triangle_qubo_size():
    net, q = triangle_qubo()
    assert q.problem.num_variables == 2 + 3 + 9 == 14


def test_triangle_ground_states_are_consistent():
    net, q = triangle_qubo()
    _, minimizers = brute_force_qubo(q.problem)
    for bits in minimizers:
        selected, violations = decode_redundancy(q, bits)
        assert len(selected) == 1 and violations == []


def test_two_selected_circles_cost_at_least_a():
    net, q = triangle_qubo()
    a, _ = q.penalties
    best = solve_exhaustive(q.problem)
    bits = list(best.assignment)
    for var in q.rd_vars.values():
        bits[q.problem.index(var)] = 1
    assert evaluate(q.problem, tuple(bits)) >= best.energy + a - 1e-9


def test_empty_redundancy_list_rejected():
    with pytest.raises(Exception, match="no candidate"):
        build_redundancy_qubo(triangle(), "a", [], [])


def test_node_cost_formula():
    net, q = triangle_qubo()
    expected = (min(q.rd_costs.values()) / (5 * 3) ** 6) ** 0.5
    assert q.node_cost == pytest.approx(expected)


def test_bridge_workaround_example():
    # bridge 21-15 cuts {15, 18, 38} off; 35 lies in the larger part
    edges = [("15", "18"), ("18", "38"), ("15", "38"), ("15", "21"),
             ("21", "35"), ("35", "40"), ("21", "40"), ("40", "41"), ("35", "41")]
    nodes = ["15", "18", "21", "35", "38", "40", "41"]
    f = bridge_workaround(edges, [("15", "21")], nodes)
    inside = Redundancy("15", "18", ("15", "18"), ("18", "38", "15"))
    reaching = Redundancy("15", "35", ("15", "21", "35"), ("35", "40", "21", "15"))
    assert not f(inside) and f(reaching)
    outside = Redundancy("35", "40", ("35", "40"), ("40", "21", "35"))
    assert f(outside)


def test_empty_filter_is_identity():
    rd = Redundancy("a", "b", ("a", "b"), ("b", "c", "a"))
    assert RedundancyFilter()(rd) and bridge_workaround([("a", "b"), ("b", "c"), ("a", "c")], [], "abc")(rd)


def test_run_redundancy_four_cycle():
    net = cycle(4)
    sol = run_redundancy(net, net.edge_keys, MilpSolver())
    assert set(sol.edges) == set(net.edge_keys)


def test_run_redundancy_from_tree_closes_cycle():
    net = cycle(5)
    sol = run_redundancy(net, minimum_spanning_tree(net), MilpSolver())
    assert is_two_edge_connected(sol.edges, net.node_ids)


def test_tree_network_has_no_redundancy():
    net = net_of([("a", "b", 1), ("b", "c", 1), ("b", "d", 1)])
    with pytest.raises(RedundancyError, match="no redundancy exists"):
        run_redundancy(net, net.edge_keys, MilpSolver())


def test_input_must_be_spanning():
    net = cycle(4)
    with pytest.raises(Exception, match="connect every node"):
        run_redundancy(net, [("a", "b")], MilpSolver())


@pytest.mark.parametrize("seed", range(10))
def test_successful_runs_are_two_edge_connected(seed):
    rng = random.Random(seed)
    net = random_two_edge_connected(rng, rng.randint(4, 9))
    try:
        sol = run_redundancy(net, minimum_spanning_tree(net), MilpSolver(), seed, max_len=3)
    except RedundancyError:
        pytest.skip("bridge workaround exhausted")
    assert is_two_edge_connected(sol.edges, net.node_ids)
    assert set(minimum_spanning_tree(net)) <= set(sol.edges)


def test_variable_count_closed_form():
    rng = random.Random(2)
    net = random_two_edge_connected(rng, 7)
    table = path_table(net, 3)
    for n in net.node_ids:
        rds = find_redundancies(n, table.from_source(n), 3)
        q = build_redundancy_qubo(net, n, rds, net.edge_keys)
        assert q.problem.num_variables == len(rds) + len(net.nodes) + 3 * len(net.edges)
