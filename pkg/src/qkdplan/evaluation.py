"""Solution metrics, traffic/failure load simulation and the circle heuristic."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from .graphs import (
    _lexmin_bfs,
    adjacency,
    find_bridges,
    is_connected,
    is_two_edge_connected,
    minimum_spanning_tree,
)
from .network import EdgeKey, Network, NetworkError, canonical_edge, edge_sort_key, node_key, sort_edges


class EvaluationError(ValueError):
    pass


class HeuristicError(ValueError):
    pass


def edge_improvement(net: Network, sol: Iterable[EdgeKey]) -> float:
    """Share of network edges left out of the solution, in percent (2 d.p.)."""
    total = len(net.edges)
    if total == 0:
        raise EvaluationError("network has no edges")
    used = len(net.check_subset(sol))
    return round(100.0 * (total - used) / total, 2)


def min_key_rate(net: Network, sol: Iterable[EdgeKey]) -> float:
    chosen = net.check_subset(sol)
    if not chosen:
        raise EvaluationError("solution has no edges")
    return min(net.key_rate(*e) for e in chosen)


# routing ----------------------------------------------------------------

def routed_flow(net: Network, sol: Iterable[EdgeKey]) -> dict[EdgeKey, float]:
    """Total demand crossing each solution edge.

    Every node pair ``u < v`` sends its demand once along the hop-shortest
    path from ``u`` to ``v`` inside the solution, ties going to the
    lexicographically smallest node sequence.
    """
    chosen = sort_edges(net.check_subset(sol))
    nodes = net.node_ids
    if not is_connected(chosen, nodes):
        raise EvaluationError("solution is not connected and spanning")
    adj = adjacency(chosen, nodes)
    flow = {e: 0.0 for e in chosen}
    by_source: dict[str, list[tuple[str, float]]] = {}
    for (u, v), d in net.traffic.items():
        by_source.setdefault(u, []).append((v, d))
    for src in sorted(by_source, key=node_key):
        parent = _lexmin_bfs(adj, src)
        sink = dict.fromkeys(parent, 0.0)
        for v, d in by_source[src]:
            sink[v] += d
        # parent map is filled in BFS order, so reversed order visits
        # children before their parents
        for node in reversed(list(parent)):
            par = parent[node]
            if par is not None and sink[node]:
                flow[canonical_edge(par, node)] += sink[node]
                sink[par] += sink[node]
    return flow


def traffic_load(net: Network, sol: Iterable[EdgeKey]) -> dict[EdgeKey, float]:
    """Per-edge load in percent of its key rate."""
    return {e: 100.0 * f / net.key_rate(*e) for e, f in routed_flow(net, sol).items()}


def failure_load(net: Network, sol: Iterable[EdgeKey]) -> dict[EdgeKey, float]:
    """Worst load of each edge over the intact solution and every single
    failure of another edge."""
    chosen = net.check_subset(sol)
    if len(chosen) < 2 or not is_two_edge_connected(chosen, net.node_ids):
        raise EvaluationError("failure analysis needs a 2-edge-connected solution")
    worst = traffic_load(net, chosen)
    for failed in sort_edges(chosen):
        loads = traffic_load(net, chosen - {failed})
        for e, value in loads.items():
            if value > worst[e]:
                worst[e] = value
    return worst


@dataclass
class EvaluationReport:
    edge_improvement: float
    min_key_rate: float
    load: dict[EdgeKey, float]
    failure_load: dict[EdgeKey, float] | None
    max_load: float

    def to_dict(self) -> dict:
        rows = []
        for e in sort_edges(self.load):
            row = {"u": e[0], "v": e[1], "load_pct": round(self.load[e], 2)}
            if self.failure_load is not None:
                row["worst_failure_load_pct"] = round(self.failure_load[e], 2)
            rows.append(row)
        return {
            "edge_improvement_pct": self.edge_improvement,
            "min_key_rate_kbps": self.min_key_rate,
            "max_load_pct": round(self.max_load, 2),
            "edges": rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self, net: Network) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["u", "v", "key_rate", "load_pct", "worst_failure_load_pct"])
        for e in sort_edges(self.load):
            fail = "" if self.failure_load is None else f"{self.failure_load[e]:.2f}"
            writer.writerow([e[0], e[1], f"{net.key_rate(*e):g}", f"{self.load[e]:.2f}", fail])
        return buf.getvalue()


def evaluate_solution(net: Network, sol: Iterable[EdgeKey], failures: bool = False) -> EvaluationReport:
    chosen = net.check_subset(sol)
    load = traffic_load(net, chosen)
    fail = failure_load(net, chosen) if failures else None
    peak = max((fail or load).values(), default=0.0)
    return EvaluationReport(edge_improvement(net, chosen), min_key_rate(net, chosen), load, fail, peak)


# circle heuristic -------------------------------------------------------

def _tree_path(tree_adj: Mapping[str, tuple[str, ...]], a: str, b: str) -> list[str]:
    parent = {a: None}
    stack = [a]
    while stack:
        n = stack.pop()
        if n == b:
            break
        for m in tree_adj[n]:
            if m not in parent:
                parent[m] = n
                stack.append(m)
    out = [b]
    while parent[out[-1]] is not None:
        out.append(parent[out[-1]])
    return out[::-1]


def circle_heuristic(net: Network, start: str | None = None):
    """Close the biggest circles around the satellite nodes of the MST.

    Satellites are the MST leaves.  Each uncovered leaf gets the chord whose
    fundamental cycle through it is longest, then has the largest total key
    rate.  Tree edges that are still bridges afterwards receive a covering
    chord by the same rule, so a 2-edge-connected input yields a
    2-edge-connected plan.
    """
    from .solution import PlanSolution

    if start is not None and start not in net:
        raise NetworkError(f"unknown start node {start}")
    mst = minimum_spanning_tree(net, "inverse_key_rate")
    tree_adj = adjacency(mst, net.node_ids)
    chords = [e for e in net.edge_keys if e not in mst]
    cycles = {}
    for c in chords:
        nodes = _tree_path(tree_adj, *c)
        edges = [canonical_edge(a, b) for a, b in zip(nodes, nodes[1:])] + [c]
        cycles[c] = (frozenset(nodes), frozenset(edges))

    def rank(c):
        edges = cycles[c][1]
        return (-len(edges), -sum(net.key_rate(*e) for e in edges), edge_sort_key(c))

    leaves = [n for n in net.node_ids if len(tree_adj[n]) == 1]
    chosen: list[EdgeKey] = []
    covered: set[str] = set()
    for leaf in leaves:
        if leaf in covered:
            continue
        options = [c for c in chords if leaf in cycles[c][0]]
        if not options:
            raise HeuristicError(f"satellite node {leaf} admits no covering circle")
        best = min(options, key=rank)
        chosen.append(best)
        covered |= cycles[best][0]

    repairs: list[EdgeKey] = []
    while True:
        current = set(mst) | set(chosen)
        bridges = sort_edges(find_bridges(current, net.node_ids))
        if not bridges:
            break
        bridge = bridges[0]
        options = [c for c in chords if c not in current and bridge in cycles[c][1]]
        if not options:
            raise HeuristicError(f"bridge {bridge[0]}-{bridge[1]} cannot be closed into a circle")
        best = min(options, key=rank)
        chosen.append(best)
        repairs.append(best)

    provenance = {
        "start": start,
        "mst": [list(e) for e in sort_edges(mst)],
        "satellites": leaves,
        "circles": [
            {"chord": list(c), "cycle_edges": len(cycles[c][1])} for c in chosen
        ],
        "bridge_repairs": [list(c) for c in repairs],
    }
    return PlanSolution.create("circle-heuristic", net, set(mst) | set(chosen), provenance)
