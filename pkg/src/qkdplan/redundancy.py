"""Circle-redundancy planner on top of an N:N solution.

For each node a QUBO chooses one closed circle through it, built from an
outgoing path and an edge-disjoint returning path, preferring circles that
reuse edges already in the working network.  Circles are added until every
node lies on one; remaining bridges trigger a constrained recomputation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .costs import classify_paths, edge_costs, final_path_cost, path_cost_basic, penalty_factors
from .graphs import Path, components, find_bridges, is_connected, path_edges, path_table
from .hqa import DEFAULT_MAX_LEN, DEFAULT_RESTARTS, PlanningError, Violation, path_label
from .network import EdgeKey, Network, NetworkError, edge_label, node_key, sort_edges, sort_nodes
from .qubo import AnnealSchedule, QuboBuilder, QuboProblem, QuboSolver, SimulatedAnnealingSolver, SolveResult, SolverError
from .solution import PlanSolution


class RedundancyError(PlanningError):
    """No bridge-free circle redundancy could be established."""

    def __init__(self, message: str, bridges: Sequence[EdgeKey] = ()):
        self.bridges = list(bridges)
        if self.bridges:
            message += ": bridges " + ", ".join(edge_label(b) for b in self.bridges)
        super().__init__(message)


@dataclass(frozen=True)
class Redundancy:
    node: str
    target: str
    op: Path  # node -> target
    ip: Path  # target -> node

    @property
    def edges(self) -> frozenset[EdgeKey]:
        return frozenset(path_edges(self.op)) | frozenset(path_edges(self.ip))

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(self.op) | frozenset(self.ip)

    @property
    def length(self) -> int:
        return len(self.op) + len(self.ip) - 2

    def describe(self) -> str:
        return f"{path_label(self.op)} | {path_label(self.ip)}"


def find_redundancies(n: str, paths: dict[str, list[Path]], max_len: int = DEFAULT_MAX_LEN) -> list[Redundancy]:
    """Longest circle through ``n`` for every target that has one.

    ``paths`` maps targets to paths from ``n``.  The outgoing path and the
    (reversed) returning path must both respect ``max_len`` and share no
    edge.  Among equally long circles the first in path order wins.
    """
    out = []
    for t in sort_nodes(paths):
        if t == n:
            continue
        bounded = [p for p in paths[t] if len(p) - 1 <= max_len]
        sets = [frozenset(path_edges(p)) for p in bounded]
        best = None
        best_len = 0
        for i, op in enumerate(bounded):
            for j, back in enumerate(bounded):
                total = len(op) + len(back) - 2
                if i == j or total <= best_len or not sets[i].isdisjoint(sets[j]):
                    continue
                best, best_len = (op, back), total
        if best is not None:
            out.append(Redundancy(n, t, best[0], tuple(reversed(best[1]))))
    return out


@dataclass
class RedundancyQubo:
    problem: QuboProblem
    node: str
    rds: list[Redundancy]
    rd_vars: dict[str, str]
    r_vars: dict[str, str]
    y_vars: dict[EdgeKey, str]
    x_vars: dict[EdgeKey, tuple[str, str]]
    input_edges: frozenset[EdgeKey]
    rd_costs: dict[str, float]
    node_cost: float
    max_cost: float
    penalties: tuple[float, float]


def build_redundancy_qubo(
    net: Network,
    n: str,
    rds: list[Redundancy],
    input_edges: Iterable[EdgeKey],
) -> RedundancyQubo:
    """Circle-redundancy QUBO ``A * (T1..T5) + B * (C1 + C2 + C3)``.

    T1/T4 tie a chosen circle to its node variables ``r`` and undirected
    edge variables ``y``; T2 links each ``y`` to exactly one directed ``x``;
    T3 selects exactly one circle; T5 pins the input network's edges.  The
    cost side charges edge costs on directed edges, classified round-trip
    path costs per circle and a small per-node cost.
    """
    if not rds:
        raise PlanningError(f"node {n} has no candidate redundancy")
    inputs = net.check_subset(input_edges)
    ecost = edge_costs(net)

    legs = {}
    for rd in rds:
        legs[(rd.target, "op")] = rd.op
        legs[(rd.target, "ip")] = rd.ip
    basic = {k: path_cost_basic(p, net, ecost) for k, p in legs.items()}
    classes = classify_paths(basic)
    final = {k: final_path_cost(basic[k], classes[k], len(legs[k]) - 1) for k in legs}
    rd_cost = {rd.target: final[(rd.target, "op")] + final[(rd.target, "ip")] for rd in rds}
    node_cost = math.sqrt(min(rd_cost.values()) / (5 * len(net.nodes)) ** 6)
    # Largest cost a single decision can save: a whole circle including its
    # edges and nodes, or dropping one pinned input edge.
    max_cost = max(
        max(rd_cost[rd.target] + sum(ecost[e] for e in rd.edges) + len(rd.nodes) * node_cost for rd in rds),
        max((ecost[e] for e in inputs), default=0.0),
    )
    a, b = penalty_factors(max_cost, "redundancy")

    rd_vars = {rd.target: f"rd[{rd.target}]" for rd in rds}
    r_vars = {m: f"r[{m}]" for m in net.node_ids}
    y_vars = {e: f"y[{edge_label(e)}]" for e in net.edge_keys}
    x_vars = {(u, v): (f"x[{u}>{v}]", f"x[{v}>{u}]") for u, v in net.edge_keys}
    labels = list(rd_vars.values()) + list(r_vars.values()) + list(y_vars.values())
    labels += [lab for pair in x_vars.values() for lab in pair]
    builder = QuboBuilder(labels)

    for rd in rds:
        var = rd_vars[rd.target]
        builder.linear(var, a * len(rd.nodes))                        # T1
        for m in sort_nodes(rd.nodes):
            builder.quadratic(var, r_vars[m], -a)
        builder.linear(var, a * len(rd.edges))                        # T4
        for e in sort_edges(rd.edges):
            builder.quadratic(var, y_vars[e], -a)
        builder.linear(var, b * rd_cost[rd.target])                   # C2
    for e, y in y_vars.items():
        fwd, bwd = x_vars[e]
        builder.square([(y, 1.0), (fwd, -1.0), (bwd, -1.0)], scale=a)  # T2
        builder.linear(fwd, b * ecost[e])                             # C1
        builder.linear(bwd, b * ecost[e])
    builder.square([(v, -1.0) for v in rd_vars.values()], constant=1.0, scale=a)  # T3
    for e in sort_edges(inputs):
        builder.square([(x_vars[e][0], -1.0)], constant=1.0, scale=a)  # T5
    for var in r_vars.values():
        builder.linear(var, b * node_cost)                            # C3

    return RedundancyQubo(builder.build(), n, list(rds), rd_vars, r_vars, y_vars, x_vars,
                          inputs, rd_cost, node_cost, max_cost, (a, b))


def decode_redundancy(q: RedundancyQubo, result: SolveResult | tuple[int, ...]):
    """Selected circles and every inconsistency among rd/r/y/x variables."""
    bits = result.assignment if isinstance(result, SolveResult) else tuple(result)
    if len(bits) != q.problem.num_variables:
        raise ValueError("assignment length does not match the QUBO")
    val = lambda label: bits[q.problem.index(label)]
    selected = [rd for rd in q.rds if val(q.rd_vars[rd.target])]
    violations = []
    if len(selected) != 1:
        violations.append(Violation("T3", f"{len(selected)} redundancies selected"))
    want_nodes = frozenset().union(*(rd.nodes for rd in selected))
    want_edges = frozenset().union(*(rd.edges for rd in selected)) | q.input_edges
    for m, var in q.r_vars.items():
        if val(var) != (m in want_nodes):
            violations.append(Violation("T1", f"r[{m}]={val(var)}"))
    for e, y in q.y_vars.items():
        fwd, bwd = q.x_vars[e]
        if val(y) != (e in want_edges):
            violations.append(Violation("T4", f"y[{edge_label(e)}]={val(y)}"))
        if val(fwd) + val(bwd) != val(y):
            violations.append(Violation("T2", f"edge {edge_label(e)} direction count {val(fwd) + val(bwd)}"))
    for e in sort_edges(q.input_edges):
        if not val(q.x_vars[e][0]):
            violations.append(Violation("T5", f"input edge {edge_label(e)} dropped"))
    return selected, violations


@dataclass
class RedundancyFilter:
    """Bridge workaround: nodes cut off behind a bridge may only use circles
    reaching into the larger side."""

    constraints: list[tuple[frozenset[str], frozenset[str]]] = field(default_factory=list)

    def __call__(self, rd: Redundancy) -> bool:
        for small, large in self.constraints:
            if rd.node in small and rd.nodes.isdisjoint(large):
                return False
        return True

    def extend(self, other: "RedundancyFilter") -> None:
        for c in other.constraints:
            if c not in self.constraints:
                self.constraints.append(c)


def bridge_workaround(
    edges: Iterable[EdgeKey],
    bridges: Iterable[EdgeKey],
    nodes: Iterable[str],
) -> RedundancyFilter:
    edges = set(edges)
    nodes = list(nodes)
    out = RedundancyFilter()
    for bridge in sort_edges(bridges):
        parts = components(edges - {bridge}, nodes)
        large, small = parts[0], set().union(*parts[1:])
        out.constraints.append((frozenset(small), frozenset(large)))
    return out


def _seeds(seed: int, rounds: int, count: int) -> list[list[int]]:
    return [
        [int(s.generate_state(1)[0]) for s in r.spawn(count)]
        for r in np.random.SeedSequence(seed).spawn(rounds)
    ]


def run_redundancy(
    net: Network,
    input_edges: Iterable[EdgeKey],
    solver: QuboSolver | None = None,
    seed: int = 0,
    max_rounds: int = 10,
    max_len: int = DEFAULT_MAX_LEN,
) -> PlanSolution:
    """Extend a connected spanning edge set until it is bridge-free.

    Nodes are visited in ascending order of their number of candidate
    circles; a node already on a chosen circle is skipped.  After each full
    pass, any bridge restarts the pass from the input network with the
    workaround constraints added, at most ``max_rounds`` passes in total.
    """
    solver = solver or SimulatedAnnealingSolver(AnnealSchedule(restarts=DEFAULT_RESTARTS))
    base = net.check_subset(input_edges)
    if not is_connected(base, net.node_ids):
        raise NetworkError("input network must connect every node")
    table = path_table(net, max_len)
    candidates = {m: find_redundancies(m, table.from_source(m), max_len) for m in net.node_ids}
    if not any(candidates.values()):
        raise RedundancyError("no redundancy exists in this network")
    order = sorted(net.node_ids, key=lambda m: (len(candidates[m]), node_key(m)))
    seeds = _seeds(seed, max_rounds, len(order))
    constraint = RedundancyFilter()
    rounds = []
    for rnd in range(max_rounds):
        working = set(base)
        covered: set[str] = set()
        steps = []
        for m, s in zip(order, seeds[rnd]):
            if m in covered:
                continue
            rds = [rd for rd in candidates[m] if constraint(rd)]
            if not rds:
                steps.append({"node": m, "skipped": "no admissible redundancy"})
                continue
            q = build_redundancy_qubo(net, m, rds, working)
            try:
                result = solver.solve(q.problem, seed=s)
            except SolverError as exc:
                raise SolverError(f"round {rnd} node {m}: {exc}") from exc
            selected, violations = decode_redundancy(q, result)
            for rd in selected:
                working |= rd.edges
                covered |= rd.nodes
            steps.append({
                "node": m,
                "variables": q.problem.num_variables,
                "energy": result.energy,
                "selected": [rd.describe() for rd in selected],
                "violations": [str(v) for v in violations],
            })
        bridges = sort_edges(find_bridges(working, net.node_ids))
        rounds.append({"round": rnd, "steps": steps, "bridges": [edge_label(b) for b in bridges]})
        if not bridges:
            provenance = {
                "max_len": max_len,
                "solver": solver.name,
                "seed": seed,
                "order": order,
                "candidates": {m: len(candidates[m]) for m in order},
                "input_edges": [edge_label(e) for e in sort_edges(base)],
                "rounds": rounds,
            }
            return PlanSolution.create("hqa-redundancy", net, working, provenance)
        constraint.extend(bridge_workaround(working, bridges, net.node_ids))
    raise RedundancyError(f"bridges remain after {max_rounds} rounds", bridges)
