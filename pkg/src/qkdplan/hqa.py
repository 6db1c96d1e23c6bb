"""Hybrid N:N planner: one adapted-MST QUBO per root node.

Each root's QUBO picks exactly one bounded-length path to every other node
such that the chosen paths are prefix-closed (they form a tree rooted at
the root) and cheap under the bottleneck-aware cost model.  Edges on the
chosen paths earn a discount for later roots; afterwards the per-root
selections are merged by frequency into a single spanning edge set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .costs import CostTable, DiscountState, cost_table
from .graphs import DisjointSet, Path, path_edges, path_table, prefix_subpaths
from .network import EdgeKey, Network, NetworkError, edge_label, edge_sort_key, node_key, sort_nodes
from .qubo import AnnealSchedule, QuboBuilder, QuboProblem, QuboSolver, SimulatedAnnealingSolver, SolveResult, SolverError
from .solution import PlanSolution

DEFAULT_MAX_LEN = 6
# sampler restarts per QUBO when no solver is given
DEFAULT_RESTARTS = 50


class PlanningError(RuntimeError):
    pass


class Violation(NamedTuple):
    term: str
    subject: str

    def __str__(self):
        return f"{self.term}: {self.subject}"


def path_label(path: Path) -> str:
    return "-".join(path)


@dataclass
class NnQubo:
    problem: QuboProblem
    root: str
    node_vars: dict[str, str]
    path_vars: dict[Path, str]
    paths: dict[str, list[Path]]
    costs: CostTable
    prefixes: dict[Path, list[Path]] = field(default_factory=dict)

    @property
    def penalties(self) -> tuple[float, float]:
        return self.costs.penalties


def build_nn_qubo(
    net: Network,
    root: str,
    paths: dict[str, list[Path]],
    discount: DiscountState | None = None,
    costs: CostTable | None = None,
) -> NnQubo:
    """Adapted-MST QUBO ``A * (T1 + T2 + T3) + B * sum(c_p * p)`` for one root.

    * T1 = sum_n (1 - x_n)^2 keeps every node in the solution;
    * T2 = sum_t (x_t - sum_{p -> t} p)^2 asks for exactly one path per target;
    * T3 = sum_p p * (#prefixes - sum of selected prefixes) forces a chosen
      path's prefixes (paths from the same root) to be chosen too.
    """
    if root not in net:
        raise NetworkError(f"unknown root node {root}")
    targets = [t for t in sort_nodes(paths) if t != root]
    missing = [n for n in net.node_ids if n != root and not paths.get(n)]
    if missing:
        raise PlanningError(f"node {missing[0]} is unreachable from {root} by any listed path")
    all_paths = [p for t in targets for p in paths[t]]
    if costs is None:
        costs = cost_table(net, all_paths, discount, "nn")
    a, b = costs.penalties

    node_vars = {n: f"x[{n}]" for n in net.node_ids}
    path_vars = {p: f"p[{path_label(p)}]" for p in all_paths}
    builder = QuboBuilder(list(node_vars.values()) + list(path_vars.values()))

    for n, var in node_vars.items():
        builder.square([(var, -1.0)], constant=1.0, scale=a)
    for t in targets:
        builder.square([(node_vars[t], 1.0)] + [(path_vars[p], -1.0) for p in paths[t]], scale=a)
    prefixes = {}
    for p in all_paths:
        sec = [s for s in prefix_subpaths(p) if s in path_vars]
        prefixes[p] = sec
        if sec:
            builder.linear(path_vars[p], a * len(sec))
            for s in sec:
                builder.quadratic(path_vars[p], path_vars[s], -a)
        builder.linear(path_vars[p], b * costs.path_costs[p])

    return NnQubo(builder.build(), root, node_vars, path_vars,
                  {t: list(paths[t]) for t in targets}, costs, prefixes)


def decode_nn(q: NnQubo, result: SolveResult | tuple[int, ...]) -> tuple[list[Path], list[Violation]]:
    """Selected paths plus every violated T1/T2/T3 condition."""
    bits = result.assignment if isinstance(result, SolveResult) else tuple(result)
    if len(bits) != q.problem.num_variables:
        raise ValueError("assignment length does not match the QUBO")
    val = lambda label: bits[q.problem.index(label)]
    selected = [p for p, var in q.path_vars.items() if val(var)]
    chosen = set(selected)
    violations = []
    for n, var in q.node_vars.items():
        if not val(var):
            violations.append(Violation("T1", f"node {n} not selected"))
    for t, ps in q.paths.items():
        count = sum(p in chosen for p in ps)
        if count != val(q.node_vars[t]):
            violations.append(Violation("T2", f"target {t} has {count} selected paths"))
    for p in selected:
        lost = [s for s in q.prefixes[p] if s not in chosen]
        if lost:
            violations.append(Violation("T3", f"path {path_label(p)} misses prefix {path_label(lost[0])}"))
    return selected, violations


def hop_order(net: Network, start: str) -> list[str]:
    """Nodes nearest-first by hop distance from ``start``, ties by id."""
    if start not in net:
        raise NetworkError(f"unknown start node {start}")
    dist = {start: 0}
    queue = deque([start])
    while queue:
        n = queue.popleft()
        for m in net.neighbors(n):
            if m not in dist:
                dist[m] = dist[n] + 1
                queue.append(m)
    return sorted(net.node_ids, key=lambda n: (dist[n], node_key(n)))


def filter_build(freq: dict[EdgeKey, int], net: Network) -> frozenset[EdgeKey]:
    """Merge per-root selections into one spanning edge set.

    Edges are ranked by frequency (descending), then key rate (descending),
    then canonical order, and added one by one while they join two still
    separate components, until every node is connected.
    """
    support = [e for e, c in freq.items() if c > 0]
    ranked = sorted(support, key=lambda e: (-freq[e], -net.key_rate(*e), edge_sort_key(e)))
    dsu = DisjointSet(net.node_ids)
    parts = len(net.nodes)
    chosen = []
    for e in ranked:
        if parts == 1:
            break
        if dsu.union(*e):
            chosen.append(e)
            parts -= 1
    if parts != 1:
        raise PlanningError("edge frequencies do not cover a spanning connected subgraph")
    return frozenset(chosen)


def _iteration_seeds(seed: int, count: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def run_hqa(
    net: Network,
    start: str,
    max_len: int = DEFAULT_MAX_LEN,
    solver: QuboSolver | None = None,
    seed: int = 0,
) -> PlanSolution:
    """Plan an N:N network: solve one QUBO per node, nearest to ``start``
    first, discounting edges as they get selected, then filter and build."""
    solver = solver or SimulatedAnnealingSolver(AnnealSchedule(restarts=DEFAULT_RESTARTS))
    order = hop_order(net, start)
    table = path_table(net, max_len)
    discount = DiscountState()
    iterations = []
    for k, (root, s) in enumerate(zip(order, _iteration_seeds(seed, len(order)))):
        q = build_nn_qubo(net, root, table.from_source(root), discount)
        try:
            result = solver.solve(q.problem, seed=s)
        except SolverError as exc:
            raise SolverError(f"iteration {k} (root {root}): {exc}") from exc
        selected, violations = decode_nn(q, result)
        discount.increment(e for p in selected for e in path_edges(p))
        iterations.append({
            "root": root,
            "variables": q.problem.num_variables,
            "energy": result.energy,
            "selected": [path_label(p) for p in selected],
            "violations": [str(v) for v in violations],
            "frequency": {edge_label(e): c for e, c in sorted(discount.counts.items(),
                                                               key=lambda kv: edge_sort_key(kv[0]))},
        })
    freq = discount.snapshot()
    edges = filter_build(freq, net)
    provenance = {
        "start": start,
        "max_len": max_len,
        "solver": solver.name,
        "seed": seed,
        "order": order,
        "fallback_pairs": len(table.fallback),
        "iterations": iterations,
        "edge_frequency": iterations[-1]["frequency"] if iterations else {},
    }
    return PlanSolution.create("hqa", net, edges, provenance)
