"""Path enumeration, spanning trees and bridge detection.

Paths are tuples of node ids.  All functions are deterministic: neighbour
iteration follows the numeric-aware node order and ties are broken by the
lexicographic order of node sequences.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .network import EdgeKey, Network, canonical_edge, edge_sort_key, node_key, sort_nodes

Path = tuple[str, ...]
Adjacency = Mapping[str, tuple[str, ...]]


class GraphError(ValueError):
    pass


def path_edges(path: Path) -> list[EdgeKey]:
    return [canonical_edge(a, b) for a, b in zip(path, path[1:])]


def path_sort_key(path: Path) -> tuple:
    return (len(path), tuple(node_key(n) for n in path))


def adjacency(edges: Iterable[EdgeKey], nodes: Iterable[str] = ()) -> dict[str, tuple[str, ...]]:
    adj: dict[str, list[str]] = {n: [] for n in nodes}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    return {n: tuple(sort_nodes(vs)) for n, vs in adj.items()}


def _adj_of(graph: Network | Adjacency) -> Adjacency:
    if isinstance(graph, Network):
        return {n: graph.neighbors(n) for n in graph.node_ids}
    return graph


# paths ------------------------------------------------------------------

def enumerate_paths(net: Network | Adjacency, source: str, max_len: int) -> dict[str, list[Path]]:
    """All simple paths from ``source`` with at most ``max_len`` edges.

    Returns ``{target: paths}`` for every other node (possibly with an empty
    list), each list ordered by length and then node sequence.
    """
    adj = _adj_of(net)
    if source not in adj:
        raise GraphError(f"unknown source node {source}")
    if max_len < 1:
        raise GraphError("max_len must be positive")
    found: dict[str, list[Path]] = {n: [] for n in sort_nodes(adj) if n != source}
    stack = [source]
    on_path = {source}

    def dfs(node: str) -> None:
        for nxt in adj[node]:
            if nxt in on_path:
                continue
            stack.append(nxt)
            found[nxt].append(tuple(stack))
            if len(stack) <= max_len:
                on_path.add(nxt)
                dfs(nxt)
                on_path.discard(nxt)
            stack.pop()

    dfs(source)
    for paths in found.values():
        paths.sort(key=path_sort_key)
    return found


def _lexmin_bfs(adj: Adjacency, source: str) -> dict[str, str | None]:
    """Parent map of the hop-shortest path tree whose root-to-node paths are
    lexicographically smallest among all shortest paths."""
    parent: dict[str, str | None] = {source: None}
    level = [source]
    while level:
        nxt: list[str] = []
        rank = {}
        for r, u in enumerate(level):
            for v in adj[u]:
                if v not in parent:
                    parent[v] = u
                    rank[v] = r
                    nxt.append(v)
        nxt.sort(key=lambda v: (rank[v], node_key(v)))
        level = nxt
    return parent


def _unwind(parent: Mapping[str, str | None], target: str) -> Path:
    out = [target]
    while parent[out[-1]] is not None:
        out.append(parent[out[-1]])
    return tuple(reversed(out))


def shortest_path_tree(graph: Network | Adjacency, source: str) -> dict[str, Path]:
    """Lexicographically smallest hop-shortest path from ``source`` to every
    reachable node.  These paths are prefix-closed."""
    adj = _adj_of(graph)
    parent = _lexmin_bfs(adj, source)
    return {t: _unwind(parent, t) for t in parent if t != source}


def shortest_path(net: Network, u: str, v: str, weight: str = "hop") -> Path:
    """Minimum-weight path; ties go to the lexicographically smaller sequence."""
    if u == v:
        raise GraphError("shortest_path needs two distinct nodes")
    for n in (u, v):
        if n not in net:
            raise GraphError(f"unknown node {n}")
    if weight == "hop":
        parent = _lexmin_bfs(_adj_of(net), u)
        if v not in parent:
            raise GraphError(f"{v} unreachable from {u}")
        return _unwind(parent, v)
    if weight != "inverse_key_rate":
        raise GraphError(f"unknown weight {weight!r}")
    heap = [(0.0, (node_key(u),), (u,))]
    done = set()
    while heap:
        dist, _, path = heapq.heappop(heap)
        node = path[-1]
        if node == v:
            return path
        if node in done:
            continue
        done.add(node)
        for nxt in net.neighbors(node):
            if nxt not in done and nxt not in path:
                new = path + (nxt,)
                heapq.heappush(
                    heap,
                    (dist + 1.0 / net.key_rate(node, nxt), tuple(node_key(n) for n in new), new),
                )
    raise GraphError(f"{v} unreachable from {u}")


def prefix_subpaths(path: Path) -> list[Path]:
    """Proper prefixes of ``path`` that start at its source, shortest first."""
    return [path[:k] for k in range(2, len(path))]


@dataclass
class PathTable:
    """Bounded-length paths per (source, target) pair.

    When a pair has no path within the bound, its list holds the single
    hop-shortest path and the pair is recorded in ``fallback``.
    """

    max_len: int
    paths: dict[tuple[str, str], list[Path]] = field(default_factory=dict)
    fallback: set[tuple[str, str]] = field(default_factory=set)

    def from_source(self, source: str) -> dict[str, list[Path]]:
        return {t: ps for (s, t), ps in self.paths.items() if s == source}

    def count(self, source: str) -> int:
        return sum(len(ps) for (s, _), ps in self.paths.items() if s == source)


def path_table(net: Network, max_len: int, sources: Iterable[str] | None = None) -> PathTable:
    table = PathTable(max_len)
    for s in sources if sources is not None else net.node_ids:
        bounded = enumerate_paths(net, s, max_len)
        tree = None
        for t, paths in bounded.items():
            if not paths:
                if tree is None:
                    tree = shortest_path_tree(net, s)
                paths = [tree[t]]
                table.fallback.add((s, t))
            table.paths[(s, t)] = paths
    return table


# spanning trees and connectivity ----------------------------------------

class DisjointSet:
    def __init__(self, items: Iterable[str]):
        self.parent = {i: i for i in items}

    def find(self, a: str) -> str:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: str, b: str) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def minimum_spanning_tree(
    net: Network,
    weight: str | Mapping[EdgeKey, float] | Callable[[EdgeKey], float] = "inverse_key_rate",
) -> frozenset[EdgeKey]:
    """Kruskal MST; equal weights are taken in canonical edge order."""
    if weight == "inverse_key_rate":
        cost = {e.key: 1.0 / e.key_rate for e in net.edges}.__getitem__
    elif callable(weight):
        cost = weight
    else:
        cost = dict(weight).__getitem__
    ordered = sorted(net.edge_keys, key=lambda e: (cost(e), edge_sort_key(e)))
    dsu = DisjointSet(net.node_ids)
    tree = [e for e in ordered if dsu.union(*e)]
    return frozenset(tree)


def is_connected(edges: Iterable[EdgeKey], nodes: Iterable[str] | None = None) -> bool:
    edges = list(edges)
    node_set = set(nodes) if nodes is not None else {n for e in edges for n in e}
    if not node_set:
        return False
    dsu = DisjointSet(node_set)
    parts = len(node_set)
    for u, v in edges:
        if u not in node_set or v not in node_set:
            return False
        if dsu.union(u, v):
            parts -= 1
    return parts == 1


def components(edges: Iterable[EdgeKey], nodes: Iterable[str]) -> list[set[str]]:
    nodes = list(nodes)
    dsu = DisjointSet(nodes)
    for u, v in edges:
        dsu.union(u, v)
    groups: dict[str, set[str]] = {}
    for n in nodes:
        groups.setdefault(dsu.find(n), set()).add(n)
    return sorted(groups.values(), key=lambda g: (-len(g), min(node_key(n) for n in g)))


def find_bridges(edges: Iterable[EdgeKey], nodes: Iterable[str] | None = None) -> frozenset[EdgeKey]:
    """Edges whose removal disconnects the graph (iterative lowlink DFS)."""
    edges = [canonical_edge(*e) for e in edges]
    adj = adjacency(edges, nodes or ())
    if not adj:
        return frozenset()
    if not is_connected(edges, adj):
        raise GraphError("find_bridges needs a connected edge set")
    root = sort_nodes(adj)[0]
    disc = {root: 0}
    low = {root: 0}
    parent = {root: None}
    bridges = set()
    stack = [(root, iter(adj[root]))]
    while stack:
        node, it = stack[-1]
        for nxt in it:
            if nxt == parent[node]:
                continue  # simple graph: the tree edge back to the parent
            if nxt in disc:
                low[node] = min(low[node], disc[nxt])
            else:
                disc[nxt] = low[nxt] = len(disc)
                parent[nxt] = node
                stack.append((nxt, iter(adj[nxt])))
                break
        else:
            stack.pop()
            par = parent[node]
            if par is not None:
                low[par] = min(low[par], low[node])
                if low[node] > disc[par]:
                    bridges.add(canonical_edge(par, node))
    return frozenset(bridges)


def is_two_edge_connected(edges: Iterable[EdgeKey], nodes: Iterable[str] | None = None) -> bool:
    edges = list(edges)
    node_list = list(nodes) if nodes is not None else sorted({n for e in edges for n in e})
    if len(node_list) < 2 or not is_connected(edges, node_list):
        return False
    return not find_bridges(edges, node_list)
