"""Small graph builders and brute-force oracles shared by the tests.

The oracles deliberately avoid the package's own graph code so they can
serve as independent references.
"""

from __future__ import annotations

import itertools
import random

import networkx as nx
import numpy as np

from qkdplan.network import Network, node_key


def net_of(edges, traffic=(), nodes=None) -> Network:
    return Network.from_records(nodes, [(u, v, r) for u, v, r in edges], traffic)


def triangle(rates=(10.0, 5.0, 2.0), traffic=()) -> Network:
    ab, bc, ac = rates
    return net_of([("a", "b", ab), ("b", "c", bc), ("a", "c", ac)], traffic)


def cycle(n: int, rate: float = 10.0, traffic=()) -> Network:
    ids = [chr(ord("a") + i) for i in range(n)]
    return net_of([(ids[i], ids[(i + 1) % n], rate) for i in range(n)], traffic)


def uniform_traffic(ids, demand=1.0):
    ids = list(ids)
    return [(ids[i], ids[j], demand) for i in range(len(ids)) for j in range(i + 1, len(ids))]


def random_connected_edges(rng: random.Random, n: int, extra_p: float = 0.3):
    """Random spanning tree plus independent extra edges."""
    ids = [str(i) for i in range(n)]
    edges = set()
    order = ids[:]
    rng.shuffle(order)
    for k in range(1, n):
        u, v = order[k], order[rng.randrange(k)]
        edges.add(tuple(sorted((u, v), key=node_key)))
    for u, v in itertools.combinations(ids, 2):
        if rng.random() < extra_p:
            edges.add((u, v) if node_key(u) < node_key(v) else (v, u))
    return ids, sorted(edges, key=lambda e: (node_key(e[0]), node_key(e[1])))


def random_network(rng: random.Random, n: int, extra_p: float = 0.3, demand_p: float = 0.7) -> Network:
    ids, edges = random_connected_edges(rng, n, extra_p)
    rates = [round(rng.uniform(1.0, 20.0), 2) for _ in edges]
    traffic = [(u, v, round(rng.uniform(0.0, 2.0), 3)) for u, v in itertools.combinations(ids, 2)
               if rng.random() < demand_p]
    return Network.from_records(ids, [(u, v, r) for (u, v), r in zip(edges, rates)], traffic)


def random_two_edge_connected(rng: random.Random, n: int, extra_p: float = 0.25) -> Network:
    """Hamiltonian cycle in random order plus random chords."""
    ids = [str(i) for i in range(n)]
    order = ids[:]
    rng.shuffle(order)
    edges = {tuple(sorted((order[k], order[(k + 1) % n]), key=node_key)) for k in range(n)}
    for u, v in itertools.combinations(ids, 2):
        if rng.random() < extra_p:
            edges.add(tuple(sorted((u, v), key=node_key)))
    return Network.from_records(ids, [(u, v, round(rng.uniform(1.0, 20.0), 2)) for u, v in sorted(edges)])


# oracles ----------------------------------------------------------------

def to_nx(edges, nodes=()) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(nodes)
    g.add_edges_from(edges)
    return g


def bridges_by_removal(edges, nodes):
    out = set()
    for e in edges:
        rest = [f for f in edges if f != e]
        if not nx.is_connected(to_nx(rest, nodes)):
            out.add(e)
    return out


def spanning_trees(net: Network):
    nodes = net.node_ids
    for combo in itertools.combinations(net.edge_keys, len(nodes) - 1):
        if nx.is_connected(to_nx(combo, nodes)):
            yield combo


def simple_paths_by_permutation(net: Network, source: str, max_len: int):
    """Every simple path from ``source`` with at most ``max_len`` edges,
    generated from ordered node tuples."""
    others = [n for n in net.node_ids if n != source]
    out = set()
    for k in range(1, max_len + 1):
        for tail in itertools.permutations(others, k):
            path = (source,) + tail
            if all(net.has_edge(a, b) for a, b in zip(path, path[1:])):
                out.add(path)
    return out


def lexmin_shortest_path(edges, nodes, u, v):
    g = to_nx(edges, nodes)
    paths = list(nx.all_shortest_paths(g, u, v))
    return tuple(min(paths, key=lambda p: [node_key(n) for n in p]))


def brute_force_qubo(problem):
    """Minimum energy and all minimizers by enumerating every bit vector."""
    from qkdplan.qubo import evaluate

    n = problem.num_variables
    energies = {}
    for bits in itertools.product((0, 1), repeat=n):
        energies[bits] = evaluate(problem, bits)
    best = min(energies.values())
    return best, sorted(b for b, e in energies.items() if abs(e - best) <= 1e-9 * max(1.0, abs(best)))


def random_qubo_matrix(rng: np.random.Generator, n: int, density: float = 0.5, scale: float = 10.0):
    q = np.triu(rng.uniform(-scale, scale, size=(n, n)))
    mask = np.triu(rng.random((n, n)) < density, 1) | np.eye(n, dtype=bool)
    return np.where(mask, q, 0.0)
