"""Classical simulated-annealing baseline working directly on edge subsets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .evaluation import routed_flow
from .graphs import is_connected, is_two_edge_connected
from .network import EdgeKey, Network, NetworkError, sort_edges
from .qubo import cooling_steps
from .solution import PlanSolution

MAX_NEIGHBOR_ATTEMPTS = 2000


@dataclass(frozen=True)
class SaConfig:
    t_start: float = 1000.0
    t_end: float = 1e-4
    alpha: float = 0.9
    beta: float = 0.04
    qkd_weight: float = 100.0
    redundancy_mode: bool = False
    seed: int = 0
    restarts: int = 20

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 < self.t_end < self.t_start:
            raise ValueError("need 0 < t_end < t_start")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")

    @property
    def steps(self) -> int:
        return cooling_steps(self.t_start, self.t_end, self.alpha)


def sa_energy(candidate, net: Network, qkd_weight: float = 100.0) -> float:
    """``r + qkd_weight * |candidate|`` where ``r`` sums demand over key rate
    along every pair's hop-shortest route."""
    chosen = net.check_subset(candidate)
    flow = routed_flow(net, chosen)
    r = sum(f / net.key_rate(*e) for e, f in flow.items())
    return r + qkd_weight * len(chosen)


# compiled kernels over edge masks -----------------------------------------
#
# Nodes are indexed in canonical order and adjacency is scanned in
# ascending index order, so plain FIFO breadth-first search already yields
# the lexicographically smallest hop-shortest paths.

@njit(cache=True)
def _adjacency(mask, eu, ev, n):
    adj = -np.ones((n, n), dtype=np.int64)
    for k in range(mask.shape[0]):
        if mask[k]:
            adj[eu[k], ev[k]] = k
            adj[ev[k], eu[k]] = k
    return adj


@njit(cache=True)
def _reached(adj, n, skip):
    seen = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    seen[0] = True
    queue[0] = 0
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        for v in range(n):
            k = adj[u, v]
            if k >= 0 and k != skip and not seen[v]:
                seen[v] = True
                queue[tail] = v
                tail += 1
    return tail


@njit(cache=True)
def _mask_feasible(mask, eu, ev, n, redundant):
    adj = _adjacency(mask, eu, ev, n)
    if _reached(adj, n, -1) != n:
        return False
    if redundant:
        for k in range(mask.shape[0]):
            if mask[k] and _reached(adj, n, k) != n:
                return False
    return True


@njit(cache=True)
def _mask_routing_sum(mask, eu, ev, inv_rate, demand, n):
    adj = _adjacency(mask, eu, ev, n)
    total = 0.0
    weight = np.zeros(n)
    seen = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        seen[:] = False
        seen[s] = True
        weight[s] = 0.0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for v in range(n):
                k = adj[u, v]
                if k >= 0 and not seen[v]:
                    seen[v] = True
                    weight[v] = weight[u] + inv_rate[k]
                    queue[tail] = v
                    tail += 1
        for v in range(s + 1, n):
            total += demand[s, v] * weight[v]
    return total


class _MaskModel:
    """Array form of a network for the annealing loop."""

    def __init__(self, net: Network):
        self.net = net
        self.edges = net.edge_keys
        index = {node: i for i, node in enumerate(net.node_ids)}
        self.n = len(index)
        self.eu = np.array([index[u] for u, _ in self.edges], dtype=np.int64)
        self.ev = np.array([index[v] for _, v in self.edges], dtype=np.int64)
        self.inv_rate = np.array([1.0 / net.key_rate(*e) for e in self.edges])
        self.demand = np.zeros((self.n, self.n))
        for (u, v), d in net.traffic.items():
            a, b = sorted((index[u], index[v]))
            self.demand[a, b] = d

    def mask(self, edges) -> np.ndarray:
        chosen = set(edges)
        return np.array([e in chosen for e in self.edges], dtype=np.bool_)

    def edge_set(self, mask) -> frozenset[EdgeKey]:
        return frozenset(e for e, m in zip(self.edges, mask) if m)

    def feasible(self, mask, redundant: bool) -> bool:
        if redundant and mask.sum() < 2:
            return False
        return bool(_mask_feasible(mask, self.eu, self.ev, self.n, redundant))

    def energy(self, mask, qkd_weight: float) -> float:
        r = _mask_routing_sum(mask, self.eu, self.ev, self.inv_rate, self.demand, self.n)
        return float(r) + qkd_weight * int(mask.sum())

    def neighbor(self, mask, rng, redundant: bool, max_attempts: int = MAX_NEIGHBOR_ATTEMPTS):
        m = mask.shape[0]
        if m < 2:
            return None
        for _ in range(max_attempts):
            size = min(m, 1 + int(rng.geometric(0.5)))
            out = mask.copy()
            out[rng.choice(m, size=size, replace=False)] ^= True
            if out.any() and self.feasible(out, redundant):
                return out
        return None


def _feasible(edges, net: Network, redundancy_mode: bool) -> bool:
    if redundancy_mode:
        return is_two_edge_connected(edges, net.node_ids)
    return is_connected(edges, net.node_ids)


def sa_neighbor(candidate, net: Network, rng: np.random.Generator, redundancy_mode: bool = False,
                max_attempts: int = MAX_NEIGHBOR_ATTEMPTS):
    """Toggle a random subset of at least two network edges.

    The subset size is ``1 + k`` with ``k ~ Geometric(1/2)``, so mostly 2 or 3.  A
    fresh subset is drawn until the result is connected (2-edge-connected in
    redundancy mode).  Returns ``None`` when no attempt succeeds.
    """
    model = _MaskModel(net)
    out = model.neighbor(model.mask(net.check_subset(candidate)), rng, redundancy_mode, max_attempts)
    return None if out is None else model.edge_set(out)


def sa_accept(e: float, e_new: float, w: int, t: float, beta: float) -> float:
    """``min(1, exp((e - e_new + beta * w) / t))``."""
    if t <= 0:
        raise ValueError("temperature must be positive")
    x = (e - e_new + beta * w) / t
    return 1.0 if x >= 0 else math.exp(x)


def _anneal_once(model: _MaskModel, config: SaConfig, rng: np.random.Generator):
    current = np.ones(len(model.edges), dtype=np.bool_)
    energy = model.energy(current, config.qkd_weight)
    best, best_energy = current, energy
    trace = [energy]
    w = 0
    t = config.t_start
    while t > config.t_end:
        cand = model.neighbor(current, rng, config.redundancy_mode)
        if cand is None:
            w += 1
        else:
            e_new = model.energy(cand, config.qkd_weight)
            if rng.random() < sa_accept(energy, e_new, w, t, config.beta):
                current, energy, w = cand, e_new, 0
                if energy < best_energy:
                    best, best_energy = current, energy
            else:
                w += 1
        trace.append(best_energy)
        t *= config.alpha
    return model.edge_set(best), best_energy, trace


def run_sa(net: Network, config: SaConfig | None = None) -> PlanSolution:
    """Best candidate over independent annealing restarts from the full
    edge set, one proposal per temperature level."""
    config = config or SaConfig()
    if not _feasible(net.edge_keys, net, config.redundancy_mode):
        kind = "2-edge-connected" if config.redundancy_mode else "connected"
        raise NetworkError(f"network is not {kind}, no feasible candidate exists")
    model = _MaskModel(net)
    runs = []
    for child in np.random.SeedSequence(config.seed).spawn(config.restarts):
        runs.append(_anneal_once(model, config, np.random.default_rng(child)))
    k = min(range(len(runs)), key=lambda i: (runs[i][1], i))
    best, energy, _ = runs[k]
    provenance = {
        "seed": config.seed,
        "restarts": config.restarts,
        "redundancy_mode": config.redundancy_mode,
        "temperature_levels": config.steps,
        "best_restart": k,
        "energy": energy,
        "restart_energies": [r[1] for r in runs],
    }
    method = "sa-baseline-redundant" if config.redundancy_mode else "sa-baseline"
    return PlanSolution.create(method, net, sort_edges(best), provenance)


def best_of_runs(net: Network, runs: int, config: SaConfig | None = None) -> tuple[PlanSolution, list[PlanSolution]]:
    """Run ``runs`` seeded baselines (seeds spawned from ``config.seed``)
    and return the one with the fewest edges, then lowest energy."""
    config = config or SaConfig()
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(config.seed).spawn(runs)]
    sols = []
    for s in seeds:
        cfg = SaConfig(**{**config.__dict__, "seed": s})
        sols.append(run_sa(net, cfg))
    best = min(sols, key=lambda s: (len(s.edges), s.provenance["energy"]))
    return best, sols
