"""Edge and path cost arithmetic for the adapted-MST QUBOs.

Edge costs grow with the inverse square of the key rate and shrink with a
discount earned by edges chosen in earlier iterations.  Path costs punish
bottlenecks (a later edge slower than the first one), and a quartile-based
classification then sharpens the spread between cheap and expensive paths.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Iterable, Mapping

from .graphs import Path, path_edges
from .network import EdgeKey, Network, canonical_edge

DISCOUNT_BASE = 0.9
PENALTY_B = 0.5


class PathClass(str, Enum):
    WORST = "Worst"
    WORSE = "Worse"
    GOOD = "Good"
    EXCELLENT = "Excellent"


# divisor per length unit
CLASS_DIVISOR = {
    PathClass.WORST: 0.25,
    PathClass.WORSE: 0.5,
    PathClass.GOOD: 2.0,
    PathClass.EXCELLENT: 4.0,
}


def discount_factor(q: int) -> float:
    if q < 0:
        raise ValueError("selection count must be nonnegative")
    return 1.0 - DISCOUNT_BASE**q


def edge_cost(key_rate: float, q: int, max_degree: int, n_nodes: int) -> float:
    if not key_rate > 0:
        raise ValueError(f"nonpositive key rate {key_rate}")
    return (1.0 - discount_factor(q)) * max_degree * n_nodes * (1.0 / key_rate) ** 2


@dataclass
class DiscountState:
    """Per-edge selection counters; counts only ever increase."""

    counts: dict[EdgeKey, int] = field(default_factory=dict)

    def __getitem__(self, edge: EdgeKey) -> int:
        return self.counts.get(canonical_edge(*edge), 0)

    def increment(self, edges: Iterable[EdgeKey]) -> None:
        for e in set(canonical_edge(*e) for e in edges):
            self.counts[e] = self.counts.get(e, 0) + 1

    def snapshot(self) -> dict[EdgeKey, int]:
        return dict(self.counts)


def edge_costs(net: Network, discount: DiscountState | None = None) -> dict[EdgeKey, float]:
    discount = discount or DiscountState()
    deg, n = net.max_degree, len(net.nodes)
    return {e.key: edge_cost(e.key_rate, discount[e.key], deg, n) for e in net.edges}


def has_bottleneck(path: Path, net: Network) -> bool:
    """True when some edge after the first is strictly slower than the first."""
    rates = [net.key_rate(a, b) for a, b in zip(path, path[1:])]
    return any(r < rates[0] for r in rates[1:])


def path_cost_basic(path: Path, net: Network, costs: Mapping[EdgeKey, float]) -> float:
    edges = path_edges(path)
    length = len(edges)
    if has_bottleneck(path, net):
        return length * max(costs[e] for e in edges)
    return length * costs[edges[0]]


def _quartiles(values: list[float]) -> tuple[float, float, float]:
    ordered = sorted(values)
    med = statistics.median(ordered)
    half = len(ordered) // 2
    lower, upper = ordered[:half], ordered[len(ordered) - half:]
    q1 = statistics.median(lower) if lower else med
    q3 = statistics.median(upper) if upper else med
    return q1, med, q3


def classify_paths(basic: Mapping[Hashable, float]) -> dict[Hashable, PathClass]:
    """Two-level median split into four classes; boundary values fall into
    the better class."""
    if not basic:
        raise ValueError("classify_paths needs at least one path")
    q1, med, q3 = _quartiles(list(basic.values()))
    out = {}
    for key, c in basic.items():
        if c <= q1:
            out[key] = PathClass.EXCELLENT
        elif c <= med:
            out[key] = PathClass.GOOD
        elif c <= q3:
            out[key] = PathClass.WORSE
        else:
            out[key] = PathClass.WORST
    return out


def final_path_cost(basic: float, cls: PathClass, length: int) -> float:
    if length < 1:
        raise ValueError("path length must be at least 1")
    return basic / (CLASS_DIVISOR[PathClass(cls)] * length)


def penalty_factors(max_cost: float, mode: str = "nn") -> tuple[float, float]:
    """Return ``(A, B)`` with ``B = 0.5`` and ``A = B * ceil(2 * max_cost)``,
    plus one in ``nn`` mode."""
    if not max_cost > 0:
        raise ValueError("max_cost must be positive")
    a = PENALTY_B * math.ceil(2 * max_cost)
    if mode == "nn":
        a += 1
    elif mode != "redundancy":
        raise ValueError(f"unknown penalty mode {mode!r}")
    return a, PENALTY_B


@dataclass
class CostTable:
    edge_costs: dict[EdgeKey, float]
    basic: dict[Path, float]
    classes: dict[Path, PathClass]
    path_costs: dict[Path, float]
    max_cost: float
    penalties: tuple[float, float]


def cost_table(
    net: Network,
    paths: Iterable[Path],
    discount: DiscountState | None = None,
    mode: str = "nn",
) -> CostTable:
    """Edge costs, classified final path costs and penalty factors for one
    QUBO instance."""
    costs = edge_costs(net, discount)
    paths = list(dict.fromkeys(paths))
    basic = {p: path_cost_basic(p, net, costs) for p in paths}
    classes = classify_paths(basic)
    final = {p: final_path_cost(basic[p], classes[p], len(p) - 1) for p in paths}
    max_cost = max(final.values())
    return CostTable(costs, basic, classes, final, max_cost, penalty_factors(max_cost, mode))
