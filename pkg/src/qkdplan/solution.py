"""Plan solutions shared by every planner, with their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Iterable

from .graphs import is_connected
from .network import EdgeKey, Network, NetworkError, sort_edges


@dataclass(frozen=True)
class PlanSolution:
    method: str
    network: Network
    edges: tuple[EdgeKey, ...]
    edge_improvement: float
    min_key_rate: float
    provenance: dict = field(default_factory=dict, compare=False)

    @classmethod
    def create(cls, method: str, net: Network, edges: Iterable[EdgeKey], provenance=None) -> "PlanSolution":
        from .evaluation import edge_improvement, min_key_rate

        chosen = net.check_subset(edges)
        if not is_connected(chosen, net.node_ids):
            raise NetworkError(f"{method} solution does not connect every node")
        return cls(
            method,
            net,
            tuple(sort_edges(chosen)),
            edge_improvement(net, chosen),
            min_key_rate(net, chosen),
            provenance or {},
        )

    @property
    def edge_set(self) -> frozenset[EdgeKey]:
        return frozenset(self.edges)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "metrics": {
                "edges_total": len(self.network.edges),
                "edges_solution": len(self.edges),
                "edge_improvement_pct": self.edge_improvement,
                "min_key_rate_kbps": self.min_key_rate,
            },
            "edges": [
                {"u": u, "v": v, "key_rate_kbps": self.network.key_rate(u, v)} for u, v in self.edges
            ],
            "provenance": self.provenance,
            "network": self.network.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        FilePath(path).write_text(self.to_json())

    @classmethod
    def from_dict(cls, data: dict, net: Network | None = None) -> "PlanSolution":
        """Rebuild and re-validate a solution.

        The stored metrics must match the values recomputed from the edges.
        """
        if net is None:
            if "network" not in data:
                raise NetworkError("solution carries no network; pass one explicitly")
            net = Network.from_dict(data["network"])
        try:
            edges = [(e["u"], e["v"]) for e in data["edges"]]
            method = data.get("method", "unknown")
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"malformed solution record: {exc}") from exc
        sol = cls.create(method, net, edges, data.get("provenance", {}))
        metrics = data.get("metrics", {})
        for name, value in (
            ("edge_improvement_pct", sol.edge_improvement),
            ("min_key_rate_kbps", sol.min_key_rate),
        ):
            if name in metrics and metrics[name] != value:
                raise NetworkError(f"stored {name}={metrics[name]} disagrees with edges ({value})")
        return sol


def load_solution(path, net: Network | None = None) -> PlanSolution:
    try:
        data = json.loads(FilePath(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise NetworkError(f"cannot read solution {path}: {exc}") from exc
    return PlanSolution.from_dict(data, net)
