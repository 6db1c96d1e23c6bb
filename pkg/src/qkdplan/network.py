"""Network data model, file I/O and the synthetic reference network.

A :class:`Network` is an undirected, connected, capacitated graph.  Edge
capacities are QKD key rates in kbit/s and traffic demands are expressed in
the same unit, so ``demand / key_rate`` is a dimensionless load.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Iterable, Mapping

import numpy as np

EdgeKey = tuple[str, str]

_CHUNK = re.compile(r"\d+|\D+")


class NetworkError(ValueError):
    """Raised when a network file cannot be parsed or fails validation."""


def node_key(node: str) -> tuple:
    """Numeric-aware sort key, so that ``"6" < "10" < "a"``."""
    parts = _CHUNK.findall(node)
    return tuple((0, int(p), p) if p.isdigit() else (1, 0, p) for p in parts)


def sort_nodes(nodes: Iterable[str]) -> list[str]:
    return sorted(nodes, key=node_key)


def canonical_edge(u: str, v: str) -> EdgeKey:
    return (u, v) if node_key(u) <= node_key(v) else (v, u)


def edge_sort_key(edge: EdgeKey) -> tuple:
    return (node_key(edge[0]), node_key(edge[1]))


def sort_edges(edges: Iterable[EdgeKey]) -> list[EdgeKey]:
    return sorted(edges, key=edge_sort_key)


def edge_label(edge: EdgeKey) -> str:
    return f"{edge[0]}-{edge[1]}"


@dataclass(frozen=True)
class Node:
    id: str
    x: float | None = None
    y: float | None = None

    @property
    def coordinates(self) -> tuple[float, float] | None:
        if self.x is None or self.y is None:
            return None
        return (self.x, self.y)


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    key_rate: float

    @property
    def key(self) -> EdgeKey:
        return (self.u, self.v)


@dataclass(frozen=True, eq=False)
class Network:
    """Validated, immutable network.

    Build instances through :meth:`from_records` (or the loaders), which
    canonicalize edge orientation and check every invariant.
    """

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    traffic: Mapping[EdgeKey, float] = field(default_factory=dict)

    def __post_init__(self):
        rates = {e.key: e.key_rate for e in self.edges}
        adj: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for u, v in rates:
            adj[u].append(v)
            adj[v].append(u)
        for n in adj:
            adj[n] = sort_nodes(adj[n])
        object.__setattr__(self, "_rates", rates)
        object.__setattr__(self, "_adj", {n: tuple(vs) for n, vs in adj.items()})

    # construction -----------------------------------------------------

    @classmethod
    def from_records(
        cls,
        nodes: Iterable[str | Node] | None,
        edges: Iterable[tuple[str, str, float]],
        traffic: Iterable[tuple[str, str, float]] = (),
    ) -> "Network":
        """Canonicalize and validate raw node, edge and traffic records.

        ``nodes`` may be ``None`` to derive the node set from the edges.
        Traffic records may list a pair once or in both directions; listing
        both with different values is an error.
        """
        node_objs: dict[str, Node] = {}
        for n in nodes or ():
            node = n if isinstance(n, Node) else Node(str(n))
            if node.id in node_objs:
                raise NetworkError(f"duplicate node {node.id}")
            node_objs[node.id] = node

        edge_rates: dict[EdgeKey, float] = {}
        for u, v, rate in edges:
            u, v = str(u), str(v)
            if u == v:
                raise NetworkError(f"self-loop at node {u}")
            key = canonical_edge(u, v)
            if key in edge_rates:
                raise NetworkError(f"parallel edge {edge_label(key)}")
            rate = float(rate)
            if not rate > 0 or not math.isfinite(rate):
                raise NetworkError(f"nonpositive key rate {edge_label(key)}")
            edge_rates[key] = rate
            for n in key:
                if n not in node_objs:
                    if nodes is not None:
                        raise NetworkError(f"edge {edge_label(key)} references unknown node {n}")
                    node_objs[n] = Node(n)

        demands: dict[EdgeKey, float] = {}
        for u, v, d in traffic:
            u, v, d = str(u), str(v), float(d)
            if u == v:
                continue
            for n in (u, v):
                if n not in node_objs:
                    raise NetworkError(f"traffic references unknown node {n}")
            if not d >= 0 or not math.isfinite(d):
                raise NetworkError(f"negative traffic demand {u}-{v}")
            key = canonical_edge(u, v)
            if key in demands and demands[key] != d:
                raise NetworkError(f"asymmetric traffic {edge_label(key)}")
            demands[key] = d

        ordered_nodes = tuple(node_objs[n] for n in sort_nodes(node_objs))
        ordered_edges = tuple(Edge(u, v, edge_rates[(u, v)]) for u, v in sort_edges(edge_rates))
        ordered_traffic = {k: demands[k] for k in sort_edges(demands) if demands[k] > 0}
        net = cls(ordered_nodes, ordered_edges, ordered_traffic)
        net._check_connected()
        return net

    def _check_connected(self) -> None:
        if len(self.nodes) < 2:
            raise NetworkError("network needs at least two nodes")
        start = self.nodes[0].id
        seen = {start}
        queue = deque([start])
        while queue:
            n = queue.popleft()
            for m in self._adj[n]:
                if m not in seen:
                    seen.add(m)
                    queue.append(m)
        if len(seen) != len(self.nodes):
            missing = sort_nodes(set(self._adj) - seen)
            raise NetworkError(f"network is disconnected: node {missing[0]} unreachable from {start}")

    # queries ----------------------------------------------------------

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    @property
    def edge_keys(self) -> list[EdgeKey]:
        return [e.key for e in self.edges]

    def __contains__(self, node: str) -> bool:
        return node in self._adj

    def neighbors(self, node: str) -> tuple[str, ...]:
        return self._adj[node]

    def degree(self, node: str) -> int:
        return len(self._adj[node])

    @property
    def max_degree(self) -> int:
        return max(len(vs) for vs in self._adj.values())

    def has_edge(self, u: str, v: str) -> bool:
        return canonical_edge(u, v) in self._rates

    def key_rate(self, u: str, v: str) -> float:
        return self._rates[canonical_edge(u, v)]

    def demand(self, u: str, v: str) -> float:
        return self.traffic.get(canonical_edge(u, v), 0.0)

    def check_subset(self, edges: Iterable[EdgeKey]) -> frozenset[EdgeKey]:
        """Canonicalize ``edges`` and verify each one belongs to the network."""
        out = set()
        for u, v in edges:
            key = canonical_edge(u, v)
            if key not in self._rates:
                raise NetworkError(f"edge {edge_label(key)} is not part of the network")
            out.add(key)
        return frozenset(out)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.edges == other.edges
            and dict(self.traffic) == dict(other.traffic)
        )

    def __repr__(self):
        return f"Network(|N|={len(self.nodes)}, |E|={len(self.edges)}, pairs={len(self.traffic)})"

    # serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        nodes = []
        for n in self.nodes:
            rec = {"id": n.id}
            if n.coordinates is not None:
                rec["x"], rec["y"] = n.x, n.y
            nodes.append(rec)
        return {
            "nodes": nodes,
            "edges": [{"u": e.u, "v": e.v, "key_rate_kbps": e.key_rate} for e in self.edges],
            "traffic": [{"u": u, "v": v, "demand_kbps": d} for (u, v), d in self.traffic.items()],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Network":
        try:
            nodes = [
                Node(str(n["id"]), _opt_float(n.get("x")), _opt_float(n.get("y")))
                for n in data.get("nodes", [])
            ]
            edges = [(e["u"], e["v"], e["key_rate_kbps"]) for e in data["edges"]]
            traffic = [(t["u"], t["v"], t["demand_kbps"]) for t in data.get("traffic", [])]
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"malformed network record: {exc}") from exc
        return cls.from_records(nodes or None, edges, traffic)


def _opt_float(value) -> float | None:
    return None if value is None else float(value)


def load_network(path, format: str = "json", traffic_path=None) -> Network:
    """Load and validate a network file.

    Args:
        path: network file.
        format: ``"json"`` or ``"csv-triple"`` (rows ``u,v,key_rate``).
        traffic_path: for csv-triple, an optional ``u,v,demand`` file.  When
            omitted, a sibling ``<stem>.traffic.csv`` is used if present.
    """
    path = FilePath(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise NetworkError(f"cannot read {path}: {exc}") from exc
    if format == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise NetworkError(f"cannot parse {path}: {exc}") from exc
        if isinstance(data, dict) and "network" in data and "edges" not in data:
            data = data["network"]
        return Network.from_dict(data)
    if format in ("csv", "csv-triple"):
        edges = _read_triples(text, path)
        if traffic_path is None:
            sibling = path.with_name(path.stem + ".traffic.csv")
            traffic_path = sibling if sibling.exists() else None
        traffic = _read_triples(FilePath(traffic_path).read_text(), traffic_path) if traffic_path else []
        return Network.from_records(None, edges, traffic)
    raise NetworkError(f"unknown network format {format!r}")


def _read_triples(text: str, source) -> list[tuple[str, str, float]]:
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if len(row) < 3:
            raise NetworkError(f"{source}:{lineno}: expected u,v,value")
        try:
            value = float(row[2])
        except ValueError:
            if lineno == 1:
                continue  # header
            raise NetworkError(f"{source}:{lineno}: not a number: {row[2]!r}") from None
        rows.append((row[0].strip(), row[1].strip(), value))
    return rows


def save_network(net: Network, path) -> None:
    FilePath(path).write_text(json.dumps(net.to_dict(), indent=2) + "\n")


def traffic_csv(net: Network) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["u", "v", "demand_kbps"])
    for (u, v), d in net.traffic.items():
        writer.writerow([u, v, repr(d)])
    return buf.getvalue().encode()


# export -----------------------------------------------------------------

def _fmt_rate(rate: float) -> str:
    return f"{rate:g}"


def export_graph(net: Network, subset: Iterable[EdgeKey] = (), format: str = "dot") -> bytes:
    """Render the network with ``subset`` highlighted.

    Selected edges are drawn solid and labelled with their key rate, the
    rest dashed.  Output ordering follows the canonical node/edge order.
    """
    chosen = net.check_subset(subset)
    if format == "dot":
        lines = ["graph qkd {", "  node [shape=circle];"]
        for n in net.nodes:
            attrs = ""
            if n.coordinates is not None:
                attrs = f' [pos="{n.x:g},{n.y:g}!"]'
            lines.append(f'  "{n.id}"{attrs};')
        for e in net.edges:
            style = "solid" if e.key in chosen else "dashed"
            lines.append(f'  "{e.u}" -- "{e.v}" [label="{_fmt_rate(e.key_rate)}", style={style}];')
        lines.append("}")
        return ("\n".join(lines) + "\n").encode()
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["u", "v", "key_rate_kbps", "selected"])
        for e in net.edges:
            writer.writerow([e.u, e.v, repr(e.key_rate), int(e.key in chosen)])
        return buf.getvalue().encode()
    if format == "graphml":
        return _graphml(net, chosen)
    raise NetworkError(f"unknown export format {format!r}")


def _graphml(net: Network, chosen: frozenset[EdgeKey]) -> bytes:
    from xml.sax.saxutils import quoteattr

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="x" for="node" attr.name="x" attr.type="double"/>',
        '  <key id="y" for="node" attr.name="y" attr.type="double"/>',
        '  <key id="rate" for="edge" attr.name="key_rate_kbps" attr.type="double"/>',
        '  <key id="style" for="edge" attr.name="style" attr.type="string"/>',
        '  <graph id="qkd" edgedefault="undirected">',
    ]
    for n in net.nodes:
        if n.coordinates is None:
            out.append(f"    <node id={quoteattr(n.id)}/>")
        else:
            out.append(f"    <node id={quoteattr(n.id)}>")
            out.append(f'      <data key="x">{n.x!r}</data>')
            out.append(f'      <data key="y">{n.y!r}</data>')
            out.append("    </node>")
    for e in net.edges:
        style = "solid" if e.key in chosen else "dashed"
        out.append(f"    <edge source={quoteattr(e.u)} target={quoteattr(e.v)}>")
        out.append(f'      <data key="rate">{e.key_rate!r}</data>')
        out.append(f'      <data key="style">{style}</data>')
        out.append("    </edge>")
    out += ["  </graph>", "</graphml>"]
    return ("\n".join(out) + "\n").encode()


# reference network -------------------------------------------------------

# Fixed backbone topology: hub "6" with eight spokes to an inner ring, an
# outer ring of twenty regional nodes and twelve inner/outer cross links.
_INNER = ["1", "2", "3", "4", "5", "7", "8", "9"]
_OUTER = [str(i) for i in range(10, 30)]
_CROSS = [
    ("1", "10"), ("1", "12"), ("2", "13"), ("3", "15"), ("3", "17"), ("4", "19"),
    ("5", "21"), ("5", "22"), ("7", "24"), ("8", "26"), ("9", "27"), ("9", "29"),
]
REFERENCE_HUB = "6"
REFERENCE_DEMAND = 0.005


def _reference_topology() -> list[EdgeKey]:
    edges = [(REFERENCE_HUB, n) for n in _INNER]
    edges += [(_INNER[i], _INNER[(i + 1) % len(_INNER)]) for i in range(len(_INNER))]
    edges += [(_OUTER[i], _OUTER[(i + 1) % len(_OUTER)]) for i in range(len(_OUTER))]
    edges += _CROSS
    return edges


def _reference_coordinates() -> dict[str, tuple[float, float]]:
    coords = {REFERENCE_HUB: (0.0, 0.0)}
    for ring, radius in ((_INNER, 1.0), (_OUTER, 2.2)):
        for i, n in enumerate(ring):
            angle = 2 * math.pi * i / len(ring)
            coords[n] = (round(radius * math.cos(angle), 4), round(radius * math.sin(angle), 4))
    return coords


def reference_network(seed: int = 0, demand: float = REFERENCE_DEMAND) -> Network:
    """Synthetic 29-node / 48-edge backbone with hub node ``"6"``.

    The topology is fixed and 2-edge-connected; key rates are drawn from
    ``seed`` uniformly in [1, 20] kbit/s, rounded to 0.01.  Every node pair
    carries the same ``demand``.
    """
    rng = np.random.default_rng(seed)
    topo = _reference_topology()
    rates = np.round(rng.uniform(1.0, 20.0, size=len(topo)), 2)
    coords = _reference_coordinates()
    nodes = [Node(n, *coords[n]) for n in sort_nodes(coords)]
    ids = [n.id for n in nodes]
    traffic = [(ids[i], ids[j], demand) for i in range(len(ids)) for j in range(i + 1, len(ids))]
    return Network.from_records(
        nodes, [(u, v, float(r)) for (u, v), r in zip(topo, rates)], traffic
    )
