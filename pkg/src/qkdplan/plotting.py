"""Matplotlib figures for plans, loads and run statistics (Agg backend)."""

from __future__ import annotations

import math
from pathlib import Path as FilePath
from typing import Iterable, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .network import EdgeKey, Network, edge_label, sort_edges  # noqa: E402

SOLID = "#1f4e79"
DASHED = "#b0b0b0"
FAIL = "#c0392b"

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    # fixed metadata keeps PNG bytes stable between runs
    "svg.hashsalt": "qkdplan",
}


def layout(net: Network) -> dict[str, tuple[float, float]]:
    """Stored coordinates when every node has them, else a circle."""
    coords = {n.id: n.coordinates for n in net.nodes}
    if all(c is not None for c in coords.values()):
        return coords
    ids = net.node_ids
    step = 2 * math.pi / max(1, len(ids))
    return {n: (math.cos(k * step), math.sin(k * step)) for k, n in enumerate(ids)}


def _save(fig, path) -> FilePath:
    path = FilePath(path)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_network(net: Network, subset: Iterable[EdgeKey] = (), path="network.png",
                 title: str | None = None, rate_labels: bool = True) -> FilePath:
    """Network drawing with ``subset`` edges solid and the rest dashed."""
    chosen = net.check_subset(subset)
    pos = layout(net)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 6.0))
        for u, v in net.edge_keys:
            (x0, y0), (x1, y1) = pos[u], pos[v]
            on = (u, v) in chosen
            ax.plot([x0, x1], [y0, y1], color=SOLID if on else DASHED,
                    ls="-" if on else "--", lw=1.6 if on else 0.8, zorder=1)
            if rate_labels and on:
                ax.text((x0 + x1) / 2, (y0 + y1) / 2, f"{net.key_rate(u, v):g}",
                        fontsize=6, ha="center", va="center", color=SOLID,
                        bbox={"fc": "white", "ec": "none", "pad": 0.3}, zorder=2)
        xs = [pos[n][0] for n in net.node_ids]
        ys = [pos[n][1] for n in net.node_ids]
        ax.scatter(xs, ys, s=180, c="white", edgecolors="black", zorder=3)
        for n in net.node_ids:
            ax.text(*pos[n], n, fontsize=7, ha="center", va="center", zorder=4)
        ax.set_aspect("equal")
        ax.axis("off")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_loads(load: Mapping[EdgeKey, float], path="load.png",
               failure_load: Mapping[EdgeKey, float] | None = None,
               title: str | None = None) -> FilePath:
    """Per-edge load bars in percent, with worst single-failure load beside them."""
    edges = sort_edges(load)
    labels = [edge_label(e) for e in edges]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(6.0, 0.22 * len(edges) + 1.5), 3.6))
        idx = list(range(len(edges)))
        if failure_load is None:
            ax.bar(idx, [load[e] for e in edges], color=SOLID, width=0.7, label="load")
        else:
            ax.bar([i - 0.2 for i in idx], [load[e] for e in edges], color=SOLID, width=0.4, label="load")
            ax.bar([i + 0.2 for i in idx], [failure_load[e] for e in edges], color=FAIL, width=0.4,
                   label="worst single failure")
            ax.legend(frameon=False, fontsize=7)
        ax.set_xticks(idx)
        ax.set_xticklabels(labels, rotation=90, fontsize=6)
        ax.set_ylabel("load [% of key rate]")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_improvements(groups: Mapping[str, Sequence[float]], path="improvement.png",
                      title: str | None = None) -> FilePath:
    """Box plot of edge improvements, one box per method."""
    names = list(groups)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.6 * len(names) + 2.0, 3.6))
        ax.boxplot([list(groups[k]) for k in names], widths=0.5)
        ax.set_xticks(range(1, len(names) + 1))
        ax.set_xticklabels(names)
        ax.set_ylabel("edge improvement [%]")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
