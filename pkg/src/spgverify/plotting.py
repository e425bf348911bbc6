"""PNG drawing of a witness graph with the machines' final states."""

from __future__ import annotations

from collections import defaultdict

from .graph import MarkedGraph
from .semantics import Run


def layered_layout(mg: MarkedGraph) -> dict:
    """x = longest distance from the source, y spreads the nodes of a layer."""
    g = mg.graph
    depth = {g.source: 0}
    order = [g.source]
    indeg = defaultdict(int)
    for e in g.edges:
        indeg[e.trg] += 1
    ready = [g.source]
    while ready:
        n = ready.pop()
        for e in sorted(g.out_edges(n), key=lambda e: e.eid):
            depth[e.trg] = max(depth.get(e.trg, 0), depth[n] + 1)
            indeg[e.trg] -= 1
            if indeg[e.trg] == 0:
                ready.append(e.trg)
                order.append(e.trg)
    layers = defaultdict(list)
    for n in order:
        layers[depth[n]].append(n)
    pos = {}
    for x, ns in layers.items():
        for i, n in enumerate(sorted(ns)):
            pos[n] = (float(x), (len(ns) - 1) / 2.0 - i)
    return pos


def draw_witness(mg: MarkedGraph, run: Run | None, path: str, title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pos = layered_layout(mg)
    xs = [x for x, _ in pos.values()]
    ys = [y for _, y in pos.values()]
    fig, ax = plt.subplots(figsize=(1.6 * (max(xs) + 2), 1.2 * (max(ys) - min(ys)) + 2.5))
    bundles = defaultdict(list)
    for e in mg.graph.edges:
        bundles[(e.src, e.trg)].append(e)
    for (s, t), es in bundles.items():
        (x1, y1), (x2, y2) = pos[s], pos[t]
        for i, e in enumerate(es):
            rad = (i - (len(es) - 1) / 2) * 0.4
            ax.annotate("", xy=(x2, y2), xytext=(x1, y1),
                        arrowprops=dict(arrowstyle="->", shrinkA=9, shrinkB=9, color="0.3",
                                        connectionstyle=f"arc3,rad={rad}"))
            # midpoint of the arc3 curve
            mx = (x1 + x2) / 2 + rad * (y2 - y1) / 2
            my = (y1 + y2) / 2 - rad * (x2 - x1) / 2
            ax.text(mx, my + 0.06, e.label, ha="center", va="bottom", fontsize=11)
    final = defaultdict(list)
    if run is not None:
        for i, (n, q) in enumerate(run.configurations[-1].positions, 1):
            final[n].append(f"{i}:{q}")
    for n, (x, y) in pos.items():
        marked = n in mg.marking
        ax.plot([x], [y], marker="s" if marked else "o", markersize=12,
                color="tab:orange" if final[n] else "black")
        if final[n]:
            ax.text(x, y - 0.25, " ".join(final[n]), ha="center", fontsize=9, color="tab:orange")
    ax.set_xlim(min(xs) - 0.5, max(xs) + 0.5)
    ax.set_ylim(min(ys) - 0.8, max(ys) + 0.8)
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
