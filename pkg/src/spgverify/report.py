"""JSON documents for graphs, runs and command results."""

from __future__ import annotations

import json

from .graph import SPGG, Edge, Graph, GraphError, MarkedGraph, graph_from_tree, shape_of, symmetric_closure, \
    tree_from_shape
from .semantics import Move, Run, SemanticsError

SCHEMA_VERSION = 1


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(y) for y in x)
    return x


def graph_to_json(mg: MarkedGraph) -> dict:
    g = mg.graph
    out = {
        "nodes": sorted(g.nodes),
        "source": g.source,
        "sink": g.sink,
        "edges": [{"id": e.eid, "src": e.src, "trg": e.trg, "label": e.label} for e in g.edges],
        "marked": sorted(mg.marking),
        "register_ids": [list(x) for x in mg.register_ids],
    }
    if mg.tree is not None:
        out["shape"] = shape_of(mg.tree)
    return out


def graph_from_json(d: dict, grammar: SPGG | None = None) -> MarkedGraph:
    """Marked graph of a report; with a grammar the recorded shape is re-derived and must match."""
    edges = tuple(Edge(e["id"], e["src"], e["trg"], e["label"]) for e in d["edges"])
    g = Graph(frozenset(d["nodes"]), edges, d["source"], d["sink"])
    mg = MarkedGraph(g, frozenset(d["marked"]), tuple(tuple(x) for x in d["register_ids"]))
    if grammar is None:
        return mg
    if "shape" not in d:
        raise GraphError("report has no derivation shape")
    tree = tree_from_shape(grammar, grammar.start, _tuplify(d["shape"]))
    if tree is None:
        raise GraphError("the grammar does not derive the recorded graph")
    derived = graph_from_tree(tree, grammar.mark_source, grammar.mark_sink)
    if (derived.graph.edges, derived.marking) != (g.edges, mg.marking):
        raise GraphError("the recorded graph differs from its derivation")
    return derived


def run_to_json(run: Run) -> dict:
    moves = []
    for mv in run.moves:
        q, (label, d), b, q2, b2 = mv.transition
        moves.append({"machine": mv.machine, "edge": mv.edge.eid, "direction": d,
                      "from": q, "label": label, "read": b, "to": q2, "write": b2})
    last = run.configurations[-1]
    return {
        "moves": moves,
        "final": {"positions": [[x, q] for x, q in last.positions], "ones": sorted(last.ones)},
    }


def moves_from_json(d: dict, mg: MarkedGraph) -> list[Move]:
    sym = {(e.eid, e.direction): e for e in symmetric_closure(mg).edges}
    out = []
    for x in d["moves"]:
        e = sym.get((x["edge"], x["direction"]))
        if e is None:
            raise SemanticsError(f"no edge {x['edge']} in direction {x['direction']}")
        tr = (x["from"], (x["label"], x["direction"]), x["read"], x["to"], x["write"])
        out.append(Move(x["machine"], e, tr))
    return out


def dumps(doc: dict) -> str:
    """Stable rendering: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
