"""The ten-node sample graph of the bundled example grammars."""

from __future__ import annotations

from .graph import SPGG, GraphError, MarkedGraph, graph_from_tree, tree_from_shape

# c, then a chain of four a-edges in parallel with
# b . ((b . b . b) || b) . b
SAMPLE_SHAPE = (".", "c", ("|",
                           (".", "a", (".", "a", (".", "a", "a"))),
                           (".", "b", (".", ("|", (".", "b", (".", "b", "b")), "b"), "b"))))


def sample_graph(g: SPGG) -> MarkedGraph:
    """The sample graph derived in `g` (10 nodes, 11 edges, the node after c marked if the grammar says so)."""
    tree = tree_from_shape(g, g.start, SAMPLE_SHAPE)
    if tree is None:
        raise GraphError("the grammar does not derive the sample graph")
    return graph_from_tree(tree, g.mark_source, g.mark_sink)
