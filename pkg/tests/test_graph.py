import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load
from oracles import IsoSet, brute_force_language, isomorphic, to_nx
from spgverify.graph import (OPTIONAL, SPGG, DerivationStep, Edge, Graph, GraphError, Rule, apply_rule,
                             canonical_form, edge_replacement, enumerate_graphs, graph_from_tree,
                             is_series_parallel_shape, lift_grammar, minimal_tree, rule_body, shape_of,
                             single_edge_graph, symmetric_closure, to_dot, tree_derivation, tree_from_shape,
                             validate_grammar)
from spgverify.samples import SAMPLE_SHAPE, sample_graph


def rule(g, head, kind):
    return next(r for r in g.rules_for(head) if r.kind == kind)


def test_replace_with_terminal_body():
    g0 = single_edge_graph("v0")
    h = Graph(frozenset({10, 11}), (Edge(0, 10, 11, "c"),), 10, 11)
    out = edge_replacement(g0, g0.edges[0], h)
    assert out.nodes == {0, 1}
    assert out.edge_multiset() == {(0, 1, "c"): 1}


def test_series_rule_adds_middle(split):
    g0 = single_edge_graph("v0")
    g1 = apply_rule(g0, DerivationStep(g0.edges[0], rule(split, "v0", "ser")))
    assert len(g1.nodes) == 3
    (mid,) = g1.nodes - {0, 1}
    assert g1.edge_multiset() == {(0, mid, "vc"): 1, (mid, 1, "v1"): 1}


def test_parallel_rule_keeps_nodes(split):
    g0 = single_edge_graph("v0")
    g1 = apply_rule(g0, DerivationStep(g0.edges[0], rule(split, "v0", "ser")))
    e = next(e for e in g1.edges if e.label == "v1")
    g2 = apply_rule(g1, DerivationStep(e, rule(split, "v1", "par")))
    assert g2.nodes == g1.nodes
    assert g2.edge_multiset() == {(0, e.src, "vc"): 1, (e.src, 1, "va"): 1, (e.src, 1, "vb"): 1}


def test_replacement_removes_one_copy_only():
    g = Graph(frozenset({0, 1}), (Edge(0, 0, 1, "v"), Edge(1, 0, 1, "v")), 0, 1)
    h = Graph(frozenset({5, 6}), (Edge(0, 5, 6, "a"),), 5, 6)
    out = edge_replacement(g, g.edges[1], h)
    assert out.edge_multiset() == {(0, 1, "v"): 1, (0, 1, "a"): 1}


def test_replacement_errors():
    g = single_edge_graph("v")
    with pytest.raises(GraphError):
        edge_replacement(g, Edge(7, 0, 1, "v"), single_edge_graph("a", 5, 6))
    with pytest.raises(GraphError):
        edge_replacement(g, g.edges[0], Graph(frozenset({5}), (), 5, 5))
    with pytest.raises(GraphError):
        edge_replacement(g, g.edges[0], single_edge_graph("a", 1, 2))


def test_apply_rule_label_mismatch(split):
    g0 = single_edge_graph("v1")
    with pytest.raises(GraphError):
        apply_rule(g0, DerivationStep(g0.edges[0], rule(split, "v0", "ser")))


def test_terminal_step_gives_single_edge():
    g = SPGG(frozenset({"v0"}), frozenset({"a"}), (Rule("v0", "term", ("a",)),), "v0")
    g0 = g.initial_graph()
    out = apply_rule(g0, DerivationStep(g0.edges[0], g.rules[0]))
    assert out.edge_multiset() == {(0, 1, "a"): 1}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=1, max_size=12))
def test_replacement_counting_laws(choices):
    g = load("split.grammar")
    cur = single_edge_graph(g.start)
    for c in choices:
        var_edges = [e for e in cur.edges if e.label in g.variables]
        if not var_edges:
            break
        e = var_edges[c % len(var_edges)]
        rules = g.rules_for(e.label)
        r = rules[c % len(rules)]
        body = rule_body(r, cur.fresh_node())
        nxt = apply_rule(cur, DerivationStep(e, r))
        assert len(nxt.nodes) == len(cur.nodes) + len(body.nodes) - 2
        assert len(nxt.edges) == len(cur.edges) - 1 + len(body.edges)
        assert len(nxt.nodes) - len(cur.nodes) == (1 if r.kind == "ser" else 0)
        assert not is_series_parallel_shape(nxt)
        cur = nxt


def test_sample_graph_derivation_replays(split):
    tree = tree_from_shape(split, "v0", SAMPLE_SHAPE)
    g = single_edge_graph("v0")
    for step in tree_derivation(tree):
        g = apply_rule(g, step)
    assert len(g.nodes) == 10
    assert len(g.edges) == 11
    assert all(e.label in {"a", "b", "c"} for e in g.edges)
    assert isomorphic(to_nx(g), to_nx(graph_from_tree(tree).graph))


def test_sample_graph_shape(semaphore_grammar):
    mg = sample_graph(semaphore_grammar)
    assert len(mg.graph.nodes) == 10
    assert len(mg.graph.edges) == 11
    labels = sorted(e.label for e in mg.graph.edges)
    assert labels == ["a"] * 4 + ["b"] * 6 + ["c"]
    # the node after the c-edge carries the only register
    c = next(e for e in mg.graph.edges if e.label == "c")
    assert mg.marking == {c.trg}
    assert mg.register_ids == ((c.trg, 1),)


def test_symmetric_closure_of_sample(semaphore_grammar):
    mg = sample_graph(semaphore_grammar)
    sg = symmetric_closure(mg)
    assert len(sg.edges) == 22
    assert sg.marking == mg.marking
    assert sg.forward_graph() == mg.graph
    for e in sg.edges:
        assert sum(1 for x in sg.edges if (x.src, x.trg, x.label, x.direction, x.eid)
                   == (e.trg, e.src, e.label, -e.direction, e.eid)) == 1


def test_symmetric_closure_single_edge():
    sg = symmetric_closure(single_edge_graph("a", 3, 4))
    assert {(e.src, e.trg, e.label, e.direction) for e in sg.edges} == {(3, 4, "a", 1), (4, 3, "a", -1)}
    assert symmetric_closure(sg.forward_graph()).edges == sg.edges


def test_validate_example_is_clean(split):
    assert validate_grammar(split) == []


def test_validate_empty_language():
    g = SPGG(frozenset({"v0"}), frozenset({"a"}), (Rule("v0", "ser", ("v0", "v0")),), "v0")
    assert "no terminal rule reachable; language empty" in validate_grammar(g)


def test_validate_unreachable_variable():
    g = SPGG(frozenset({"v0", "w"}), frozenset({"a"}),
             (Rule("v0", "term", ("a",)), Rule("w", "term", ("a",))), "v0")
    assert validate_grammar(g) == ["unreachable variable w"]


def test_validate_dead_variable():
    g = SPGG(frozenset({"v0", "w"}), frozenset({"a"}),
             (Rule("v0", "term", ("a",)), Rule("v0", "ser", ("v0", "w"))), "v0")
    assert validate_grammar(g) == ["variable w has no rule"]


def test_grammar_rejects_overlap_and_undeclared():
    with pytest.raises(GraphError):
        SPGG(frozenset({"a"}), frozenset({"a"}), (), "a")
    with pytest.raises(GraphError):
        SPGG(frozenset({"v"}), frozenset({"a"}), (Rule("v", "ser", ("v", "w")),), "v")


def test_single_rule_enumeration():
    g = SPGG(frozenset({"v0"}), frozenset({"a"}), (Rule("v0", "term", ("a",)),), "v0")
    out = list(enumerate_graphs(lift_grammar(g, 0), 2))
    assert len(out) == 1
    assert out[0].graph.edge_multiset() == {(0, 1, "a"): 1}


def test_enumeration_needs_two_nodes(split):
    with pytest.raises(GraphError):
        list(enumerate_graphs(lift_grammar(split, 0), 1))
    small = list(enumerate_graphs(lift_grammar(split, 0), 3))
    assert small and all(len(mg.graph.nodes) == 3 for mg in small)


# Frozen counts, each confirmed by the exhaustive rewriting oracle below.
COUNTS = [
    ("split.grammar", 4, 6, 0, 17),
    ("split.grammar", 5, 6, 0, 31),
    ("split_marked.grammar", 5, 6, 1, 31),
    ("chains.grammar", 5, 4, 0, 30),
    ("chains.grammar", 5, 4, 1, 98),
    ("chains.grammar", 5, 4, 2, 154),
    ("diamonds.grammar", 6, 8, 1, 23),
]


@pytest.mark.parametrize("name,nodes,edges,k,expected", COUNTS)
def test_enumeration_counts(name, nodes, edges, k, expected):
    g = load(name)
    found = list(enumerate_graphs(lift_grammar(g, k), nodes, edges))
    assert len(found) == expected
    assert len({mg.canonical() for mg in found}) == expected


@pytest.mark.parametrize("name,nodes,edges,k,expected", COUNTS)
def test_enumeration_matches_rewriting_oracle(name, nodes, edges, k, expected):
    g = load(name)
    oracle = brute_force_language(g, nodes, edges, k)
    assert len(oracle) == expected
    pool = IsoSet()
    for h in oracle.items:
        pool.add(h)
    for mg in enumerate_graphs(lift_grammar(g, k), nodes, edges):
        assert not pool.add(to_nx(mg.graph, mg.marking)), "enumerated graph outside the language"


def test_enumeration_contains_sample(semaphore_grammar):
    target = to_nx(sample_graph(semaphore_grammar).graph, sample_graph(semaphore_grammar).marking)
    hits = [mg for mg in enumerate_graphs(lift_grammar(semaphore_grammar, 1), 10, 11)
            if len(mg.graph.edges) == 11 and isomorphic(to_nx(mg.graph, mg.marking), target)]
    assert len(hits) == 1


def test_canonical_form_is_an_isomorphism_invariant(split):
    graphs = list(enumerate_graphs(lift_grammar(split, 0), 5, 7))
    for i, a in enumerate(graphs):
        for b in graphs[i + 1:]:
            if len(a.graph.edges) == len(b.graph.edges):
                assert not isomorphic(to_nx(a.graph), to_nx(b.graph))


def test_lift_marks_middle_when_forced(semaphore_grammar):
    for mg in enumerate_graphs(lift_grammar(semaphore_grammar, 2), 6, 8):
        c = next(e for e in mg.graph.edges if e.label == "c")
        assert c.trg in mg.marking
        assert len(mg.marking) <= 2


def test_lift_zero_budget_with_optional_marks():
    g = load("chains.grammar")
    assert all(r.mark == OPTIONAL for r in g.rules if r.kind == "ser")
    plain = {mg.canonical() for mg in enumerate_graphs(lift_grammar(g, 0), 5, 4)}
    for mg in enumerate_graphs(lift_grammar(g, 0), 5, 4):
        assert not mg.marking
    unmarked = IsoSet()
    for mg in enumerate_graphs(lift_grammar(g, 2), 5, 4):
        unmarked.add(to_nx(mg.graph))
    assert len(plain) == len(unmarked) == 30


def test_lift_unsatisfiable_budget(semaphore_grammar):
    with pytest.raises(GraphError, match="unsatisfiable budget"):
        lift_grammar(semaphore_grammar, 0)


def test_register_ids_follow_node_order():
    g = load("chains.grammar")
    for mg in enumerate_graphs(lift_grammar(g, 2), 5, 4):
        marked = sorted(mg.marking)
        assert [i for _, i in mg.register_ids] == list(range(1, len(marked) + 1))
        assert [n for n, _ in mg.register_ids] == marked


def test_structural_invariants_on_enumerated_graphs():
    for name, k in [("split.grammar", 0), ("split_marked.grammar", 1), ("chains.grammar", 2),
                    ("diamonds.grammar", 2)]:
        for mg in enumerate_graphs(lift_grammar(load(name), k), 6, 8):
            assert is_series_parallel_shape(mg.graph) == []


def test_series_parallel_shape_detects_violations():
    cyc = Graph(frozenset({0, 1, 2}), (Edge(0, 0, 2, "a"), Edge(1, 2, 0, "a"), Edge(2, 2, 1, "a")), 0, 1)
    assert is_series_parallel_shape(cyc)
    dangling = Graph(frozenset({0, 1, 2}), (Edge(0, 0, 1, "a"), Edge(1, 0, 2, "a")), 0, 1)
    assert is_series_parallel_shape(dangling)


def test_minimal_tree_is_smallest(split):
    bg = lift_grammar(split, 0)
    t = minimal_tree(bg, bg.starts[0])
    assert t.n_edges() == 3
    assert canonical_form(t) == ("S", (("E", "c"), 0, ("P", (("E", "a"), ("E", "b")))))


def test_shape_round_trip(semaphore_grammar):
    tree = tree_from_shape(semaphore_grammar, "v0", SAMPLE_SHAPE)
    again = tree_from_shape(semaphore_grammar, "v0", shape_of(tree))
    assert canonical_form(again) == canonical_form(tree)
    assert tree_from_shape(semaphore_grammar, "v0", "a") is None
    # a forced mark cannot be switched off
    assert tree_from_shape(semaphore_grammar, "v0", (".", "c", ("|", "a", "b"), 0)) is None


def test_dot_export(semaphore_grammar):
    text = to_dot(sample_graph(semaphore_grammar))
    assert text.startswith("digraph")
    assert text.count("->") == 11
    assert "[r1]" in text
