"""Series-parallel graphs, edge replacement, SPGG derivation and the k-mark lift."""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterator


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    eid: int
    src: int
    trg: int
    label: str


@dataclass(frozen=True)
class Graph:
    """Multigraph with a distinguished source and sink.

    Edges carry a hidden id so that removing "one copy" of a repeated edge is
    well defined.
    """

    nodes: frozenset
    edges: tuple
    source: int
    sink: int

    def out_edges(self, n):
        return [e for e in self.edges if e.src == n]

    def in_edges(self, n):
        return [e for e in self.edges if e.trg == n]

    def edge_multiset(self):
        counts = defaultdict(int)
        for e in self.edges:
            counts[(e.src, e.trg, e.label)] += 1
        return dict(counts)

    def fresh_node(self):
        return max(self.nodes) + 1 if self.nodes else 0


def single_edge_graph(label, source=0, sink=1, eid=0):
    return Graph(frozenset({source, sink}), (Edge(eid, source, sink, label),), source, sink)


def edge_replacement(g: Graph, edge: Edge, h: Graph) -> Graph:
    """Return g[edge -> h]: drop one copy of `edge`, fuse h's source/sink with its endpoints."""
    if edge not in g.edges:
        raise GraphError(f"edge {edge} not in graph")
    if h.source == h.sink:
        raise GraphError("replacement graph has source == sink")
    if g.nodes & h.nodes:
        raise GraphError("node sets are not disjoint")
    rename = {h.source: edge.src, h.sink: edge.trg}
    for n in sorted(h.nodes - {h.source, h.sink}):
        rename[n] = n
    next_eid = max((e.eid for e in g.edges), default=-1) + 1
    kept = [e for e in g.edges if e is not edge and e != edge]
    new = []
    for i, e in enumerate(h.edges):
        new.append(Edge(next_eid + i, rename[e.src], rename[e.trg], e.label))
    nodes = g.nodes | frozenset(rename.values())
    return Graph(nodes, tuple(kept + new), g.source, g.sink)


# --------------------------------------------------------------------------
# grammar

NEVER, OPTIONAL, ALWAYS = "never", "optional", "always"


@dataclass(frozen=True)
class Rule:
    head: str
    kind: str  # "term" | "ser" | "par"
    args: tuple  # (sigma,) or (v1, v2)
    mark: str = NEVER  # series only

    def __str__(self):
        if self.kind == "term":
            return f"{self.head} -> '{self.args[0]}'"
        if self.kind == "ser":
            suffix = "" if self.mark == NEVER else f" [{'mark' if self.mark == ALWAYS else 'mark?'}]"
            return f"{self.head} -> {self.args[0]} . {self.args[1]}{suffix}"
        return f"{self.head} -> {self.args[0]} || {self.args[1]}"


@dataclass(frozen=True)
class SPGG:
    variables: frozenset
    alphabet: frozenset
    rules: tuple
    start: str
    mark_source: bool = False
    mark_sink: bool = False
    k: int | None = None  # optional default register bound from the grammar file

    def __post_init__(self):
        if self.variables & self.alphabet:
            raise GraphError("variables and alphabet overlap")
        if self.start not in self.variables:
            raise GraphError(f"start variable {self.start} undeclared")
        for r in self.rules:
            if r.head not in self.variables:
                raise GraphError(f"undeclared variable {r.head}")
            if r.kind == "term":
                if r.args[0] not in self.alphabet:
                    raise GraphError(f"unknown terminal {r.args[0]}")
            else:
                for v in r.args:
                    if v not in self.variables:
                        raise GraphError(f"undeclared variable {v}")

    def rules_for(self, v):
        return [r for r in self.rules if r.head == v]

    def initial_graph(self):
        return single_edge_graph(self.start)


def rule_body(rule: Rule, base: int) -> Graph:
    """Body graph of a rule using node ids base (source), base+1 (sink), base+2 (middle)."""
    s, t = base, base + 1
    if rule.kind == "term":
        return Graph(frozenset({s, t}), (Edge(0, s, t, rule.args[0]),), s, t)
    if rule.kind == "ser":
        m = base + 2
        return Graph(frozenset({s, t, m}),
                     (Edge(0, s, m, rule.args[0]), Edge(1, m, t, rule.args[1])), s, t)
    return Graph(frozenset({s, t}),
                 (Edge(0, s, t, rule.args[0]), Edge(1, s, t, rule.args[1])), s, t)


@dataclass(frozen=True)
class DerivationStep:
    edge: Edge
    rule: Rule


def apply_rule(g: Graph, step: DerivationStep) -> Graph:
    if step.edge.label != step.rule.head:
        raise GraphError(f"edge labelled {step.edge.label}, rule head {step.rule.head}")
    return edge_replacement(g, step.edge, rule_body(step.rule, g.fresh_node()))


def validate_grammar(g: SPGG) -> list[str]:
    """Diagnostics: unreachable variables, unproductive variables, empty language."""
    diags = []
    reach = {g.start}
    todo = [g.start]
    while todo:
        v = todo.pop()
        for r in g.rules_for(v):
            if r.kind != "term":
                for w in r.args:
                    if w not in reach:
                        reach.add(w)
                        todo.append(w)
    prod = set()
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            if r.head in prod:
                continue
            if r.kind == "term" or all(w in prod for w in r.args):
                prod.add(r.head)
                changed = True
    for v in sorted(g.variables - reach):
        diags.append(f"unreachable variable {v}")
    for v in sorted(reach - prod):
        if not g.rules_for(v):
            diags.append(f"variable {v} has no rule")
        else:
            diags.append(f"variable {v} cannot derive a terminal graph")
    if g.start not in prod:
        diags.append("no terminal rule reachable; language empty")
    return diags


# --------------------------------------------------------------------------
# derivation trees

@dataclass(frozen=True)
class DTree:
    """Derivation tree node; `mark` flags the series middle node."""

    var: str
    rule: Rule
    kids: tuple = ()
    mark: bool = False

    @property
    def kind(self):
        return self.rule.kind

    def n_middles(self):
        if self.kind == "term":
            return 0
        own = 1 if self.kind == "ser" else 0
        return own + sum(k.n_middles() for k in self.kids)

    def n_edges(self):
        if self.kind == "term":
            return 1
        return sum(k.n_edges() for k in self.kids)

    def n_marks(self):
        if self.kind == "term":
            return 0
        return int(self.mark) + sum(k.n_marks() for k in self.kids)


def combine_canonical(kind, a, b, mark=False):
    """Canonical form of a series or parallel composition from its children's forms."""
    if kind == "ser":
        items = list(a[1] if a[0] == "S" else (a,))
        items.append(int(mark))
        items.extend(b[1] if b[0] == "S" else (b,))
        return ("S", tuple(items))
    kids = []
    for c in (a, b):
        kids.extend(c[1] if c[0] == "P" else (c,))
    return ("P", tuple(sorted(kids)))


def canonical_form(tree: DTree):
    """Complete isomorphism invariant of the marked two-terminal graph a tree derives.

    Series chains are flattened (children alternate with junction marks) and
    parallel children are flattened and sorted.
    """
    if tree.kind == "term":
        return ("E", tree.rule.args[0])
    a, b = (canonical_form(k) for k in tree.kids)
    return combine_canonical(tree.kind, a, b, tree.mark)


def tree_from_shape(g: SPGG, var: str, shape, marks=True) -> DTree | None:
    """A derivation tree of `var` with the given shape, or None.

    A shape is a terminal label, (".", left, right) for series composition or
    ("|", left, right) for parallel composition.  A series shape may carry a
    fourth entry fixing whether its middle node is marked; otherwise optional
    marks are set when `marks` is true.
    """
    if isinstance(shape, str):
        for r in g.rules_for(var):
            if r.kind == "term" and r.args[0] == shape:
                return DTree(var, r)
        return None
    op, left, right, *want = shape
    kind = "ser" if op == "." else "par"
    for r in g.rules_for(var):
        if r.kind != kind:
            continue
        a = tree_from_shape(g, r.args[0], left, marks)
        b = tree_from_shape(g, r.args[1], right, marks) if a is not None else None
        if b is None:
            continue
        mark = kind == "ser" and (r.mark == ALWAYS or (r.mark == OPTIONAL and marks))
        if want and kind == "ser":
            if r.mark == OPTIONAL:
                mark = bool(want[0])
            elif mark != bool(want[0]):
                continue
        return DTree(var, r, (a, b), mark)
    return None


def shape_of(tree: DTree):
    """Inverse of tree_from_shape (series shapes record their mark)."""
    if tree.kind == "term":
        return tree.rule.args[0]
    a, b = (shape_of(k) for k in tree.kids)
    if tree.kind == "ser":
        return (".", a, b, int(tree.mark))
    return ("|", a, b)


@dataclass(frozen=True)
class MarkedGraph:
    graph: Graph
    marking: frozenset  # marked nodes
    register_ids: tuple  # sorted (node, id) pairs
    tree: DTree | None = field(default=None, compare=False)
    mark_source: bool = False
    mark_sink: bool = False

    @property
    def reg(self):
        return dict(self.register_ids)

    def is_marked(self, n):
        return n in self.marking

    def canonical(self):
        if self.tree is None:
            raise GraphError("no derivation tree recorded")
        return (int(self.mark_source), canonical_form(self.tree), int(self.mark_sink))


def graph_from_tree(tree: DTree, mark_source=False, mark_sink=False) -> MarkedGraph:
    """Build the marked graph of a derivation tree.

    Node numbering: source 0, sink 1, series middles in preorder from 2.
    Register ids go to marked nodes in increasing node order.
    """
    edges = []
    marked = set()
    counter = itertools.count(2)

    def build(t, s, e):
        if t.kind == "term":
            edges.append(Edge(len(edges), s, e, t.rule.args[0]))
        elif t.kind == "ser":
            m = next(counter)
            if t.mark:
                marked.add(m)
            build(t.kids[0], s, m)
            build(t.kids[1], m, e)
        else:
            build(t.kids[0], s, e)
            build(t.kids[1], s, e)

    build(tree, 0, 1)
    if mark_source:
        marked.add(0)
    if mark_sink:
        marked.add(1)
    nodes = frozenset({0, 1} | {x for ed in edges for x in (ed.src, ed.trg)})
    g = Graph(nodes, tuple(edges), 0, 1)
    ids = tuple((n, i + 1) for i, n in enumerate(sorted(marked)))
    return MarkedGraph(g, frozenset(marked), ids, tree, mark_source, mark_sink)


def tree_derivation(tree: DTree, graph: Graph | None = None) -> list[DerivationStep]:
    """Replay a tree as a sequence of derivation steps starting from G_0 (leftmost order)."""
    g = graph if graph is not None else single_edge_graph(tree.var)
    steps = []
    pending = [(tree, g.edges[0])]
    while pending:
        t, e = pending.pop()
        step = DerivationStep(e, t.rule)
        fresh_eid = max(x.eid for x in g.edges) + 1
        g = apply_rule(g, step)
        steps.append(step)
        new_edges = [x for x in g.edges if x.eid >= fresh_eid]
        for kid, ne in reversed(list(zip(t.kids, new_edges))):
            pending.append((kid, ne))
    return steps


# --------------------------------------------------------------------------
# register-budget lift

@dataclass(frozen=True)
class BudgetedSPGG:
    """SPGG over variables (v, b): v derives graphs with exactly b marked interior nodes."""

    base: SPGG
    k: int
    rules: tuple  # (head, kind, args, mid_mark) with head/args budgeted variables
    starts: tuple  # budgeted start variables
    productive: frozenset

    @property
    def boundary_marks(self):
        return int(self.base.mark_source) + int(self.base.mark_sink)

    def rules_for(self, bv):
        return self._index.get(bv, ())

    def __post_init__(self):
        idx = defaultdict(list)
        for r in self.rules:
            idx[r[0]].append(r)
        object.__setattr__(self, "_index", {h: tuple(v) for h, v in idx.items()})


def lift_grammar(g: SPGG, k: int) -> BudgetedSPGG:
    if k < 0:
        raise GraphError("k must be nonnegative")
    free = k - int(g.mark_source) - int(g.mark_sink)
    if free < 0:
        raise GraphError("unsatisfiable budget: boundary marks exceed k")
    rules = []
    for r in g.rules:
        for b in range(free + 1):
            if r.kind == "term":
                if b == 0:
                    rules.append(((r.head, 0), "term", r.args, 0))
            elif r.kind == "ser":
                mids = {NEVER: (0,), OPTIONAL: (0, 1), ALWAYS: (1,)}[r.mark]
                for m in mids:
                    for b1 in range(b - m + 1):
                        b2 = b - m - b1
                        rules.append(((r.head, b), "ser", ((r.args[0], b1), (r.args[1], b2)), m))
            else:
                for b1 in range(b + 1):
                    rules.append(((r.head, b), "par", ((r.args[0], b1), (r.args[1], b - b1)), 0))
    prod = set()
    changed = True
    while changed:
        changed = False
        for head, kind, args, _ in rules:
            if head in prod:
                continue
            if kind == "term" or all(a in prod for a in args):
                prod.add(head)
                changed = True
    rules = tuple(r for r in rules if r[0] in prod and (r[1] == "term" or all(a in prod for a in r[2])))
    starts = tuple((g.start, b) for b in range(free + 1) if (g.start, b) in prod)
    if not starts and "no terminal rule reachable; language empty" not in validate_grammar(g):
        raise GraphError("unsatisfiable budget: every derivation forces more than k marks")
    return BudgetedSPGG(g, k, rules, starts, frozenset(prod))


def _rule_of(bg: BudgetedSPGG, head, kind, args, m) -> Rule:
    v = head[0]
    for r in bg.base.rules_for(v):
        if r.kind != kind:
            continue
        if kind == "term" and r.args == args:
            return r
        if kind != "term" and r.args == (args[0][0], args[1][0]):
            if kind == "par" or r.mark == ALWAYS and m == 1 or r.mark == NEVER and m == 0 \
                    or r.mark == OPTIONAL:
                return r
    raise GraphError("budgeted rule without base rule")


def minimal_tree(bg: BudgetedSPGG, bv) -> DTree:
    """Some smallest derivation tree for a budgeted variable (used for unobserved subgraphs)."""
    best = {}
    changed = True
    while changed:
        changed = False
        for head, kind, args, m in bg.rules:
            if kind == "term":
                cost = 1
            elif all(a in best for a in args):
                cost = 1 + best[args[0]][0] + best[args[1]][0]
            else:
                continue
            if head not in best or cost < best[head][0]:
                best[head] = (cost, (head, kind, args, m))
                changed = True
    if bv not in best:
        raise GraphError(f"{bv} is not productive")

    def build(x):
        head, kind, args, m = best[x][1]
        rule = _rule_of(bg, head, kind, args, m)
        if kind == "term":
            return DTree(head[0], rule)
        return DTree(head[0], rule, (build(args[0]), build(args[1])), bool(m))

    return build(bv)


def enumerate_graphs(bg: BudgetedSPGG, max_nodes: int, max_edges: int | None = None
                     ) -> Iterator[MarkedGraph]:
    """Yield every marked graph of the lifted grammar within the bounds, once per iso class.

    Graphs come out lazily in order of (middle nodes, edges), ties broken by
    canonical form.  Parallel rules can add edges without adding nodes, so an
    edge bound is also applied (default 2 * max_nodes).
    """
    if max_nodes < 2:
        raise GraphError("max_nodes must be >= 2")
    if max_edges is None:
        max_edges = 2 * max_nodes
    rules = defaultdict(list)
    for r in bg.rules:
        rules[r[0]].append((r, _rule_of(bg, *r)))
    memo = {}

    def exact(bv, mids, eds):
        """canonical form -> tree for bv with exactly `mids` middles and `eds` edges."""
        key = (bv, mids, eds)
        if key in memo:
            return memo[key]
        memo[key] = out = {}
        for (head, kind, args, m), rule in rules[bv]:
            if kind == "term":
                if mids == 0 and eds == 1:
                    out.setdefault(("E", args[0]), DTree(head[0], rule))
                continue
            extra = 1 if kind == "ser" else 0
            for m1 in range(mids - extra + 1):
                for e1 in range(1, eds):
                    left = exact(args[0], m1, e1)
                    if not left:
                        continue
                    right = exact(args[1], mids - extra - m1, eds - e1)
                    for c1, t1 in left.items():
                        for c2, t2 in right.items():
                            c = combine_canonical(kind, c1, c2, bool(m))
                            if c not in out:
                                out[c] = DTree(head[0], rule, (t1, t2), bool(m))
        return out

    for mids in range(max_nodes - 1):
        for eds in range(1, max_edges + 1):
            found = {}
            for sv in bg.starts:
                for c, t in exact(sv, mids, eds).items():
                    found.setdefault((int(bg.base.mark_source), c, int(bg.base.mark_sink)), t)
            for key in sorted(found, key=repr):
                yield graph_from_tree(found[key], bg.base.mark_source, bg.base.mark_sink)


# --------------------------------------------------------------------------
# symmetric closure

@dataclass(frozen=True)
class SymEdge:
    src: int
    trg: int
    label: str
    direction: int  # 1 forward, -1 backward
    eid: int


@dataclass(frozen=True)
class SymGraph:
    nodes: frozenset
    edges: tuple
    source: int
    sink: int
    marking: frozenset = frozenset()
    register_ids: tuple = ()

    def out_edges(self, n):
        return [e for e in self.edges if e.src == n]

    def forward_graph(self) -> Graph:
        fw = [Edge(e.eid, e.src, e.trg, e.label) for e in self.edges if e.direction == 1]
        return Graph(self.nodes, tuple(fw), self.source, self.sink)


def symmetric_closure(mg) -> SymGraph:
    if isinstance(mg, MarkedGraph):
        g, marking, ids = mg.graph, mg.marking, mg.register_ids
    else:
        g, marking, ids = mg, frozenset(), ()
    es = []
    for e in g.edges:
        es.append(SymEdge(e.src, e.trg, e.label, 1, e.eid))
        es.append(SymEdge(e.trg, e.src, e.label, -1, e.eid))
    return SymGraph(g.nodes, tuple(es), g.source, g.sink, marking, ids)


def is_series_parallel_shape(g: Graph) -> list[str]:
    """Check the structural invariants every derived graph satisfies; returns violations."""
    bad = []
    ins = defaultdict(int)
    outs = defaultdict(int)
    for e in g.edges:
        outs[e.src] += 1
        ins[e.trg] += 1
        if e.src == e.trg:
            bad.append("self loop")
    if g.source == g.sink:
        bad.append("source equals sink")
    srcs = [n for n in g.nodes if ins[n] == 0]
    sinks = [n for n in g.nodes if outs[n] == 0]
    if srcs != [g.source]:
        bad.append(f"sources {srcs}")
    if sinks != [g.sink]:
        bad.append(f"sinks {sinks}")
    # Kahn topological sort for acyclicity
    indeg = dict(ins)
    order = [n for n in g.nodes if indeg.get(n, 0) == 0]
    seen = 0
    while order:
        n = order.pop()
        seen += 1
        for e in g.out_edges(n):
            indeg[e.trg] -= 1
            if indeg[e.trg] == 0:
                order.append(e.trg)
    if seen != len(g.nodes):
        bad.append("cycle")
    return bad


def to_dot(mg: MarkedGraph, name="G") -> str:
    reg = mg.reg
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for n in sorted(mg.graph.nodes):
        label = {mg.graph.source: "nb", mg.graph.sink: "ne"}.get(n, f"n{n}")
        if n in reg:
            lines.append(f'  {n} [label="{label} [r{reg[n]}]", shape=box];')
        else:
            lines.append(f'  {n} [label="{label}"];')
    for e in mg.graph.edges:
        lines.append(f'  {e.src} -> {e.trg} [label="{e.label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
