"""Independent reference implementations used by the tests."""

from __future__ import annotations

from collections import deque

import networkx as nx
from networkx.algorithms.isomorphism import categorical_multiedge_match, categorical_node_match

from spgverify.automata import LEFT, PDA, RIGHT, explicit_nfa, explicit_two_nfa
from spgverify.graph import ALWAYS, OPTIONAL, DerivationStep, apply_rule, single_edge_graph


def to_nx(g, marking=frozenset()):
    """MultiDiGraph with source/sink/marked flags on nodes and labels on edges."""
    h = nx.MultiDiGraph()
    for n in g.nodes:
        role = "s" if n == g.source else "t" if n == g.sink else "-"
        h.add_node(n, role=role + ("*" if n in marking else ""))
    for e in g.edges:
        h.add_edge(e.src, e.trg, label=e.label)
    return h


_NM = categorical_node_match("role", None)
_EM = categorical_multiedge_match("label", None)


def isomorphic(a, b):
    return nx.is_isomorphic(a, b, node_match=_NM, edge_match=_EM)


class IsoSet:
    """Set of graphs up to isomorphism (hash buckets by a cheap invariant)."""

    def __init__(self):
        self.buckets = {}
        self.items = []

    @staticmethod
    def _key(h):
        return (h.number_of_nodes(), h.number_of_edges(),
                tuple(sorted(d["label"] for *_, d in h.edges(data=True))),
                tuple(sorted(d["role"] for _, d in h.nodes(data=True))),
                tuple(sorted((h.in_degree(n), h.out_degree(n)) for n in h.nodes)))

    def add(self, h):
        bucket = self.buckets.setdefault(self._key(h), [])
        if any(isomorphic(h, x) for x in bucket):
            return False
        bucket.append(h)
        self.items.append(h)
        return True

    def __len__(self):
        return len(self.items)


def brute_force_language(g, max_nodes, max_edges, k=0):
    """Terminal marked graphs of an SPGG within the bounds, by exhaustive rewriting.

    Marks follow the rule annotations; at most k marked nodes.
    """
    start = single_edge_graph(g.start)
    marks0 = frozenset(n for n, on in ((start.source, g.mark_source), (start.sink, g.mark_sink)) if on)
    if len(marks0) > k:
        return IsoSet()
    seen = IsoSet()
    seen.add(to_nx(start, marks0))
    out = IsoSet()
    todo = deque([(start, marks0)])
    while todo:
        cur, marks = todo.popleft()
        var_edges = [e for e in cur.edges if e.label in g.variables]
        if not var_edges:
            out.add(to_nx(cur, marks))
            continue
        # the order of rewriting does not matter: expand the oldest variable edge
        e = min(var_edges, key=lambda e: e.eid)
        for r in g.rules_for(e.label):
            mid = cur.fresh_node() + 2
            nxt = apply_rule(cur, DerivationStep(e, r))
            if len(nxt.nodes) > max_nodes or len(nxt.edges) > max_edges:
                continue
            options = [marks]
            if r.kind == "ser":
                assert mid in nxt.nodes
                if r.mark == ALWAYS:
                    options = [marks | {mid}]
                elif r.mark == OPTIONAL:
                    options = [marks, marks | {mid}]
            for mk in options:
                if len(mk) <= k and seen.add(to_nx(nxt, mk)):
                    todo.append((nxt, mk))
    return out


def dfs_reachable(g, machine, m, r, f, max_steps):
    """Naive search: enumerate every run of at most max_steps moves (no state merging)."""
    from spgverify.semantics import count_reversals, initial_configuration, satisfies, successors

    def go(cfg, dirs, depth):
        if satisfies(cfg, f):
            return True
        if depth == max_steps:
            return False
        for i in range(1, m + 1):
            for c2, e, _ in successors(cfg, i, machine):
                d2 = list(dirs)
                d2[i - 1] = d2[i - 1] + (e.direction,)
                if count_reversals(d2[i - 1]) > r:
                    continue
                if go(c2, d2, depth + 1):
                    return True
        return False

    return go(initial_configuration(g, machine, m), [()] * m, 0)


def block_bounded_reach(mg, machine, bounds, f, max_steps):
    """BFS over (configuration, per-machine direction and reversals, last mover, blocks used)."""
    from spgverify.semantics import initial_configuration, satisfies, successors, symmetric_closure

    cfg = initial_configuration(symmetric_closure(mg), machine, bounds.m)
    start = (cfg, ((0, 0),) * bounds.m, 0, 0)
    seen = {(cfg.key(),) + start[1:]}
    todo = deque([(start, 0)])
    while todo:
        (cfg, dirs, last, blocks), depth = todo.popleft()
        if satisfies(cfg, f):
            return True
        if depth == max_steps:
            continue
        for i in range(1, bounds.m + 1):
            nb = blocks + (i != last)
            if nb > bounds.p:
                continue
            d, used = dirs[i - 1]
            for c2, e, _ in successors(cfg, i, machine):
                u = used + (1 if d and d != e.direction else 0)
                if u > bounds.r:
                    continue
                d2 = dirs[:i - 1] + ((e.direction, u),) + dirs[i:]
                key = (c2.key(), d2, i, nb)
                if key not in seen:
                    seen.add(key)
                    todo.append(((c2, d2, i, nb), depth + 1))
    return False


def random_instance(rng):
    """A small random verification instance: (grammar, machine, property, bounds)."""
    from spgverify.formats import parse_grammar
    from spgverify.semantics import Bounds, Machine, Or, atom

    letters = ["a", "b"][:rng.randint(1, 2)]
    n_vars = rng.randint(1, 3)
    names = [f"v{i}" for i in range(n_vars)]
    lines = ["start: v0"]
    for v in names:
        lines.append(f"{v} -> '{rng.choice(letters)}'")
    # the start variable always composes, so the language has more than one edge
    lines.append(f"v0 -> {rng.choice(names)} {rng.choice(['.', '||'])} {rng.choice(names)}")
    for _ in range(rng.randint(1, 4)):
        h, x, y = (rng.choice(names) for _ in range(3))
        if rng.random() < 0.5:
            lines.append(f"{h} -> {x} . {y}" + rng.choice(["", " [mark?]", " [mark]"]))
        else:
            lines.append(f"{h} -> {x} || {y}")
    grammar = parse_grammar("\n".join(lines) + "\n")
    states = ["q0", "q1", "q2"][:rng.randint(1, 3)]
    trans = set()
    for q in states:
        for s in letters:
            for d in (1, -1):
                for b in (0, 1):
                    for q2 in states:
                        if rng.random() < 0.2:
                            trans.add((q, (s, d), b, q2, rng.randint(0, 1)))
    machine = Machine(frozenset(states), "q0", frozenset(letters), frozenset(trans))
    m = rng.randint(1, 2)
    bounds = Bounds(m=m, r=rng.randint(0, 1), k=rng.randint(0, 1), p=rng.randint(1, 3))

    def rand_atom():
        return atom(*(rng.choice(states) for _ in range(rng.randint(1, m))))

    f = rand_atom()
    if rng.random() < 0.3:
        f = Or(f, rand_atom())
    return grammar, machine, f, bounds


def differential(rng, count, cap=2000, max_nodes=8, max_steps=20):
    """Run decide against the explicit oracles on `count` random instances.

    Instances whose language has more than `cap` graphs within max_nodes are
    redrawn, so the oracle always sees the complete enumeration.  Returns
    (records, violations) where each violation is a readable string.
    """
    import itertools

    from spgverify.encoding import decide
    from spgverify.graph import GraphError, enumerate_graphs, lift_grammar
    from spgverify.semantics import block_count, check_witness, oracle_reach

    records, violations = [], []
    while len(records) < count:
        g, mc, f, b = random_instance(rng)
        try:
            bg = lift_grammar(g, b.k)
        except GraphError:
            continue
        graphs = list(itertools.islice(enumerate_graphs(bg, max_nodes), cap + 1))
        if len(graphs) > cap:
            continue
        found = oracle_reach(mc, b, bg, f, max_nodes, max_steps, graphs=graphs)
        res = decide(mc, bg, b, f)
        tag = f"instance {len(records)} ({b})"
        if found is not None and block_count(found.run) <= b.p and not res.reachable:
            violations.append(f"{tag}: oracle witness within the block bound, decide Unreachable")
        if res.reachable:
            problems = check_witness(res.graph, mc, b, f, res.run)
            if problems:
                violations.append(f"{tag}: decide witness rejected: {problems}")
        elif any(block_bounded_reach(mg, mc, b, f, max_steps) for mg in graphs):
            violations.append(f"{tag}: block-bounded search finds a run, decide Unreachable")
        records.append((b, found is not None, res.reachable))
    return records, violations


# --------------------------------------------------------------------------
# random automata over {a, b}

LETTERS = ("a", "b")
TAPE = (LEFT, RIGHT) + LETTERS


def random_nfa(rng, n=3):
    delta = {}
    for q in range(n):
        for a in TAPE:
            succ = {q2 for q2 in range(n) if rng.random() < 0.4}
            if succ:
                delta[(q, a)] = succ
    acc = {q for q in range(n) if rng.random() < 0.4}
    return explicit_nfa(0, delta, acc)


def random_two_nfa(rng, n=3):
    delta = {}
    for q in range(n):
        for a in TAPE:
            moves = {(q2, d) for q2 in range(n) for d in (1, -1) if rng.random() < 0.2}
            if moves:
                delta[(q, a)] = sorted(moves)
    acc = {q for q in range(n) if rng.random() < 0.5}
    return explicit_two_nfa(0, delta, acc, range(n))


STACK = ("Z", "X", "Y")


def random_pda(rng, n=2):
    table = {}
    for q in range(n):
        for top in STACK:
            out = []
            for _ in range(rng.randint(1, 4)):
                x = rng.choice((None, LEFT, RIGHT) + LETTERS)
                push = tuple(rng.choice(STACK[1:]) for _ in range(rng.choice((0, 0, 1, 1, 2))))
                if top == "Z" and rng.random() < 0.9:
                    push = push + ("Z",)
                out.append((x, rng.randrange(n), push))
            table[(q, top)] = out
    return PDA(0, "Z", lambda q, top: table.get((q, top), ()))


def bfs_language(p: PDA, depth=8, max_len=8):
    """Words (up to max_len) accepted by runs whose stack never exceeds `depth` symbols."""
    start = (0, p.initial, (p.bottom,), ())
    seen = {start}
    todo = deque([start])
    found = set()
    while todo:
        phase, q, stack, w = todo.popleft()
        if phase == 2 and stack == (p.bottom,):
            found.add(w)
        if not stack:
            continue
        for x, q2, push in p.transitions(q, stack[0]):
            if x is LEFT:
                if phase != 0:
                    continue
                nphase, nw = 1, w
            elif x is RIGHT:
                if phase != 1:
                    continue
                nphase, nw = 2, w
            elif x is None:
                nphase, nw = phase, w
            else:
                if phase != 1 or len(w) == max_len:
                    continue
                nphase, nw = phase, w + (x,)
            nstack = tuple(push) + stack[1:]
            if len(nstack) > depth:
                continue
            nxt = (nphase, q2, nstack, nw)
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return found


def replay_trace(p: PDA, trace):
    """Execute an emptiness trace; return (letters read, highest stack)."""
    q, stack, read, high = p.initial, [p.bottom], [], 1
    for q0, top, x, q2, push in trace:
        assert q0 == q and stack and stack[0] == top
        assert (x, q2, tuple(push)) in [(a, b, tuple(c)) for a, b, c in p.transitions(q, top)]
        stack = list(push) + stack[1:]
        high = max(high, len(stack))
        q = q2
        if x is not None:
            read.append(x)
    assert stack == [p.bottom]
    return read, high
