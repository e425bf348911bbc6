"""Runs to composite words and back."""

from __future__ import annotations

from ..automata import pda_emptiness, pda_nfa_product, word_nfa
from ..graph import BudgetedSPGG, DTree, GraphError, MarkedGraph, _rule_of, graph_from_tree, minimal_tree, \
    symmetric_closure
from ..semantics import Bounds, Machine, Move, Run, SemanticsError, replay
from .alphabet import CompositeLetter, EncodingError, ExecRow, inactive_row, row_of
from .traces import BOT, build_trace_pda, serialize, tree_layout


def _connect(g, a, b):
    """Edge ids of the forward path from a to b that always takes the smallest usable edge."""
    if a == b:
        return []
    reach = {b}
    changed = True
    while changed:
        changed = False
        for e in g.edges:
            if e.trg in reach and e.src not in reach:
                reach.add(e.src)
                changed = True
    if a not in reach:
        raise EncodingError(f"node {b} is not reachable from {a}")
    out = []
    x = a
    while x != b:
        e = min((e for e in g.out_edges(x) if e.trg in reach), key=lambda e: e.eid)
        out.append(e.eid)
        x = e.trg
    return out


def run_blocks(run: Run) -> list[int]:
    """Block number (from 1) of every move."""
    out = []
    cur, last = 0, None
    for mv in run.moves:
        if mv.machine != last:
            cur += 1
            last = mv.machine
        out.append(cur)
    return out


def stretches(run: Run, m: int) -> dict:
    """Per machine, its moves split into maximal same-direction stretches of (index, move)."""
    out = {n: [] for n in range(1, m + 1)}
    for i, mv in enumerate(run.moves):
        s = out[mv.machine]
        if not s or s[-1][-1][1].edge.direction != mv.edge.direction:
            s.append([])
        s[-1].append((i, mv))
    return out


def encode_run(mg: MarkedGraph, machine: Machine, bounds: Bounds, run: Run) -> list:
    """The canonical composite word of a run (the encoder the automata are tested against)."""
    if mg.tree is None:
        raise EncodingError("graph has no derivation tree")
    m, rt = bounds.m, bounds.rt
    g = mg.graph
    by_id = {e.eid: e for e in g.edges}
    blocks = run_blocks(run)
    if blocks and blocks[-1] > bounds.p:
        raise EncodingError(f"run needs {blocks[-1]} blocks, bound is {bounds.p}")
    segs = stretches(run, m)
    row_edges = []
    row_ops = []
    for n in range(1, m + 1):
        if len(segs[n]) > rt:
            raise EncodingError(f"machine {n} reverses more than {bounds.r} times")
        for h in range(1, rt + 1):
            r = row_of(n, h, rt)
            if h > len(segs[n]):
                row_edges.append(frozenset(_connect(g, g.source, g.sink)))
                row_ops.append({})
                continue
            seg = segs[n][h - 1]
            d = 1 if h % 2 == 1 else -1
            if any(mv.edge.direction != d for _, mv in seg):
                raise EncodingError("stretch directions must alternate starting forward")
            fwd = [mv.edge.eid for _, mv in seg]
            if d == -1:
                fwd.reverse()
            x, y = by_id[fwd[0]].src, by_id[fwd[-1]].trg
            full = _connect(g, g.source, x) + fwd + _connect(g, y, g.sink)
            row_edges.append(frozenset(full))
            row_ops.append({mv.edge.eid: ExecRow(blocks[i], mv.transition[2], mv.transition[4],
                                                 mv.transition[3], r) for i, mv in seg})
    letters, eids, _ = serialize(mg.tree, row_edges, mg.mark_source, mg.mark_sink)
    q0 = machine.initial
    out = []
    for tl, eid in zip(letters, eids):
        rows = []
        for r in range(1, bounds.t + 1):
            op = row_ops[r - 1].get(eid) if eid is not None else None
            rows.append(op if op is not None else inactive_row(r, q0))
        out.append(CompositeLetter(tl, tuple(rows)))
    return out


def parse_traces(word, g: BudgetedSPGG, bounds: Bounds):
    """Re-parse the trace component with P; returns the derivation tree and visible leaf paths."""
    traces = [x.trace if isinstance(x, CompositeLetter) else x for x in word]
    pda = build_trace_pda(g, bounds)
    res = pda_emptiness(pda_nfa_product(pda, word_nfa(traces)), with_trace=True)
    if res is None:
        raise EncodingError("trace word is not generated by the grammar")
    steps = iter(res.trace)

    def parse(expected):
        q, top, x, q2, push = next(steps)
        if top != expected:
            raise EncodingError("inconsistent parse trace")
        return top, x, push, [parse(s) for s in push if s != BOT]

    root = parse(BOT)
    leaves = []

    def to_tree(node, path):
        top, x, push, kids = node
        _, bv, rm, *_ = top
        head = bv
        if not push:
            label = next(r.label for r in x.rows if r.label != "♭")
            leaves.append(path)
            for h, kind, args, mk in g.rules_for(bv):
                if kind == "term" and args[0] == label:
                    return DTree(bv[0], _rule_of(g, h, kind, args, mk))
            raise EncodingError("no terminal rule for parsed edge")
        vkids = [k for k in kids if k[0][0] == "V"]
        if len(vkids) == 2:
            a, b = vkids[0][0], vkids[1][0]
            if a[2] == rm and b[2] == rm:
                mark = 1 if a[7] else 0
                rule = (head, "ser", (a[1], b[1]), mark)
            else:
                rule = (head, "par", (a[1], b[1]), 0)
            if rule not in g.rules_for(bv):
                raise EncodingError(f"parsed rule {rule} not in the grammar")
            return DTree(bv[0], _rule_of(g, *rule),
                         (to_tree(vkids[0], path + (0,)), to_tree(vkids[1], path + (1,))), bool(rule[3]))
        child = vkids[0][0][1]
        for h, kind, args, mk in g.rules_for(bv):
            if kind != "par":
                continue
            if args[0] == child and args[1] in g.productive:
                return DTree(bv[0], _rule_of(g, h, kind, args, mk),
                             (to_tree(vkids[0], path + (0,)), minimal_tree(g, args[1])))
            if args[1] == child and args[0] in g.productive:
                return DTree(bv[0], _rule_of(g, h, kind, args, mk),
                             (minimal_tree(g, args[0]), to_tree(vkids[0], path + (1,))))
        raise EncodingError("no parallel rule for parsed branch")

    root_v = next(k for k in root[3] if k[0][0] == "V")
    tree = to_tree(root_v, ())
    return tree, leaves


def decode_witness(word, g: BudgetedSPGG, bounds: Bounds, machine: Machine):
    """(marked graph, run) described by a composite word accepted by the full product."""
    try:
        tree, leaves = parse_traces(word, g, bounds)
    except GraphError as exc:
        raise EncodingError(str(exc)) from None
    mg = graph_from_tree(tree, g.base.mark_source, g.base.mark_sink)
    layout = tree_layout(tree)
    edge_ids = iter([layout[p][2] for p in leaves])
    m, rt = bounds.m, bounds.rt
    ops = {(n, h): [] for n in range(1, m + 1) for h in range(1, rt + 1)}
    for x in word:
        if x.trace.kind != "edge":
            continue
        eid = next(edge_ids)
        for n in range(1, m + 1):
            for h in range(1, rt + 1):
                e = x.exec[row_of(n, h, rt) - 1]
                if e.block > 0:
                    label = x.trace.rows[e.trace_row - 1].label
                    ops[(n, h)].append((e.block, eid, label, e.read, e.write, e.succ))
    sg = symmetric_closure(mg)
    sym = {(e.eid, e.direction): e for e in sg.edges}
    moves = []
    for n in range(1, m + 1):
        q = machine.initial
        idx = 0
        for h in range(1, rt + 1):
            d = 1 if h % 2 == 1 else -1
            seq = ops[(n, h)] if d == 1 else list(reversed(ops[(n, h)]))
            for blk, eid, label, b, b2, q2 in seq:
                tr = (q, (label, d), b, q2, b2)
                moves.append((blk, n, idx, Move(n, sym[(eid, d)], tr)))
                idx += 1
                q = q2
    moves.sort(key=lambda x: x[:3])
    try:
        run = replay(sg, machine, m, [mv for *_, mv in moves])
    except SemanticsError as exc:
        raise EncodingError(f"decoded run does not replay: {exc}") from None
    return mg, run
