"""The trace PDA P, the register-identifier NFA A_r, and the matching serializer.

Serialization convention (shared by P, the encoder and the decoder):

* the word is S(n_b) ser(root) S(n_e) where S(x) is a shared-node letter;
* ser(v1 . v2) = ser(v1) S(mid) ser(v2);
* ser(v1 || v2) with rows split R1 | R2 = ser(v1, R1) S ser(v2, R2); when one
  side carries no rows only the other side is serialized and the silent side
  merely has to be derivable within its mark budget; when v1 and v2 are the
  same budgeted variable the branch with the smaller row mask comes first;
* a shared-node letter gives every row the smallest row index among the rows
  currently standing on the same node (rows that still wait at a fork or that
  already reached a join count as standing there);
* an edge letter gives every traversing row (label, src id, trg id, smallest
  traversing row) and every other row (FLAT, 0, 0, own row).

Register ids are handed out by a counter: n_b, then n_e, then marked series
middles that some row visits, in the order their series rule is expanded.
"""

from __future__ import annotations

from ..automata import LEFT, NFA, PDA, RIGHT
from ..graph import BudgetedSPGG, DTree
from ..semantics import Bounds
from .alphabet import FLAT, EncodingError, TraceLetter, edge_letter, node_letter

BOT = "⊥"
END = ("END",)


def _replace(classes, old, new):
    out = [c for c in classes if c != old] if old else list(classes)
    out.append(new)
    return tuple(sorted(out))


def _root_ids(g: BudgetedSPGG):
    counter = 0
    sid = tid = 0
    if g.base.mark_source:
        counter += 1
        sid = counter
    if g.base.mark_sink:
        counter += 1
        tid = counter
    return sid, tid, counter


def _splits(rmask):
    """Ordered splits R1 | R2 of a row mask with both sides nonempty."""
    sub = (rmask - 1) & rmask
    while sub:
        yield sub, rmask ^ sub
        sub = (sub - 1) & rmask


def build_trace_pda(g: BudgetedSPGG, bounds: Bounds) -> PDA:
    """PDA over trace letters accepting the serialized path tuples of the lifted grammar.

    Stack symbols for variables are ("V", budgeted var, row mask, outside classes,
    outside rows at the source, outside rows at the sink, source id, sink id).
    The control state counts the register ids handed out so far.
    """
    t = bounds.t
    full = (1 << t) - 1
    everyone = node_letter([full], t)
    sid0, tid0, counter0 = _root_ids(g)

    def transitions(q, top):
        if top == BOT:
            if q is None:
                for sv in g.starts:
                    root = ("V", sv, full, (), 0, 0, sid0, tid0)
                    yield LEFT, counter0, (("L", everyone), root, ("L", everyone), END, BOT)
            return
        if top == END:
            yield RIGHT, q, ()
            return
        if top[0] == "L":
            yield top[1], q, ()
            return
        _, bv, rm, outside, src, snk, sid, tid = top
        for head, kind, args, mark in g.rules_for(bv):
            if kind == "term":
                yield edge_letter(args[0], rm, sid, tid, t), q, ()
            elif kind == "ser":
                mid = q + 1 if mark else 0
                yield None, q + (1 if mark else 0), (
                    ("V", args[0], rm, outside, src, 0, sid, mid),
                    ("L", node_letter(outside + (rm,), t)),
                    ("V", args[1], rm, outside, 0, snk, mid, tid))
            else:
                b1, b2 = args
                if b2 in g.productive:
                    yield None, q, (("V", b1, rm, outside, src, snk, sid, tid),)
                if b1 in g.productive and b1 != b2:
                    yield None, q, (("V", b2, rm, outside, src, snk, sid, tid),)
                for r1, r2 in _splits(rm):
                    if b1 == b2 and r1 > r2:
                        continue  # mirror image of the split (r2, r1)
                    src2, snk2 = src | r2, snk | r1
                    o1 = _replace(outside, src, src2)
                    o2 = _replace(outside, snk, snk2)
                    omid = _replace(o1, snk, snk2)
                    yield None, q, (("V", b1, r1, o1, src2, snk, sid, tid),
                                    ("L", node_letter(omid, t)),
                                    ("V", b2, r2, o2, src, snk2, sid, tid))

    def letter_ok(x):
        return isinstance(x, TraceLetter) and len(x.rows) == t

    return PDA(None, BOT, transitions, name="P", letter_ok=letter_ok)


# --------------------------------------------------------------------------
# register identifiers

def build_register_nfa(bounds: Bounds) -> NFA:
    """NFA over trace letters checking register ids.

    State: (phase, ids per row, ids used by distinct nodes, rows that just moved, their target id).
    Phase 0 is before |-, 1 expects a shared-node letter, 2 an edge letter.
    Row ids are -1 while a row still stands on a node whose id was never seen
    (only the source before the first edge).
    """
    t = bounds.t
    k = bounds.k
    init = (0, (-1,) * t, frozenset(), 0, 0)

    def step(st, x):
        phase, ids, used, moved, moved_id = st
        if x is LEFT:
            return [(1,) + st[1:]] if phase == 0 else []
        if phase == 0:
            return []
        if x is RIGHT:
            return [(3,) + st[1:]] if phase == 2 and not moved else []
        if phase == 3:
            return []
        if x.kind == "node":
            if phase != 1:
                return []
            ids = list(ids)
            used = set(used)
            groups = {}
            for i, c in enumerate(x.rows):
                groups.setdefault(c, []).append(i)
            for members in groups.values():
                stay = [i for i in members if not moved >> i & 1]
                came = [i for i in members if moved >> i & 1]
                known = {ids[i] for i in stay if ids[i] != -1}
                if came:
                    if stay:
                        if known and known != {moved_id}:
                            return []
                    elif moved_id:
                        if moved_id in used:
                            return []
                        used.add(moved_id)
                    known = {moved_id}
                if len(known) > 1:
                    return []
                if known:
                    v = known.pop()
                    for i in members:
                        ids[i] = v
            return [(2, tuple(ids), frozenset(used), 0, 0)]
        if phase != 2:
            return []
        movers = [i for i, row in enumerate(x.rows) if row.label != FLAT]
        if not movers:
            return []
        regs = {(x.rows[i].src_reg, x.rows[i].trg_reg) for i in movers}
        if len(regs) != 1:
            return []
        (s, e), = regs
        if not (0 <= s <= k and 0 <= e <= k):
            return []
        ids = list(ids)
        used = set(used)
        for i in movers:
            if ids[i] == -1:
                if s and s in used:
                    return []
                if s:
                    used.add(s)
                for j in range(t):
                    if ids[j] == -1:
                        ids[j] = s
            elif ids[i] != s:
                return []
        m = 0
        for i in movers:
            m |= 1 << i
        return [(1, tuple(ids), frozenset(used), m, e)]

    return NFA(init, step, lambda st: st[0] == 3, name="A_r",
               letter_ok=lambda x: isinstance(x, TraceLetter) and len(x.rows) == t)


# --------------------------------------------------------------------------
# serializer mirroring P

def tree_layout(tree: DTree):
    """Node and edge numbering of graph_from_tree, keyed by child-index paths.

    Returns {path: (source, sink, mid or eid)} where the last entry is the
    middle node of a series node, the edge id of a leaf, and None otherwise.
    """
    out = {}
    counter = [2]
    edges = [0]

    def build(t, path, s, e):
        if t.kind == "term":
            out[path] = (s, e, edges[0])
            edges[0] += 1
        elif t.kind == "ser":
            m = counter[0]
            counter[0] += 1
            out[path] = (s, e, m)
            build(t.kids[0], path + (0,), s, m)
            build(t.kids[1], path + (1,), m, e)
        else:
            out[path] = (s, e, None)
            build(t.kids[0], path + (0,), s, e)
            build(t.kids[1], path + (1,), s, e)

    build(tree, (), 0, 1)
    return out


def _edges_below(tree, path, layout, acc):
    if tree.kind == "term":
        acc[path] = frozenset({layout[path][2]})
        return acc[path]
    s = frozenset()
    for i, kid in enumerate(tree.kids):
        s |= _edges_below(kid, path + (i,), layout, acc)
    acc[path] = s
    return s


def serialize(tree: DTree, row_edges: list, mark_source=False, mark_sink=False):
    """Trace word for rows whose paths use the given edge-id sets (row 1 first).

    Returns (letters, edge ids per letter or None, P's id per marked visible node).
    """
    t = len(row_edges)
    full = (1 << t) - 1
    layout = tree_layout(tree)
    below = {}
    _edges_below(tree, (), layout, below)

    def rows_using(path):
        es = below[path]
        m = 0
        for i, re in enumerate(row_edges):
            if re & es:
                m |= 1 << i
        return m

    ids = {}
    counter = 0
    if mark_source:
        counter += 1
        ids[0] = counter
    if mark_sink:
        counter += 1
        ids[1] = counter
    letters = [node_letter([full], t)]
    eids = [None]

    def ser(tr, path, rm, outside, src, snk):
        nonlocal counter
        s, e, extra = layout[path]
        if tr.kind == "term":
            letters.append(edge_letter(tr.rule.args[0], rm, ids.get(s, 0), ids.get(e, 0), t))
            eids.append(extra)
        elif tr.kind == "ser":
            if tr.mark:
                counter += 1
                ids[extra] = counter
            ser(tr.kids[0], path + (0,), rm, outside, src, 0)
            letters.append(node_letter(outside + (rm,), t))
            eids.append(None)
            ser(tr.kids[1], path + (1,), rm, outside, 0, snk)
        else:
            r1 = rows_using(path + (0,)) & rm
            r2 = rows_using(path + (1,)) & rm
            if r1 & r2 or r1 | r2 != rm:
                raise EncodingError("a row uses both branches of a parallel composition")
            if not r2:
                ser(tr.kids[0], path + (0,), rm, outside, src, snk)
            elif not r1:
                ser(tr.kids[1], path + (1,), rm, outside, src, snk)
            else:
                k1, k2 = tr.kids
                p1, p2 = path + (0,), path + (1,)
                if (k1.var, k1.n_marks()) == (k2.var, k2.n_marks()) and r1 > r2:
                    # interchangeable branches: the one holding the smaller row mask goes first
                    k1, k2, p1, p2, r1, r2 = k2, k1, p2, p1, r2, r1
                src2, snk2 = src | r2, snk | r1
                o1 = _replace(outside, src, src2)
                ser(k1, p1, r1, o1, src2, snk)
                letters.append(node_letter(_replace(o1, snk, snk2), t))
                eids.append(None)
                ser(k2, p2, r2, _replace(outside, snk, snk2), src, snk2)

    if rows_using(()) != full:
        raise EncodingError("every row needs a full source-to-sink path")
    ser(tree, (), full, (), 0, 0)
    letters.append(node_letter([full], t))
    eids.append(None)
    return letters, eids, ids


def check_alternation(letters) -> bool:
    """Shared-node and edge letters alternate, starting and ending with shared-node letters."""
    if not letters or len(letters) % 2 == 0:
        return False
    return all((x.kind == "node") == (i % 2 == 0) for i, x in enumerate(letters))
