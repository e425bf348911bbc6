"""Read-write consistency: the one-way checker used by decide and the reference two-way automaton.

Operations are ordered by block number; inside a block they follow the
owning machine's traversal order.  An op at a node without register must
read and write 0.
"""

from __future__ import annotations

from ..automata import LEFT, NFA, RIGHT, TwoNFA
from ..semantics import Bounds
from .alphabet import CompositeLetter, RwCheckerState, machine_of


def _op_fn(k, j, b, b2):
    bit = 1 << (j - 1)
    out = []
    for v in range(1 << k):
        out.append((v & ~bit) | (bit if b2 else 0) if bool(v & bit) == bool(b) else -1)
    return tuple(out)


def _then(f, g):
    """Apply f, then g."""
    return tuple(-1 if x == -1 else g[x] for x in f)


def _departure_reg(x, r, h):
    tr = x.trace.rows[x.exec[r - 1].trace_row - 1]
    return tr.src_reg if h % 2 == 1 else tr.trg_reg


def build_rw_nfa(bounds: Bounds, first_mover: int | None = None) -> NFA:
    """One-way read-write checker.

    Each (block, row) piece of ops is summarised as a partial map on register
    valuations.  Odd rows compose along the word; even rows, read against
    their traversal order, compose the other way round.  At -| the pieces are
    chained in (block, row) order starting from the all-zero valuation.

    State: (phase, owner machine per block, (first, last) block per row in word
    order, non-identity pieces as sorted ((block, row), map) pairs).

    Consecutive blocks must belong to different machines.  With
    `first_mover` set, block 1 must belong to that machine (decide uses
    machine 1: the machines are identical, so this only removes renamings).
    """
    rt, p, k = bounds.rt, bounds.p, bounds.k
    t = bounds.t
    ident = tuple(range(1 << k))
    fns = {}

    def op_fn(j, b, b2):
        key = (j, b, b2)
        if key not in fns:
            fns[key] = _op_fn(k, j, b, b2)
        return fns[key]

    def span(fl, h):
        first, last = fl
        return (first, last) if h % 2 == 1 else (last, first)

    def monotone(blocks, n):
        hi = 0
        for h in range(1, rt + 1):
            fl = blocks[(n - 1) * rt + h - 1]
            if fl is None:
                continue
            lo, top = span(fl, h)
            if lo < hi:
                return False
            hi = top
        return True

    init = (0, (0,) * p, (None,) * t, ())

    def may_own(owner, blk, n):
        if owner[blk - 1] == n:
            return True
        if owner[blk - 1] or (blk == 1 and first_mover not in (None, n)):
            return False
        return (blk == 1 or owner[blk - 2] != n) and (blk == p or owner[blk] != n)

    def step(st, x):
        phase, owner, blocks, pieces = st
        if x is LEFT:
            return [(1,) + st[1:]] if phase == 0 else []
        if phase != 1:
            return []
        if x is RIGHT:
            used = [i + 1 for i, o in enumerate(owner) if o]
            if used != list(range(1, len(used) + 1)):
                return []
            pmap = dict(pieces)
            v = 0
            for blk in used:
                n = owner[blk - 1]
                for h in range(1, rt + 1):
                    f = pmap.get((blk, (n - 1) * rt + h))
                    if f is not None:
                        v = f[v]
                        if v == -1:
                            return []
            return [(2, owner, blocks, pieces)]
        if not isinstance(x, CompositeLetter):
            return []
        if x.trace.kind == "node":
            if any(e.block for e in x.exec):
                return []
            return [st]
        owner = list(owner)
        blocks = list(blocks)
        pmap = dict(pieces)
        touched = set()
        for r, e in enumerate(x.exec, 1):
            if e.block <= 0:
                continue
            n, h = machine_of(r, rt)
            blk = e.block
            if blk > p or not may_own(owner, blk, n):
                return []
            owner[blk - 1] = n
            fl = blocks[r - 1]
            if fl is None:
                blocks[r - 1] = (blk, blk)
            else:
                first, last = fl
                if (blk < last) if h % 2 == 1 else (blk > last):
                    return []
                blocks[r - 1] = (first, blk)
            touched.add(n)
            j = _departure_reg(x, r, h)
            if not j:
                if e.read or e.write:
                    return []
                continue
            if j > k:
                return []
            g = op_fn(j, e.read, e.write)
            f = pmap.get((blk, r), ident)
            f = _then(f, g) if h % 2 == 1 else _then(g, f)
            if all(v == -1 for v in f):
                return []
            if f == ident:
                pmap.pop((blk, r), None)
            else:
                pmap[(blk, r)] = f
        blocks = tuple(blocks)
        for n in touched:
            if not monotone(blocks, n):
                return []
        return [(1, tuple(owner), blocks, tuple(sorted(pmap.items())))]

    def choose_blocks(st, rows_needing):
        """Block numbers compatible with the state for each row (block -1 placeholders)."""
        _, owner, blocks, _ = st
        out = {}
        for r in rows_needing:
            n, h = machine_of(r, rt)
            fl = blocks[r - 1]
            lo, hi = 1, p
            if fl is not None:
                if h % 2 == 1:
                    lo = fl[1]
                else:
                    hi = fl[1]
            # stretches before h end no later than this op; stretches after start no earlier
            for h2 in range(1, rt + 1):
                f2 = blocks[(n - 1) * rt + h2 - 1]
                if f2 is None or h2 == h:
                    continue
                a, b = span(f2, h2)
                if h2 < h:
                    lo = max(lo, b)
                else:
                    hi = min(hi, a)
            out[r] = [b for b in range(lo, hi + 1) if may_own(owner, b, n)]
        return out

    a = NFA(init, step, lambda st: st[0] == 2, name="A_c")
    a.choose_blocks = choose_blocks
    return a


def build_rw_2nfa(bounds: Bounds) -> TwoNFA:
    """Reference two-way checker following the assumption/guarantee protocol.

    The head sweeps machine 1's rows (odd rows rightwards, even rows
    leftwards), rewinds to |- when needed, continues with machine 2, and so on.
    Entering a new block guesses the valuation at its start (an assumption);
    leaving a block records the valuation at its end (a guarantee).  At the
    end every assumption for block i + 1 must match the guarantee for block i
    and the assumption for block 1 must be the all-zero valuation.
    """
    m, rt, p, k = bounds.m, bounds.rt, bounds.p, bounds.k
    acc = ("acc",)
    start = RwCheckerState((0,) * m, (0,) * m, frozenset(), (), ())

    def close_block(cs, n):
        blk = cs.block[n - 1]
        if not blk:
            return cs
        g = dict(cs.guarantee)
        g[blk] = cs.val[n - 1]
        return cs._replace(guarantee=tuple(sorted(g.items())))

    def final_ok(cs):
        if cs.seen != frozenset(range(1, len(cs.seen) + 1)):
            return False
        g = dict(cs.guarantee)
        for blk, v in cs.assume:
            want = 0 if blk == 1 else g.get(blk - 1)
            if want != v:
                return False
        return True

    def op(cs, n, blk, j, b, b2):
        """Results of executing one op of machine n in block blk (a list, one per guess)."""
        outs = []
        if blk != cs.block[n - 1]:
            if blk < cs.block[n - 1] or blk in cs.seen or blk > p:
                return []
            cs = close_block(cs, n)
            for guess in range(1 << k):
                blocks = list(cs.block)
                vals = list(cs.val)
                blocks[n - 1] = blk
                vals[n - 1] = guess
                outs.append(cs._replace(block=tuple(blocks), val=tuple(vals), seen=cs.seen | {blk},
                                        assume=tuple(sorted(cs.assume + ((blk, guess),)))))
        else:
            outs.append(cs)
        res = []
        for c in outs:
            if not j:
                if b or b2:
                    continue
                res.append(c)
                continue
            if j > k:
                continue
            v = c.val[n - 1]
            bit = 1 << (j - 1)
            if bool(v & bit) != bool(b):
                continue
            vals = list(c.val)
            vals[n - 1] = (v & ~bit) | (bit if b2 else 0)
            res.append(c._replace(val=tuple(vals)))
        return res

    def step(st, x):
        tag = st[0]
        if tag == "init":
            return [(("S", 1, 1, start), 1)] if x is LEFT else []
        if tag == "R":  # rewind to |- before the next machine
            _, n, cs = st
            if x is LEFT:
                return [(("S", n, 1, cs), 1)]
            return [(st, -1)]
        if tag != "S":
            return []
        _, n, h, cs = st
        d = 1 if h % 2 == 1 else -1
        if x is LEFT or x is RIGHT:
            if (x is RIGHT) != (d == 1):
                return [(st, d)]
            if h < rt:
                return [(("S", n, h + 1, cs), -d)]
            cs = close_block(cs, n)
            if n < m:
                if d == 1:
                    return [(("R", n + 1, cs), -1)]
                return [(("S", n + 1, 1, cs), 1)]
            return [(acc, d)] if final_ok(cs) else []
        if not isinstance(x, CompositeLetter):
            return []
        r = (n - 1) * rt + h
        e = x.exec[r - 1]
        if e.block <= 0:
            return [(st, d)]
        if x.trace.kind != "edge":
            return []
        j = _departure_reg(x, r, h)
        return [(("S", n, h, c), d) for c in op(cs, n, e.block, j, e.read, e.write)]

    return TwoNFA(("init",), step, lambda st: st == acc, None, name="A~_c")
