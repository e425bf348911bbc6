"""Configuration-property detection on composite words."""

from __future__ import annotations

from collections import Counter
from itertools import product

from ..automata import LEFT, NFA, RIGHT
from ..semantics import Bounds, Machine, dnf
from .alphabet import FLAT, CompositeLetter, EncodingError, PropertyContext, TraceRow, row_of


def node_property(S, c1: PropertyContext, c2: PropertyContext, machines, f) -> bool:
    """The node predicate on a pair of contexts.

    `S` is a multiset of states, `machines` a nonempty set of machine indices
    and `f` maps each of them to a path block in 1..rt.  Odd blocks read their
    components from c1, even blocks from c2.
    """
    machines = sorted(set(machines))
    if not machines:
        raise EncodingError("empty machine set")
    rt = c1.rt
    comp = {}
    for n in machines:
        h = f[n]
        if not 1 <= h <= rt:
            raise EncodingError(f"path block {h} out of range for machine {n}")
        r = row_of(n, h, rt) - 1
        if r >= len(c1.blocks):
            raise EncodingError(f"machine {n} out of range")
        src = c1 if h % 2 == 1 else c2
        comp[n] = (src.blocks[r], src.states[r], r)
    if Counter(S) != Counter(comp[n][1] for n in machines):
        return False
    top = max(comp[n][0] for n in machines)
    for n0 in (n for n in machines if comp[n][0] == top):
        if any(not (comp[n][0] < top and c1.blocks[comp[n][2]] != c2.blocks[comp[n][2]])
               for n in machines if n != n0):
            continue
        for c in (c1, c2):
            s0 = c.rows[comp[n0][2]]
            if isinstance(s0, int):
                if all(c.rows[comp[n][2]] == s0 for n in machines):
                    return True
            elif isinstance(s0, TraceRow) and s0.label != FLAT:
                if all(isinstance(c.rows[comp[n][2]], TraceRow) and c.rows[comp[n][2]].label != FLAT
                       and c.rows[comp[n][2]].path_index == s0.path_index for n in machines):
                    return True
    return False


def build_property_nfa(f, bounds: Bounds, machine: Machine) -> NFA:
    """NFA over composite letters accepting words whose encoded run ends in a configuration satisfying f.

    The run's final configuration places machine n at the end of its last
    nonempty stretch h: for odd h the node its last op arrives at, for even h
    the node its word-first op leaves.  For each atom of a guessed disjunct
    the automaton guesses, at a shared-node letter, a node (a path index of
    that letter) and the machines standing there at the end, then verifies the
    guess on the rest of the word.  Obligations: ("never", row) forbids any
    active op on the row; ("next", row, q) demands that the row's next
    traversal is active with successor state q.

    State: (phase, disjunct, per-atom obligations or None, per-row
    (ever active, successor of the last traversal if active) or None once
    every atom is placed, at first letter).
    """
    m, rt, t = bounds.m, bounds.rt, bounds.t
    q0 = machine.initial
    disjuncts = [tuple(a.states for a in conj) for conj in dnf(f)]
    info0 = ((False, None),) * t

    def machine_options(n, info, letter, c, states, first):
        rows = [row_of(n, h, rt) for h in range(1, rt + 1)]
        out = []
        if first and not any(info[r - 1][0] for r in rows):
            out.append((q0, frozenset(("never", r) for r in rows)))
        for h in range(1, rt + 1):
            r = rows[h - 1]
            if letter.rows[r - 1] != c:
                continue
            later = rows[h:]
            if any(info[x - 1][0] for x in later):
                continue
            never = frozenset(("never", x) for x in later)
            if h % 2 == 1:
                q = info[r - 1][1]
                if q is not None:
                    out.append((q, never | {("never", r)}))
            elif not info[r - 1][0]:
                for q in set(states):
                    out.append((q, never | {("next", r, q)}))
        return out

    def guesses(states, info, letter, first):
        need = Counter(states)
        res = set()
        for c in set(letter.rows):
            opts = [machine_options(n, info, letter, c, states, first) for n in range(1, m + 1)]

            def rec(n, left, acc):
                if not +left:
                    res.add(acc)
                    return
                if n > m:
                    return
                rec(n + 1, left, acc)
                for q, obl in opts[n - 1]:
                    if left[q] > 0:
                        rec(n + 1, left - Counter([q]), acc | obl)

            rec(1, need, frozenset())
        return res

    def step(st, x):
        if x is LEFT:
            return [(1, i, (None,) * len(d), info0, True) for i, d in enumerate(disjuncts)] if st == 0 else []
        if st == 0 or st[0] != 1:
            return []
        _, di, dets, info, first = st
        if x is RIGHT:
            ok = all(d is not None and not any(o[0] == "next" for o in d) for d in dets)
            return [(2, di, dets, info, False)] if ok else []
        if not isinstance(x, CompositeLetter):
            return []
        if x.trace.kind == "node":
            choices = []
            for a, d in zip(disjuncts[di], dets):
                if d is None:
                    choices.append([None] + sorted(guesses(a, info, x.trace, first), key=sorted))
                else:
                    choices.append([d])
            # once every atom is placed the history is no longer consulted
            return [(1, di, combo, None if None not in combo else info, False)
                    for combo in product(*choices)]
        new_dets = []
        for d in dets:
            if d is None:
                new_dets.append(None)
                continue
            keep = set()
            for o in d:
                e = x.exec[o[1] - 1]
                if o[0] == "never":
                    if e.block > 0:
                        return []
                    keep.add(o)
                elif x.trace.rows[o[1] - 1].label != FLAT:
                    if e.block <= 0 or e.succ != o[2]:
                        return []
                else:
                    keep.add(o)
            new_dets.append(frozenset(keep))
        if info is not None:
            info = list(info)
            for r, tr in enumerate(x.trace.rows, 1):
                if tr.label != FLAT:
                    e = x.exec[r - 1]
                    info[r - 1] = (True, e.succ) if e.block > 0 else (info[r - 1][0], None)
            info = tuple(info)
        return [(1, di, tuple(new_dets), info, False)]

    return NFA(0, step, lambda st: st != 0 and st[0] == 2, name="A_s")
