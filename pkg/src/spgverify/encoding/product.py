"""The execution-side product over composite letters, with lazy guessing of execution rows."""

from __future__ import annotations

from itertools import product

from ..automata import ENDMARKERS, NFA
from ..semantics import Bounds, Machine
from .alphabet import CompositeLetter, TraceLetter, inactive_row
from .executions import build_exec_nfa
from .properties import build_property_nfa
from .registers import build_rw_nfa


def _memo(fn):
    cache = {}

    def wrapped(*args):
        try:
            return cache[args]
        except KeyError:
            out = cache[args] = fn(*args)
            return out

    return wrapped


def build_exec_product(machine: Machine, bounds: Bounds, f, first_mover: int | None = None) -> NFA:
    """Intersection of A_1..A_m, A_c and A_s.

    `moves(state, trace letter)` invents the execution rows: each A_n proposes
    rows for its machine, A_c proposes block numbers, and every component then
    steps on the full letter (the steps alone decide acceptance).
    """
    m, t = bounds.m, bounds.t
    q0 = machine.initial
    execs = [build_exec_nfa(machine, n, bounds) for n in range(1, m + 1)]
    rw = build_rw_nfa(bounds, first_mover)
    prop = build_property_nfa(f, bounds, machine)
    comps = execs + [rw, prop]
    idle = tuple(inactive_row(r, q0) for r in range(1, t + 1))
    # components are revisited in many product states: cache their steps
    steps = [_memo(a.step) for a in comps]
    proposals = [_memo(a.propose) for a in execs]
    choose_blocks = _memo(lambda st, rows: rw.choose_blocks(st, rows))

    def step(qs, x):
        out = [()]
        for a, q in zip(steps, qs):
            nxt = a(q, x)
            if not nxt:
                return []
            out = [o + (y,) for o in out for y in nxt]
        return out

    def moves(qs, hint):
        if hint in ENDMARKERS:
            return [(hint, q2) for q2 in step(qs, hint)]
        if not isinstance(hint, TraceLetter):
            return []
        if hint.kind == "node":
            x = CompositeLetter(hint, idle)
            return [(x, q2) for q2 in step(qs, x)]
        # per machine: (rows, successor state of A_n)
        per_machine = []
        for n in range(1, m + 1):
            options = []
            for combo in product(*proposals[n - 1](qs[n - 1], hint)):
                rows = list(idle)
                for e in combo:
                    rows[e.trace_row - 1] = e._replace(block=1) if e.block < 0 else e
                for q2 in steps[n - 1](qs[n - 1], CompositeLetter(hint, tuple(rows))):
                    options.append((combo, q2))
            if not options:
                return []
            per_machine.append(options)
        out = []
        for choice in product(*per_machine):
            rows = list(idle)
            pending = []
            for combo, _ in choice:
                for e in combo:
                    rows[e.trace_row - 1] = e
                    if e.block < 0:
                        pending.append(e.trace_row)
            cand = choose_blocks(qs[m], tuple(pending))
            for blocks in product(*(cand[r] for r in pending)):
                full = list(rows)
                for r, b in zip(pending, blocks):
                    full[r - 1] = full[r - 1]._replace(block=b)
                x = CompositeLetter(hint, tuple(full))
                c2 = steps[m](qs[m], x)
                if not c2:
                    continue
                s2 = steps[m + 1](qs[m + 1], x)
                if not s2:
                    continue
                base = tuple(q2 for _, q2 in choice)
                for c in c2:
                    for s in s2:
                        out.append((x, base + (c, s)))
        return out

    def accepting(qs):
        return all(a.accepting(q) for a, q in zip(comps, qs))

    a = NFA(tuple(c.initial for c in comps), step, accepting, moves, name="A_e")
    a.components = comps
    return a

