"""Execution checkers: the one-way NFA used by decide and the reference two-way automaton.

Row (n, h) of a word describes the h-th same-direction stretch of machine n.
Odd stretches run along the word, even stretches against it.  Every row
traces a full source-to-sink path; the machine is active on one contiguous
part of it.  Consecutive stretches must meet: an odd stretch and the next one
end on the same node (in word order), an even stretch and the next one start
on the same node.  Only trailing stretches may be empty.
"""

from __future__ import annotations

from collections import defaultdict

from ..automata import LEFT, NFA, RIGHT, TwoNFA
from ..semantics import Bounds, Machine
from .alphabet import FLAT, CompositeLetter, EncodingError, Execution, ExecRow, row_of

# row status
BEFORE, ACTIVE, ENDED, CLOSED = 0, 1, 2, 3
# pending obligations on a row's next traversal
NONE, MUST_END, MUST_START, START_OR_CLOSE = 0, 1, 2, 3
# summary entry already checked against the neighbouring stretch
DONE = "done"


class _Delta:
    """Transition lookups of a machine."""

    def __init__(self, machine: Machine):
        self.all = machine.transitions
        self.by_label = defaultdict(list)  # (sigma, d) -> transitions
        self.pred = defaultdict(set)  # (sigma, d, b, q2, b2) -> {q}
        for tr in sorted(machine.transitions):
            q, (s, d), b, q2, b2 = tr
            self.by_label[(s, d)].append(tr)
            self.pred[(s, d, b, q2, b2)].add(q)

    def ok(self, q, sigma, d, b, q2, b2):
        return (q, (sigma, d), b, q2, b2) in self.all


def _well_formed(x, rows, q0):
    """Exec rows of one machine read their own trace row; inactive rows are canonical."""
    for r in rows:
        e = x.exec[r - 1]
        if e.trace_row != r:
            return False
        if e.block == 0:
            if e != (0, 0, 0, q0, r):
                return False
        elif e.block < 0 or e.read not in (0, 1) or e.write not in (0, 1):
            return False
        elif x.trace.kind == "node" or x.trace.rows[r - 1].label == FLAT:
            return False
    return True


class _Positions:
    """Shared position bookkeeping: contiguity, meeting points and trailing emptiness."""

    def __init__(self, rt, rows):
        self.rt = rt
        self.rows = rows

    @staticmethod
    def start_partner(h, rt):
        # even h pairs with h + 1, odd h > 1 with h - 1
        if h % 2 == 0:
            return h + 1 if h < rt else None
        return h - 1 if h > 1 else None

    @staticmethod
    def end_partner(h, rt):
        # odd h pairs with h + 1, even h with h - 1
        if h % 2 == 1:
            return h + 1 if h < rt else None
        return h - 1

    def pattern(self, letter_rows):
        """Which of this machine's rows share a node in a node letter (first sharing stretch per stretch)."""
        cls = [letter_rows[r - 1] for r in self.rows]
        return tuple(cls.index(c) + 1 for c in cls)

    def step(self, status, oblig, prev, x):
        """Apply one edge letter; returns (status, oblig, starts, continues) or None.

        `starts`/`continues` list the stretches whose op at this letter is the
        first one / a later one.
        """
        rt = self.rt
        status = list(status)
        oblig = list(oblig)
        moving = {}
        for h in range(1, rt + 1):
            r = self.rows[h - 1]
            tr = x.trace.rows[r - 1]
            if tr.label != FLAT:
                moving[h] = x.exec[r - 1].block > 0
        starts, continues, ends = [], [], []
        for h, act in moving.items():
            s, o = status[h - 1], oblig[h - 1]
            if act:
                if s in (ENDED, CLOSED) or o == MUST_END:
                    return None
                if s == BEFORE:
                    starts.append(h)
                else:
                    continues.append(h)
                oblig[h - 1] = NONE
            else:
                if o == MUST_START:
                    return None
                if o == START_OR_CLOSE:
                    status[h - 1] = CLOSED
                    oblig[h - 1] = NONE
                elif s == BEFORE and h == 1:
                    status[h - 1] = CLOSED
                elif s == ACTIVE:
                    ends.append(h)
                    oblig[h - 1] = NONE
        for h in starts:
            status[h - 1] = ACTIVE
        for h in ends:
            status[h - 1] = ENDED
        cls = {h: prev[h - 1] for h in range(1, rt + 1)}
        for h in starts:
            b = self.start_partner(h, rt)
            if b is None or b in starts:
                continue
            sb = status[b - 1]
            later = b == h + 1
            if sb == BEFORE:
                if cls[b] == cls[h]:
                    oblig[b - 1] = START_OR_CLOSE if later else MUST_START
                elif later:
                    status[b - 1] = CLOSED
                else:
                    return None
            elif sb == CLOSED and not later:
                return None
        if not self._ends(status, oblig, ends, cls):
            return None
        return tuple(status), tuple(oblig), starts, continues

    def _ends(self, status, oblig, ends, cls):
        rt = self.rt
        for h in ends:
            b = self.end_partner(h, rt)
            if b is None or b in ends:
                continue
            sb = status[b - 1]
            later = b == h + 1
            if sb == ACTIVE:
                if cls is not None and cls[b] != cls[h]:
                    return False
                oblig[b - 1] = MUST_END
            elif sb == BEFORE:
                if not later:
                    return False
                status[b - 1] = CLOSED
                oblig[b - 1] = NONE
            elif sb == CLOSED and not later:
                return False
        return True

    def finish(self, status, oblig):
        """Close every running stretch at the sink; returns the number of nonempty stretches or None."""
        status = list(status)
        oblig = list(oblig)
        if MUST_START in oblig:
            return None
        ends = [h for h in range(1, self.rt + 1) if status[h - 1] == ACTIVE]
        for h in ends:
            status[h - 1] = ENDED
        if not self._ends(status, oblig, ends, None):
            return None
        done = [s == ENDED for s in status]
        n = sum(done)
        if done != [True] * n + [False] * (self.rt - n):
            return None
        return n


def build_exec_nfa(machine: Machine, n: int, bounds: Bounds) -> NFA:
    """One-way checker for machine n's rows (the automaton decide uses).

    State: (phase, sharing pattern of the last node letter, status, obligations, summaries).
    The summary of an odd stretch is (first op, current state); of an even
    stretch (state after its word-first op, word-last op).  Ops are
    (sigma, b, b', q').  Stretch 1 is checked eagerly from q0; the link between
    two neighbouring stretches is checked as soon as both sides are known and
    the entries are then replaced by DONE.
    """
    if not 1 <= n <= bounds.m:
        raise EncodingError(f"machine index {n} out of range")
    rt = bounds.rt
    rows = tuple(row_of(n, h, rt) for h in range(1, rt + 1))
    q0 = machine.initial
    dl = _Delta(machine)
    pos = _Positions(rt, rows)
    init = (0, None, (BEFORE,) * rt, (NONE,) * rt, ((None, q0),) + ((None, None),) * (rt - 1))

    def settle(status, summ):
        """Check every link between neighbouring stretches whose two sides are known, then forget them."""
        summ = list(summ)
        for h in range(2, rt + 1):
            (a0, c0), (a1, c1) = summ[h - 2], summ[h - 1]
            if h % 2 == 1:
                # even h-1 ends (in time) in state a0; odd h starts with op a1
                if a0 not in (None, DONE) and a1 not in (None, DONE):
                    if not dl.ok(a0, a1[0], 1, a1[1], a1[3], a1[2]):
                        return None
                    summ[h - 2], summ[h - 1] = (DONE, c0), (DONE, c1)
            elif status[h - 2] == ENDED and status[h - 1] == ENDED and c1 != DONE:
                # odd h-1 ends in state c0; even h starts (in time) with op c1
                if not dl.ok(c0, c1[0], -1, c1[1], c1[3], c1[2]):
                    return None
                summ[h - 2], summ[h - 1] = (a0, DONE), (a1, DONE)
        return tuple(summ)

    def step(st, x):
        phase, prev, status, oblig, summ = st
        if x is LEFT:
            return [(1,) + st[1:]] if phase == 0 else []
        if phase != 1:
            return []
        if x is RIGHT:
            if prev is None or pos.finish(status, oblig) is None:
                return []
            ended = tuple(ENDED if s == ACTIVE else s for s in status)
            summ = settle(ended, summ)
            if summ is None:
                return []
            return [(2, None, ended, oblig, summ)]
        if not isinstance(x, CompositeLetter) or not _well_formed(x, rows, q0):
            return []
        if x.trace.kind == "node":
            return [(1, pos.pattern(x.trace.rows), status, oblig, summ)]
        if prev is None:
            return []
        res = pos.step(status, oblig, prev, x)
        if res is None:
            return []
        status2, oblig2, starts, continues = res
        summ = list(summ)
        for h in starts + continues:
            r = rows[h - 1]
            e = x.exec[r - 1]
            op = (x.trace.rows[r - 1].label, e.read, e.write, e.succ)
            a, c = summ[h - 1]
            if h % 2 == 1:
                if h == 1 or h in continues:
                    if not dl.ok(c, op[0], 1, op[1], op[3], op[2]):
                        return []
                summ[h - 1] = (op if h in starts and h > 1 else a, op[3])
            else:
                if h in starts:
                    summ[h - 1] = (op[3], op)
                else:
                    if not dl.ok(op[3], c[0], -1, c[1], c[3], c[2]):
                        return []
                    summ[h - 1] = (a, op)
        summ = settle(status2, summ)
        if summ is None:
            return []
        return [(1, None, status2, oblig2, summ)]

    def propose(st, trace):
        """Candidate exec rows for this machine on an edge letter (block -1 = to be chosen)."""
        phase, prev, status, oblig, summ = st
        per_row = []
        for h in range(1, rt + 1):
            r = rows[h - 1]
            tr = trace.rows[r - 1]
            idle = ExecRow(0, 0, 0, q0, r)
            if tr.label == FLAT:
                per_row.append([idle])
                continue
            opts = [] if oblig[h - 1] == MUST_START else [idle]
            if status[h - 1] in (BEFORE, ACTIVE) and oblig[h - 1] != MUST_END:
                reg = tr.src_reg if h % 2 == 1 else tr.trg_reg
                d = 1 if h % 2 == 1 else -1
                a, c = summ[h - 1]
                for q, _, b, q2, b2 in dl.by_label[(tr.label, d)]:
                    if not reg and (b or b2):
                        continue
                    if d == 1 and c is not None and q != c:
                        continue
                    if d == -1 and status[h - 1] == ACTIVE and q2 not in dl.pred[(c[0], -1, c[1], c[3], c[2])]:
                        continue
                    opts.append(ExecRow(-1, b, b2, q2, r))
                opts = list(dict.fromkeys(opts))
            if oblig[h - 1] == MUST_END:
                opts = [idle]
            per_row.append(opts)
        return per_row

    a = NFA(init, step, lambda st: st[0] == 2, name=f"A_{n}")
    a.propose = propose
    a.rows = rows
    return a


def build_exec_2nfa(machine: Machine, n: int, bounds: Bounds) -> TwoNFA:
    """Reference two-way checker for machine n.

    A left-to-right pass checks positions (as the one-way checker does, but
    without consulting the transition relation), the head returns to |-, and
    then it simulates the machine stretch by stretch: odd stretches reading
    rightwards, even stretches leftwards, turning on the endmarkers.
    """
    rt = bounds.rt
    rows = tuple(row_of(n, h, rt) for h in range(1, rt + 1))
    q0 = machine.initial
    pos = _Positions(rt, rows)
    acc = ("acc",)

    def step(st, x):
        tag = st[0]
        if tag == "A":
            _, started, prev, status, oblig = st
            if x is LEFT:
                return [] if started else [(("A", True, None, status, oblig), 1)]
            if x is RIGHT:
                count = pos.finish(status, oblig) if prev is not None else None
                if count is None:
                    return []
                if count == 0:
                    return [(acc, 1)]
                return [(("B", count), -1)]
            if not started or not isinstance(x, CompositeLetter) or not _well_formed(x, rows, q0):
                return []
            if x.trace.kind == "node":
                return [(("A", True, pos.pattern(x.trace.rows), status, oblig), 1)]
            if prev is None:
                return []
            res = pos.step(status, oblig, prev, x)
            if res is None:
                return []
            return [(("A", True, None, res[0], res[1]), 1)]
        if tag == "B":
            if x is LEFT:
                return [(("C", st[1], 1, q0), 1)]
            return [(st, -1)]
        if tag == "C":
            _, count, h, q = st
            d = 1 if h % 2 == 1 else -1
            if x is RIGHT or x is LEFT:
                if (x is RIGHT) != (d == 1):
                    return [(st, d)]
                if h == count:
                    return [(acc, d)]
                return [(("C", count, h + 1, q), -d)]
            r = rows[h - 1]
            e = x.exec[r - 1]
            if e.block <= 0:
                return [(st, d)]
            tr = x.trace.rows[r - 1]
            if (q, (tr.label, d), e.read, e.succ, e.write) not in machine.transitions:
                return []
            return [(("C", count, h, e.succ), d)]
        return []

    init = ("A", False, None, (BEFORE,) * rt, (NONE,) * rt)
    return TwoNFA(init, step, lambda st: st == acc, None, name=f"A~_{n}")


def extract_execution(word, n: int, bounds: Bounds, q0) -> Execution:
    """Machine n's execution read off a composite word (stretches in traversal order)."""
    rt = bounds.rt
    seq = [q0]
    for h in range(1, rt + 1):
        r = row_of(n, h, rt)
        parts = []
        for x in word:
            if not isinstance(x, CompositeLetter):
                raise EncodingError(f"not a composite letter: {x!r}")
            if len(x.exec) < r:
                raise EncodingError("letter has too few execution rows")
            e = x.exec[r - 1]
            if not 1 <= e.trace_row <= len(x.trace.rows):
                raise EncodingError("trace-row index out of range")
            if x.trace.kind != "edge" or e.block <= 0:
                continue
            tr = x.trace.rows[e.trace_row - 1]
            if tr.label == FLAT:
                continue
            parts.append(((tr.label, e.read, e.write), e.succ))
        if h % 2 == 0:
            parts.reverse()
        for step_, q in parts:
            seq += [step_, q]
    return Execution(tuple(seq))
