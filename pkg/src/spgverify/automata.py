"""One-way NFAs, two-way NFAs and PDAs over lazily described alphabets.

Letters are arbitrary hashable values.  No automaton here ever materialises its
alphabet: transitions are produced on demand by callbacks, either for a given
letter (`step`) or, when a letter has to be invented, from a partial "hint"
letter (`moves`).  Endmarkers are added by the acceptance and emptiness layer.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable


class _Marker:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return (_marker, (self.name,))


def _marker(name):
    return LEFT if name == "|-" else RIGHT


LEFT = _Marker("|-")
RIGHT = _Marker("-|")
ENDMARKERS = (LEFT, RIGHT)


class AutomatonError(ValueError):
    pass


@dataclass
class NFA:
    """One-way NFA.  `step(q, a)` yields successor states on letter a.

    `moves(q, hint)` yields (letter, q2) pairs for letters compatible with
    `hint`; the default treats the hint as the letter itself.
    """

    initial: Hashable
    step: Callable
    accepting: Callable
    moves_fn: Callable | None = None
    name: str = "nfa"
    letter_ok: Callable | None = None

    def moves(self, q, hint):
        if self.moves_fn is not None:
            return self.moves_fn(q, hint)
        return [(hint, q2) for q2 in self.step(q, hint)]


@dataclass
class TwoNFA:
    """Two-way NFA; `step(q, a)` yields (q2, d) with d in {1, -1}."""

    initial: Hashable
    step: Callable
    accepting: Callable
    states: Iterable | None = None
    name: str = "2nfa"
    letter_ok: Callable | None = None


@dataclass
class PDA:
    """PDA; `transitions(q, top)` yields (letter or None, q2, pushed tuple).

    The pushed tuple lists the new stack top first.  Acceptance is by reaching
    a configuration with exactly the start symbol on the stack after reading
    the whole of |- w -|.
    """

    initial: Hashable
    bottom: Hashable
    transitions: Callable
    name: str = "pda"
    letter_ok: Callable | None = None


def explicit_nfa(initial, delta: dict, accepting, name="nfa") -> NFA:
    """NFA from a dict {(q, a): {q2, ...}}; letters include the endmarkers."""
    acc = frozenset(accepting)
    return NFA(initial, lambda q, a: delta.get((q, a), ()), acc.__contains__, name=name)


def explicit_two_nfa(initial, delta: dict, accepting, states, name="2nfa") -> TwoNFA:
    acc = frozenset(accepting)
    return TwoNFA(initial, lambda q, a: delta.get((q, a), ()), acc.__contains__, tuple(states), name)


def _check_letters(aut, w):
    if aut.letter_ok is None:
        return
    for a in w:
        if a in ENDMARKERS or not aut.letter_ok(a):
            raise AutomatonError(f"letter {a!r} outside the alphabet of {aut.name}")


# --------------------------------------------------------------------------
# membership

def nfa_run(a: NFA, letters, states=None) -> set:
    cur = {a.initial} if states is None else set(states)
    for x in letters:
        nxt = set()
        for q in cur:
            nxt.update(a.step(q, x))
        cur = nxt
        if not cur:
            break
    return cur


def nfa_accepts(a: NFA, w) -> bool:
    _check_letters(a, w)
    return any(a.accepting(q) for q in nfa_run(a, [LEFT, *w, RIGHT]))


def two_nfa_accepts(a: TwoNFA, w) -> bool:
    """Direct search of the configuration graph: accept on leaving the tape in an accepting state."""
    _check_letters(a, w)
    tape = [LEFT, *w, RIGHT]
    start = (0, a.initial)
    seen = {start}
    todo = deque([start])
    while todo:
        pos, q = todo.popleft()
        for q2, d in a.step(q, tape[pos]):
            npos = pos + d
            if npos < 0 or npos >= len(tape):
                if a.accepting(q2):
                    return True
                continue
            nxt = (npos, q2)
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return False


def pda_accepts(p: PDA, w) -> bool:
    _check_letters(p, w)
    return pda_emptiness(pda_nfa_product(p, word_nfa(w))) is not None


def word_nfa(w) -> NFA:
    """NFA accepting exactly the single word w."""
    w = tuple(w)
    tape = (LEFT, *w, RIGHT)

    def step(i, a):
        if i < len(tape) and tape[i] == a:
            return (i + 1,)
        return ()

    return NFA(0, step, lambda i: i == len(tape), name="word")


# --------------------------------------------------------------------------
# products

def nfa_product(machines: list) -> NFA:
    machines = list(machines)
    if not machines:
        raise AutomatonError("empty product")

    def step(qs, a):
        out = [()]
        for m, q in zip(machines, qs):
            nxt = list(m.step(q, a))
            if not nxt:
                return []
            out = [o + (x,) for o in out for x in nxt]
        return out

    def moves(qs, hint):
        first, rest = machines[0], machines[1:]
        for a, q0 in first.moves(qs[0], hint):
            partial = [(q0,)]
            for m, q in zip(rest, qs[1:]):
                nxt = list(m.step(q, a))
                partial = [p + (x,) for p in partial for x in nxt]
                if not partial:
                    break
            for p in partial:
                yield a, p

    return NFA(tuple(m.initial for m in machines), step,
               lambda qs: all(m.accepting(q) for m, q in zip(machines, qs)), moves,
               name="x".join(m.name for m in machines))


def pda_nfa_product(p: PDA, a: NFA) -> PDA:
    """PDA for L(p) & L(a).  The NFA may refine the PDA's letter (see NFA.moves).

    Product states are interned as integers (`unpack` maps them back to
    (PDA state, NFA state)); NFA moves are cached.
    """
    table = []
    index = {}
    moves = {}

    def intern(q, s):
        key = (q, s)
        i = index.get(key)
        if i is None:
            i = index[key] = len(table)
            table.append(key)
        return i

    def transitions(state, top):
        q, s = table[state]
        for x, q2, push in p.transitions(q, top):
            if x is None:
                yield None, intern(q2, s), push
            else:
                key = (s, x)
                mv = moves.get(key)
                if mv is None:
                    mv = moves[key] = list(a.moves(s, x))
                for full, s2 in mv:
                    yield full, intern(q2, s2), push

    out = PDA(intern(p.initial, a.initial), p.bottom, transitions, name=f"{p.name}x{a.name}")
    inner = getattr(p, "final_accepting", None)

    def final_accepting(st):
        q, s = table[st]
        return (inner is None or inner(q)) and a.accepting(s)

    out.final_accepting = final_accepting
    out.unpack = table.__getitem__
    return out


# --------------------------------------------------------------------------
# emptiness

_FIN = ("__fin__",)


@dataclass
class EmptinessResult:
    word: list
    trace: list  # PDA transitions (q, top, letter, q2, push) in execution order
    stats: dict = field(default_factory=dict)


def pda_emptiness(p: PDA, *, with_trace=False, limit=None, stats=None):
    """Return a word of L(p) (without endmarkers), or None when L(p) is empty.

    Saturation of pop summaries: for a control state s and stack symbol X the
    set of states reachable by popping X.  Only demanded (s, X) pairs are
    explored.  Control states are wrapped with a phase (before |-, inside,
    after -|) so that only words of the form |- w -| are considered, and a
    pop of the start symbol after -| leads to a final pseudo state.  When the
    PDA came out of pda_nfa_product, NFA acceptance is required at that point.
    """
    final = getattr(p, "final_accepting", None)

    def wrapped(state, top):
        if state == _FIN:
            return
        phase, q = state
        if phase == 2 and top == p.bottom:
            if final is None or final(q):
                yield None, _FIN, (), None
        for x, q2, push in p.transitions(q, top):
            if x is None:
                yield None, (phase, q2), tuple(push), (q, top, x, q2, tuple(push))
            elif x is LEFT:
                if phase == 0:
                    yield x, (1, q2), tuple(push), (q, top, x, q2, tuple(push))
            elif x is RIGHT:
                if phase == 1:
                    yield x, (2, q2), tuple(push), (q, top, x, q2, tuple(push))
            elif phase == 1:
                yield x, (phase, q2), tuple(push), (q, top, x, q2, tuple(push))

    sums: dict = {}      # (s, X) -> {exit: justification}
    waiting: dict = {}   # (s, X) -> list of chain continuations
    work = deque()
    count = 0

    def demand(key):
        if key in sums:
            return
        sums[key] = {}
        waiting[key] = []
        work.append(("expand", key))

    def add_exit(key, exit_state, just):
        d = sums[key]
        if exit_state in d:
            return
        d[exit_state] = just
        work.append(("exit", key, exit_state))

    root = ((0, p.initial), p.bottom)
    demand(root)
    while work:
        if _FIN in sums[root]:
            break
        item = work.popleft()
        count += 1
        if limit is not None and count > limit:
            raise AutomatonError("emptiness search limit exceeded")
        if item[0] == "expand":
            key = item[1]
            s, top = key
            for x, s2, push, info in wrapped(s, top):
                if not push:
                    add_exit(key, s2, (x, info, s2, ()))
                else:
                    _advance(key, (x, info, s2, push), 0, s2, (), demand, waiting, sums, add_exit)
        elif item[0] == "exit":
            key, exit_state = item[1], item[2]
            for origin, tr, idx, mids in list(waiting[key]):
                _advance(origin, tr, idx + 1, exit_state, mids + (exit_state,),
                         demand, waiting, sums, add_exit)
    if stats is not None:
        stats["summaries"] = len(sums)
        stats["steps"] = count
        stats["exits"] = sum(len(v) for v in sums.values())
    if _FIN not in sums[root]:
        return None
    word, trace = _rebuild(sums, root, _FIN)
    if with_trace:
        return EmptinessResult(word, trace, dict(stats or {}))
    return word


def _advance(origin, tr, idx, state, mids, demand, waiting, sums, add_exit):
    push = tr[3]
    if idx == len(push):
        add_exit(origin, state, (tr[0], tr[1], tr[2], mids))
        return
    key = (state, push[idx])
    demand(key)
    waiting[key].append((origin, tr, idx, mids))
    for ex in list(sums[key]):
        _advance(origin, tr, idx + 1, ex, mids + (ex,), demand, waiting, sums, add_exit)


def _rebuild(sums, key, exit_state):
    word, trace = [], []
    stack = [(key, exit_state)]
    while stack:
        (s, top), ex = stack.pop()
        x, info, s2, mids = sums[(s, top)][ex]
        if info is not None:
            trace.append(info)
        if x is not None and x not in ENDMARKERS:
            word.append(x)
        push = info[4] if info is not None else ()
        starts = (s2,) + tuple(mids[:-1]) if push else ()
        for i in reversed(range(len(push))):
            stack.append(((starts[i], push[i]), mids[i]))
    return word, trace


# --------------------------------------------------------------------------
# two-way to one-way

class _Init:
    def __repr__(self):
        return "init"


_INIT = _Init()


def two_nfa_to_nfa(a: TwoNFA) -> NFA:
    """Crossing-sequence construction.

    An NFA state is the crossing sequence at the boundary left of the next
    cell, plus whether the accepting exit is off the left end.  A crossing
    sequence lists (state, direction) pairs; no state repeats in the same
    direction, which is enough for a shortest accepting computation.
    """
    if a.states is None:
        raise AutomatonError("conversion needs the finite state set of the 2NFA")
    states = tuple(a.states)

    def compatible(left, letter, initial, last):
        out = set()

        def visit(cur, li, right):
            for q2, d in a.step(cur, letter):
                if d == -1:
                    if li < len(left) and left[li] == (q2, -1):
                        if li + 1 < len(left):
                            qn, dn = left[li + 1]
                            if dn == 1:
                                visit(qn, li + 2, right)
                        else:
                            out.add(right)
                else:
                    if (q2, 1) in right or (last and right):
                        continue
                    r2 = right + ((q2, 1),)
                    if li == len(left):
                        out.add(r2)
                    if not last:
                        for q3 in states:
                            if (q3, -1) not in r2:
                                visit(q3, li, r2 + ((q3, -1),))

        if initial:
            visit(a.initial, 0, ())
        elif not left:
            out.add(())
        elif left[0][1] == 1:
            visit(left[0][0], 1, ())
        return out

    def step(state, letter):
        if state is _INIT:
            if letter is not LEFT:
                return []
            res = []
            for exit_left in (False, True):
                lefts = [()] if not exit_left else [((q, -1),) for q in states if a.accepting(q)]
                for lft in lefts:
                    for right in compatible(lft, letter, True, False):
                        res.append((right, exit_left))
            return res
        if state[0] == "end" or letter is LEFT:
            return []
        left, exit_left = state
        last = letter is RIGHT
        res = []
        for right in compatible(left, letter, False, last):
            res.append(("end", right, exit_left) if last else (right, exit_left))
        return res

    def accepting(state):
        if state is _INIT or state[0] != "end":
            return False
        _, right, exit_left = state
        if exit_left:
            return right == ()
        return len(right) == 1 and a.accepting(right[0][0])

    return NFA(_INIT, step, accepting, name=f"nfa({a.name})", letter_ok=a.letter_ok)


def dump_fragment(aut, letters, depth=2):
    """Debug listing of states/transitions reachable within `depth` steps over `letters`."""
    lines = []
    if isinstance(aut, NFA):
        frontier = {aut.initial}
        for i in range(depth):
            nxt = set()
            for q in frontier:
                for x in letters:
                    for q2 in aut.step(q, x):
                        lines.append(f"{i}: {q!r} --{x!r}--> {q2!r}")
                        nxt.add(q2)
            frontier = nxt
    elif isinstance(aut, TwoNFA):
        frontier = {aut.initial}
        for i in range(depth):
            nxt = set()
            for q in frontier:
                for x in letters:
                    for q2, d in aut.step(q, x):
                        lines.append(f"{i}: {q!r} --{x!r},{d:+d}--> {q2!r}")
                        nxt.add(q2)
            frontier = nxt
    else:
        frontier = {(aut.initial, aut.bottom)}
        for i in range(depth):
            nxt = set()
            for q, top in frontier:
                for x, q2, push in aut.transitions(q, top):
                    lines.append(f"{i}: ({q!r},{top!r}) --{x!r}--> ({q2!r},{push!r})")
                    if push:
                        nxt.add((q2, push[0]))
            frontier = nxt
    return "\n".join(lines)
