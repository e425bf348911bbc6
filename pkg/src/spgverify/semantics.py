"""Machines on symmetric closures, runs, configuration properties and the BFS oracle."""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable

from .graph import MarkedGraph, SymEdge, SymGraph, enumerate_graphs, symmetric_closure


class SemanticsError(ValueError):
    pass


@dataclass(frozen=True)
class Machine:
    states: frozenset
    initial: str
    alphabet: frozenset
    transitions: frozenset  # (q, (sigma, d), b, q2, b2)

    def __post_init__(self):
        if self.initial not in self.states:
            raise SemanticsError(f"initial state {self.initial} not declared")
        for q, (s, d), b, q2, b2 in self.transitions:
            if q not in self.states or q2 not in self.states:
                raise SemanticsError(f"unknown state in transition {q} -> {q2}")
            if s not in self.alphabet:
                raise SemanticsError(f"unknown letter {s}")
            if d not in (1, -1) or b not in (0, 1) or b2 not in (0, 1):
                raise SemanticsError("malformed transition")
        index = {}
        for t in self.transitions:
            index.setdefault((t[0], t[1], t[2]), []).append(t)
        object.__setattr__(self, "_by_src", {k: tuple(sorted(v)) for k, v in index.items()})

    def moves(self, q, label, read):
        return self._by_src.get((q, label, read), ())


@dataclass(frozen=True)
class Bounds:
    m: int
    r: int
    k: int
    p: int

    def __post_init__(self):
        if self.m < 1 or self.r < 0 or self.k < 0 or self.p < 1:
            raise SemanticsError(f"inconsistent bounds {self}")

    @property
    def rt(self):
        return self.r + 1

    @property
    def t(self):
        return self.m * (self.r + 1)

    def row(self, n, h):
        """Trace row (0-based) for machine n and segment h, both 1-based."""
        return (n - 1) * self.rt + (h - 1)


@dataclass(frozen=True)
class Configuration:
    """Positions are (node, state) per machine (index 0 is machine 1); `ones` holds nodes whose register is 1."""

    graph: SymGraph
    positions: tuple
    ones: frozenset = frozenset()

    def mu(self, n):
        return {(i + 1, q) for i, (x, q) in enumerate(self.positions) if x == n}

    def beta(self, n):
        return 1 if n in self.ones else 0

    def key(self):
        return (self.positions, self.ones)


@dataclass(frozen=True)
class Move:
    machine: int  # 1-based
    edge: SymEdge
    transition: tuple


@dataclass(frozen=True)
class Run:
    configurations: tuple
    moves: tuple


# --------------------------------------------------------------------------
# properties

@dataclass(frozen=True)
class Atom:
    states: tuple  # sorted multiset

    def __str__(self):
        return "exists n . {" + ",".join(self.states) + "} <= mu(n)"


@dataclass(frozen=True)
class And:
    left: object
    right: object

    def __str__(self):
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class Or:
    left: object
    right: object

    def __str__(self):
        return f"({self.left} or {self.right})"


def atom(*states):
    if not states:
        raise SemanticsError("empty atom")
    return Atom(tuple(sorted(states)))


def dnf(f) -> list[tuple]:
    """Disjunctive normal form as a list of atom tuples."""
    if isinstance(f, Atom):
        return [(f,)]
    if isinstance(f, Or):
        return dnf(f.left) + dnf(f.right)
    if isinstance(f, And):
        return [a + b for a in dnf(f.left) for b in dnf(f.right)]
    raise SemanticsError(f"not a positive property: {f!r}")


def atoms(f) -> list[Atom]:
    return sorted({a for conj in dnf(f) for a in conj}, key=lambda a: a.states)


def check_property(f, machine: Machine, m: int):
    for a in atoms(f):
        if len(a.states) > m:
            raise SemanticsError(f"atom {a} mentions more than m={m} states")
        for q in a.states:
            if q not in machine.states:
                raise SemanticsError(f"unknown state {q} in property")


def satisfies(cfg: Configuration, f) -> bool:
    if isinstance(f, Atom):
        need = Counter(f.states)
        for n in cfg.graph.nodes:
            have = Counter(q for _, q in cfg.mu(n))
            if all(have[q] >= c for q, c in need.items()):
                return True
        return False
    if isinstance(f, And):
        return satisfies(cfg, f.left) and satisfies(cfg, f.right)
    if isinstance(f, Or):
        return satisfies(cfg, f.left) or satisfies(cfg, f.right)
    raise SemanticsError(f"not a positive property: {f!r}")


# --------------------------------------------------------------------------
# transition system

def initial_configuration(g, machine: Machine, m: int) -> Configuration:
    """All m machines at the source in the initial state, every register 0."""
    if m < 1:
        raise SemanticsError("m must be >= 1")
    if isinstance(g, MarkedGraph):
        g = symmetric_closure(g)
    return Configuration(g, tuple((g.source, machine.initial) for _ in range(m)), frozenset())


def successors(cfg: Configuration, i: int, machine: Machine):
    """All (cfg', edge, transition) with cfg ->_i cfg'; i is 1-based."""
    if not 1 <= i <= len(cfg.positions):
        raise SemanticsError(f"machine index {i} out of range")
    g = cfg.graph
    n, q = cfg.positions[i - 1]
    marked = n in g.marking
    read = cfg.beta(n) if marked else 0
    out = []
    for e in g.out_edges(n):
        for tr in machine.moves(q, (e.label, e.direction), read):
            b2 = tr[4]
            if not marked and b2 != 0:
                continue
            pos = list(cfg.positions)
            pos[i - 1] = (e.trg, tr[3])
            ones = cfg.ones
            if marked:
                ones = ones | {n} if b2 else ones - {n}
            out.append((Configuration(g, tuple(pos), frozenset(ones)), e, tr))
    return out


def replay(g, machine: Machine, m: int, moves: Iterable[Move]) -> Run:
    """Re-execute moves from the initial configuration; raises on any illegal step."""
    cfg = initial_configuration(g, machine, m)
    cfgs = [cfg]
    done = []
    for mv in moves:
        nxt = None
        for c2, e, tr in successors(cfg, mv.machine, machine):
            if (e.src, e.trg, e.label, e.direction, e.eid) == (
                    mv.edge.src, mv.edge.trg, mv.edge.label, mv.edge.direction, mv.edge.eid) \
                    and tr == mv.transition:
                nxt = c2
                break
        if nxt is None:
            raise SemanticsError(f"move {mv} not enabled")
        cfg = nxt
        cfgs.append(cfg)
        done.append(mv)
    return Run(tuple(cfgs), tuple(done))


def directions_of(run: Run, n: int) -> list[int]:
    return [mv.edge.direction for mv in run.moves if mv.machine == n]


def count_reversals(dirs) -> int:
    return sum(1 for a, b in zip(dirs, dirs[1:]) if a != b)


def reversal_counts(run: Run, m: int | None = None) -> dict:
    if m is None:
        m = len(run.configurations[0].positions) if run.configurations else \
            max((mv.machine for mv in run.moves), default=0)
    return {n: count_reversals(directions_of(run, n)) for n in range(1, m + 1)}


def block_count(run: Run) -> int:
    """Number of maximal same-machine stretches of the move sequence."""
    ms = [mv.machine for mv in run.moves]
    return sum(1 for i, x in enumerate(ms) if i == 0 or ms[i - 1] != x)


def extract_rw_sequence(run: Run) -> list[tuple]:
    out = []
    for mv, cfg in zip(run.moves, run.configurations):
        g = cfg.graph
        n = mv.edge.src
        if n in g.marking:
            out.append((dict(g.register_ids)[n], mv.transition[2], mv.transition[4]))
        else:
            out.append((0, 0, 0))
    return out


def rw_valid(seq, beta0=None) -> bool:
    cur = dict(beta0 or {})
    for j, b, b2 in seq:
        if j == 0:
            continue
        if cur.get(j, 0) != b:
            return False
        cur[j] = b2
    return True


# --------------------------------------------------------------------------
# oracle

@dataclass(frozen=True)
class OracleResult:
    graph: MarkedGraph
    run: Run


def search_graph(mg: MarkedGraph, machine: Machine, bounds: Bounds, f, max_steps: int):
    """Shortest r-reversal-bounded run on one graph reaching f, or None."""
    sg = symmetric_closure(mg)
    m = bounds.m
    init = initial_configuration(sg, machine, m)
    if satisfies(init, f):
        return Run((init,), ())
    # per machine: last direction (0 before any move) and reversals used
    key0 = (init.key(), tuple((0, 0) for _ in range(m)))
    parent = {key0: None}
    frontier = deque([(init, key0[1], 0)])
    while frontier:
        cfg, dirs, depth = frontier.popleft()
        if depth >= max_steps:
            continue
        for i in range(1, m + 1):
            last, used = dirs[i - 1]
            for c2, e, tr in successors(cfg, i, machine):
                u = used + (1 if last and last != e.direction else 0)
                if u > bounds.r:
                    continue
                d2 = list(dirs)
                d2[i - 1] = (e.direction, u)
                d2 = tuple(d2)
                k2 = (c2.key(), d2)
                if k2 in parent:
                    continue
                parent[k2] = ((cfg.key(), dirs), Move(i, e, tr), cfg)
                if satisfies(c2, f):
                    moves = []
                    k = k2
                    while parent[k] is not None:
                        pk, mv, _ = parent[k]
                        moves.append(mv)
                        k = pk
                    return replay(sg, machine, m, reversed(moves))
                frontier.append((c2, d2, depth + 1))
    return None


def oracle_reach(machine: Machine, bounds: Bounds, g, f, max_nodes: int, max_steps: int,
                 max_edges: int | None = None, graphs=None):
    """Explicit-state search over enumerated graphs; first witness in enumeration order wins.

    `graphs` overrides enumeration with a fixed list of marked graphs.
    """
    if max_steps < 0:
        raise SemanticsError("max_steps must be >= 0")
    source = graphs if graphs is not None else enumerate_graphs(g, max_nodes, max_edges)
    for mg in source:
        run = search_graph(mg, machine, bounds, f, max_steps)
        if run is not None:
            return OracleResult(mg, run)
    return None


def check_witness(mg: MarkedGraph, machine: Machine, bounds: Bounds, f, run: Run) -> list[str]:
    """Independent replay of a claimed witness; returns the list of failures."""
    problems = []
    try:
        rep = replay(symmetric_closure(mg), machine, bounds.m, run.moves)
    except SemanticsError as exc:
        return [f"replay failed: {exc}"]
    if len(mg.marking) > bounds.k:
        problems.append("too many marked nodes")
    rc = reversal_counts(rep, bounds.m)
    if any(v > bounds.r for v in rc.values()):
        problems.append(f"reversal bound exceeded: {rc}")
    if not satisfies(rep.configurations[-1], f):
        problems.append("final configuration does not satisfy the property")
    if not rw_valid(extract_rw_sequence(rep)):
        problems.append("read-write sequence invalid")
    return problems
