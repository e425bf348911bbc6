import itertools
import random
from functools import lru_cache

import pytest

from conftest import load
from spgverify.automata import nfa_accepts, pda_accepts, two_nfa_accepts
from spgverify.encoding import (
    EncodingError, TraceLetter, build_exec_2nfa, build_exec_nfa, build_property_nfa, build_register_nfa,
    build_rw_2nfa, build_rw_nfa, build_trace_pda, decode_witness, encode_run, extract_execution, serialize,
)
from spgverify.encoding.alphabet import machine_of
from spgverify.encoding.decide import build_full_pda
from spgverify.encoding.traces import check_alternation
from spgverify.graph import enumerate_graphs, lift_grammar
from spgverify.samples import sample_graph
from spgverify.semantics import (
    Bounds, Move, Run, atom, block_count, initial_configuration, oracle_reach, reversal_counts,
    satisfies, search_graph, successors, symmetric_closure,
)

BOUNDS = Bounds(m=2, r=1, k=1, p=4)


@lru_cache(maxsize=None)
def setting():
    g = load("split_marked.grammar")
    return g, lift_grammar(g, BOUNDS.k), load("three_state.machine")


def random_run(mg, machine, bounds, rng, max_moves=10):
    """A random run respecting the reversal and block bounds."""
    cfg = initial_configuration(symmetric_closure(mg), machine, bounds.m)
    cfgs, moves = [cfg], []
    last_dir = [0] * bounds.m
    revs = [0] * bounds.m
    blocks, cur = 0, None
    for _ in range(rng.randint(0, max_moves)):
        opts = []
        for i in range(1, bounds.m + 1):
            if i != cur and blocks == bounds.p:
                continue
            for c2, e, tr in successors(cfg, i, machine):
                rev = revs[i - 1] + (1 if last_dir[i - 1] and last_dir[i - 1] != e.direction else 0)
                if rev <= bounds.r:
                    opts.append((i, c2, e, tr, rev))
        if not opts:
            break
        i, c2, e, tr, rev = rng.choice(opts)
        moves.append(Move(i, e, tr))
        cfgs.append(c2)
        last_dir[i - 1], revs[i - 1] = e.direction, rev
        if i != cur:
            blocks, cur = blocks + 1, i
        cfg = c2
    return Run(tuple(cfgs), tuple(moves))


def final_property(run):
    """An atom true at the final configuration: the states standing with machine 1."""
    last = run.configurations[-1]
    node = last.positions[0][0]
    return atom(*[q for x, q in last.positions if x == node])


@lru_cache(maxsize=None)
def oracle_corpus():
    """Shortest oracle witnesses for every one- and two-state atom on small graphs, deduplicated."""
    g, bg, machine = setting()
    states = sorted(machine.states)
    props = [atom(q) for q in states] + [atom(a, b) for a, b in
                                         itertools.combinations_with_replacement(states, 2)]
    graphs = [sample_graph(g)] + list(enumerate_graphs(bg, 6))[:12]
    out, seen = [], set()
    for mg in graphs:
        for f in props:
            run = search_graph(mg, machine, BOUNDS, f, 12)
            if run is None or not run.moves:
                continue
            key = (mg.graph.edges, mg.marking,
                   tuple((mv.machine, mv.edge.eid, mv.edge.direction, mv.transition) for mv in run.moves))
            if key not in seen:
                seen.add(key)
                out.append((mg, run, encode_run(mg, machine, BOUNDS, run)))
    return out


@lru_cache(maxsize=None)
def corpus():
    """Oracle witnesses plus random runs (these reach more reversals and blocks)."""
    g, bg, machine = setting()
    out = []
    rng = random.Random(5)
    graphs = list(enumerate_graphs(bg, 6))
    graphs.append(sample_graph(g))
    while len(out) < 20:
        mg = rng.choice(graphs)
        run = random_run(mg, machine, BOUNDS, rng)
        if run.moves or len(out) < 2:
            out.append((mg, run, encode_run(mg, machine, BOUNDS, run)))
    return oracle_corpus() + out


def traces(w):
    return [x.trace for x in w]


@lru_cache(maxsize=None)
def checkers():
    _, bg, machine = setting()
    return {
        "P": build_trace_pda(bg, BOUNDS),
        "A_r": build_register_nfa(BOUNDS),
        "exec": [build_exec_nfa(machine, n, BOUNDS) for n in (1, 2)],
        "exec2": [build_exec_2nfa(machine, n, BOUNDS) for n in (1, 2)],
        "rw": build_rw_nfa(BOUNDS),
        "rw2": build_rw_2nfa(BOUNDS),
    }


def verdicts(w, f):
    """Acceptance by each component; every one must accept an honest encoding."""
    c = checkers()
    _, _, machine = setting()
    out = {
        "P": pda_accepts(c["P"], traces(w)),
        "A_r": nfa_accepts(c["A_r"], traces(w)),
        "A_c": nfa_accepts(c["rw"], w),
        "A_s": nfa_accepts(build_property_nfa(f, BOUNDS, machine), w),
    }
    for n, a in enumerate(c["exec"], 1):
        out[f"A_{n}"] = nfa_accepts(a, w)
    return out


def test_corpus_is_large_enough():
    assert len(oracle_corpus()) >= 20
    runs = corpus()
    assert sum(1 for _, run, _ in runs if block_count(run) >= 2) >= 5
    assert any(max(reversal_counts(run, 2).values()) == 1 for _, run, _ in runs)


def test_encodings_accepted_by_every_component():
    for mg, run, w in corpus():
        assert check_alternation(traces(w))
        v = verdicts(w, final_property(run))
        assert all(v.values()), v


def test_reference_two_way_checkers_agree():
    c = checkers()
    for _, _, w in corpus()[:12]:
        for one, two in zip(c["exec"], c["exec2"]):
            assert two_nfa_accepts(two, w) == nfa_accepts(one, w) is True
        assert two_nfa_accepts(c["rw2"], w) is True


def test_full_pda_accepts_oracle_witness():
    g, bg, machine = setting()
    f = load("meet.prop")
    res = oracle_reach(machine, BOUNDS, bg, f, 6, 12)
    w = encode_run(res.graph, machine, BOUNDS, res.run)
    assert pda_accepts(build_full_pda(machine, bg, BOUNDS, f), w)


def test_decode_round_trip():
    # silent parallel branches come back as minimal derivations, so only the
    # moves and the machines' final states are compared
    _, bg, machine = setting()
    for mg, run, w in corpus():
        mg2, run2 = decode_witness(w, bg, BOUNDS, machine)
        assert len(mg2.marking) <= BOUNDS.k
        for n in (1, 2):
            mine = [mv.transition for mv in run.moves if mv.machine == n]
            assert [mv.transition for mv in run2.moves if mv.machine == n] == mine
        assert block_count(run2) <= BOUNDS.p
        assert [q for _, q in run2.configurations[-1].positions] == \
            [q for _, q in run.configurations[-1].positions]
        assert satisfies(run2.configurations[-1], final_property(run))


def test_decode_oracle_witness():
    _, bg, machine = setting()
    f = load("meet.prop")
    res = oracle_reach(machine, BOUNDS, bg, f, 6, 12)
    w = encode_run(res.graph, machine, BOUNDS, res.run)
    mg2, run2 = decode_witness(w, bg, BOUNDS, machine)
    assert len(mg2.graph.edges) <= len(res.graph.graph.edges)
    assert satisfies(run2.configurations[-1], f)


def test_extract_execution_matches_run():
    for _, run, w in corpus():
        for n in (1, 2):
            ex = extract_execution(w, n, BOUNDS, "q0")
            seq = ["q0"]
            for mv in run.moves:
                if mv.machine == n:
                    q, (label, _), b, q2, b2 = mv.transition
                    seq += [(label, b, b2), q2]
            assert ex.seq == tuple(seq)
            assert extract_execution(w, n, BOUNDS, "q0") == ex


def test_extract_execution_rejects_garbage():
    with pytest.raises(EncodingError):
        extract_execution(["x"], 1, BOUNDS, "q0")


def test_property_nfa_matches_satisfies():
    _, _, machine = setting()
    states = sorted(machine.states)
    formulas = [atom(q) for q in states] + [atom(a, b) for a, b in
                                            itertools.combinations_with_replacement(states, 2)]
    for _, run, w in corpus()[:15]:
        last = run.configurations[-1]
        for f in formulas:
            assert nfa_accepts(build_property_nfa(f, BOUNDS, machine), w) == satisfies(last, f), (f, run)


def test_encode_rejects_out_of_bounds_runs():
    g, bg, machine = setting()
    mg, run, _ = next((x for x in corpus() if block_count(x[1]) >= 2))
    with pytest.raises(EncodingError):
        encode_run(mg, machine, Bounds(2, 1, 1, 1), run)


def test_serialize_single_row_is_a_path():
    g, bg, _ = setting()
    mg = sample_graph(g)
    chain = frozenset(e.eid for e in mg.graph.edges if e.label in "ca")
    letters, eids, ids = serialize(mg.tree, [chain], mg.mark_source, mg.mark_sink)
    assert [x.rows[0].label for x in letters if x.kind == "edge"] == ["c", "a", "a", "a", "a"]
    assert sorted(e for e in eids if e is not None) == sorted(chain)
    assert pda_accepts(build_trace_pda(bg, Bounds(1, 0, 1, 1)), letters)


def test_row_needs_full_path():
    g, _, _ = setting()
    mg = sample_graph(g)
    with pytest.raises(EncodingError):
        serialize(mg.tree, [frozenset()], mg.mark_source, mg.mark_sink)


# --------------------------------------------------------------------------
# mutations: each class must be rejected by some component

def active_ops(w):
    """(letter index, row) of every active execution entry, in word order."""
    return [(i, r) for i, x in enumerate(w) for r, e in enumerate(x.exec, 1) if e.block > 0]


def put(w, i, x):
    return w[:i] + [x] + w[i + 1:]


def set_exec(w, i, r, **kw):
    rows = list(w[i].exec)
    rows[r - 1] = rows[r - 1]._replace(**kw)
    return put(w, i, w[i]._replace(exec=tuple(rows)))


def wrong_state(w, machine):
    i, r = active_ops(w)[0]
    e = w[i].exec[r - 1]
    other = sorted(machine.states - {e.succ})[0]
    return set_exec(w, i, r, succ=other)


def wrong_read(w, machine):
    i, r = active_ops(w)[0]
    return set_exec(w, i, r, read=1 - w[i].exec[r - 1].read)


def decreasing_block(w, machine):
    ops = active_ops(w)
    for (i, r), (j, r2) in zip(ops, ops[1:]):
        if r == r2 and r % 2 == 1:
            b = w[j].exec[r - 1].block
            return set_exec(w, i, r, block=b + 1)
    return None


def mismatched_register(w, machine):
    for i, x in enumerate(w):
        if x.trace.kind == "edge" and x.trace.moving():
            rows = list(x.trace.rows)
            r = x.trace.moving()[0] - 1
            rows[r] = rows[r]._replace(src_reg=(rows[r].src_reg + 1) % (BOUNDS.k + 1))
            return put(w, i, x._replace(trace=TraceLetter("edge", tuple(rows))))
    return None


def illegal_row_switch(w, machine):
    i, r = active_ops(w)[0]
    return set_exec(w, i, r, trace_row=r % BOUNDS.t + 1)


def owner(w, i, r):
    return f"A_{machine_of(r, BOUNDS.rt)[0]}"


def first_owner(w):
    return owner(w, *active_ops(w)[0])


# mutation, and the component responsible for rejecting it
MUTATIONS = [
    (wrong_state, first_owner),
    (wrong_read, lambda w: "A_c"),
    (decreasing_block, lambda w: "A_c"),
    (mismatched_register, lambda w: "A_r"),
    (illegal_row_switch, first_owner),
]


@pytest.mark.parametrize("mutate,responsible", MUTATIONS, ids=lambda f: getattr(f, "__name__", ""))
def test_mutations_rejected(mutate, responsible):
    _, _, machine = setting()
    tried = 0
    for _, run, w in corpus():
        if not run.moves:
            continue
        bad = mutate(list(w), machine)
        if bad is None:
            continue
        tried += 1
        v = verdicts(bad, final_property(run))
        assert not v[responsible(w)], (mutate.__name__, v, run.moves)
    assert tried >= 5
