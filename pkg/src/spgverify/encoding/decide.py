"""The decision procedure: emptiness of P x A_r x A_e, with a replayed witness."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..automata import pda_emptiness, pda_nfa_product
from ..graph import BudgetedSPGG, MarkedGraph, lift_grammar
from ..semantics import Bounds, Machine, Run, check_property, check_witness
from .alphabet import EncodingError
from .codec import decode_witness
from .product import build_exec_product
from .traces import build_register_nfa, build_trace_pda


@dataclass
class DecideResult:
    reachable: bool
    p: int
    graph: MarkedGraph | None = None
    run: Run | None = None
    word: list | None = None
    message: str = ""
    stats: dict = field(default_factory=dict)


def build_full_pda(machine: Machine, bg: BudgetedSPGG, bounds: Bounds, f):
    pda = pda_nfa_product(build_trace_pda(bg, bounds), build_register_nfa(bounds))
    return pda_nfa_product(pda, build_exec_product(machine, bounds, f, first_mover=1))


def decide(machine: Machine, grammar, bounds: Bounds, f, max_p: int | None = None,
           limit: int | None = None, climb: bool = True) -> DecideResult:
    """Decide reachability of f within bounds.p blocks, retrying larger p up to max_p.

    With `climb` the block bounds 1, 2, ... below bounds.p are tried first:
    a witness within fewer blocks is also one within bounds.p, and small
    bounds are much cheaper.  A Reachable answer always carries a witness
    that has been decoded and replayed; Unreachable is relative to the last
    block bound tried.
    """
    bg = grammar if isinstance(grammar, BudgetedSPGG) else lift_grammar(grammar, bounds.k)
    if not isinstance(bg, BudgetedSPGG):
        raise TypeError("grammar must be an SPGG or a BudgetedSPGG")
    check_property(f, machine, bounds.m)
    top = bounds.p if max_p is None else max(max_p, bounds.p)
    stats = {}
    t0 = time.perf_counter()
    for p in range(1 if climb else bounds.p, top + 1):
        b = Bounds(bounds.m, bounds.r, bounds.k, p)
        st = {}
        word = pda_emptiness(build_full_pda(machine, bg, b, f), limit=limit, stats=st)
        stats[p] = st
        if word is not None:
            mg, run = decode_witness(word, bg, b, machine)
            problems = check_witness(mg, machine, b, f, run)
            if problems:
                raise EncodingError("decoded witness rejected: " + "; ".join(problems))
            return DecideResult(True, p, mg, run, word, f"reachable within {p} blocks",
                                {"per_p": stats, "seconds": time.perf_counter() - t0})
    return DecideResult(False, top, message=f"unreachable at block bound p = {top}",
                        stats={"per_p": stats, "seconds": time.perf_counter() - t0})
