"""Text formats for grammars, machines and configuration properties."""

from __future__ import annotations

import re

from .graph import ALWAYS, NEVER, OPTIONAL, SPGG, GraphError, Rule
from .semantics import And, Machine, Or, SemanticsError, atom


class ParseError(ValueError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + msg)


_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"


def _lines(text):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if line.strip():
            yield no, raw, line


def parse_grammar(text: str) -> SPGG:
    start = None
    k = None
    mark_source = mark_sink = False
    declared = set()
    rules = []
    refs = []  # (var, line, col)
    for no, raw, line in _lines(text):
        s = line.strip()
        col0 = len(line) - len(line.lstrip()) + 1
        if s.startswith("start:"):
            if start is not None:
                raise ParseError("duplicate start", no, col0)
            start = s[len("start:"):].strip()
            if not re.fullmatch(_IDENT, start):
                raise ParseError(f"bad start variable {start!r}", no, col0)
            continue
        if s.startswith("k:"):
            try:
                k = int(s[2:].strip())
            except ValueError:
                raise ParseError("k must be an integer", no, col0) from None
            continue
        if s.startswith("vars:"):
            declared.update(x.strip() for x in s[5:].split(",") if x.strip())
            continue
        if s == "mark-source":
            mark_source = True
            continue
        if s == "mark-sink":
            mark_sink = True
            continue
        if "->" not in s:
            raise ParseError(f"expected a rule, got {s!r}", no, col0)
        head, body = (x.strip() for x in s.split("->", 1))
        after = raw.index("->") + 2
        body_col = after + len(raw[after:]) - len(raw[after:].lstrip()) + 1
        if not re.fullmatch(_IDENT, head):
            raise ParseError(f"bad rule head {head!r}", no, col0)
        if not body:
            raise ParseError("empty rule body", no, body_col)
        declared.add(head)
        m = re.fullmatch(r"'([^']+)'", body)
        if m:
            rules.append(Rule(head, "term", (m.group(1),)))
            continue
        m = re.fullmatch(rf"({_IDENT})\s*\.\s*({_IDENT})\s*(\[(mark\??|nomark)\])?", body)
        if m:
            ann = {None: NEVER, "mark": ALWAYS, "mark?": OPTIONAL, "nomark": NEVER}[m.group(4)]
            rules.append(Rule(head, "ser", (m.group(1), m.group(2)), ann))
            refs += [(m.group(1), no, raw.index(m.group(1), body_col - 1) + 1),
                     (m.group(2), no, raw.rindex(m.group(2)) + 1)]
            continue
        m = re.fullmatch(rf"({_IDENT})\s*\|\|\s*({_IDENT})", body)
        if m:
            rules.append(Rule(head, "par", (m.group(1), m.group(2))))
            refs += [(m.group(1), no, raw.index(m.group(1), body_col - 1) + 1),
                     (m.group(2), no, raw.rindex(m.group(2)) + 1)]
            continue
        raise ParseError(f"cannot parse rule body {body!r}", no, body_col)
    if start is None:
        start = rules[0].head if rules else None
    if start is None:
        raise ParseError("grammar has no rules")
    for v, no, col in refs:
        if v not in declared:
            raise ParseError(f"undeclared variable {v}", no, col)
    if start not in declared:
        raise ParseError(f"undeclared variable {start}")
    alphabet = frozenset(r.args[0] for r in rules if r.kind == "term")
    try:
        return SPGG(frozenset(declared), alphabet, tuple(rules), start, mark_source, mark_sink, k)
    except GraphError as exc:
        raise ParseError(str(exc)) from None


def render_grammar(g: SPGG) -> str:
    out = [f"start: {g.start}", "vars: " + ", ".join(sorted(g.variables))]
    if g.k is not None:
        out.append(f"k: {g.k}")
    if g.mark_source:
        out.append("mark-source")
    if g.mark_sink:
        out.append("mark-sink")
    out += [str(r) for r in g.rules]
    return "\n".join(out) + "\n"


_TRANS = re.compile(
    rf"({_IDENT})\s*--\(\s*([^,\s()]+)\s*,\s*([+\-.])\s*\)\s*,\s*([01])\s*/\s*([01])\s*-->\s*({_IDENT})")


def parse_machine(text: str) -> Machine:
    """Machine text: `start: q0`, optional `states:`/`alphabet:` headers, one transition per line.

    Direction `.` stands for both directions.
    """
    start = None
    states = set()
    alphabet = set()
    declared_states = None
    declared_alpha = None
    trans = set()
    for no, raw, line in _lines(text):
        s = line.strip()
        col0 = len(line) - len(line.lstrip()) + 1
        if s.startswith("start:"):
            if start is not None:
                raise ParseError("duplicate start", no, col0)
            start = s[6:].strip()
            continue
        if s.startswith("states:"):
            declared_states = {x.strip() for x in s[7:].split(",") if x.strip()}
            continue
        if s.startswith("alphabet:"):
            declared_alpha = {x.strip() for x in s[9:].split(",") if x.strip()}
            continue
        m = _TRANS.fullmatch(s)
        if not m:
            raise ParseError(f"cannot parse transition {s!r}", no, col0)
        q, sigma, d, b, q2, b2 = m.group(1), m.group(2), m.group(3), int(m.group(4)), m.group(6), int(m.group(5))
        for name in (q, q2):
            if declared_states is not None and name not in declared_states:
                raise ParseError(f"unknown state {name}", no, col0)
        if declared_alpha is not None and sigma not in declared_alpha:
            raise ParseError(f"unknown letter {sigma}", no, col0)
        states.update((q, q2))
        alphabet.add(sigma)
        dirs = (1, -1) if d == "." else ((1,) if d == "+" else (-1,))
        for dd in dirs:
            trans.add((q, (sigma, dd), b, q2, b2))
    if start is None:
        raise ParseError("machine has no start state")
    if declared_states is not None:
        if start not in declared_states:
            raise ParseError(f"unknown state {start}")
        states = declared_states
    states.add(start)
    if declared_alpha is not None:
        alphabet = declared_alpha
    try:
        return Machine(frozenset(states), start, frozenset(alphabet), frozenset(trans))
    except SemanticsError as exc:
        raise ParseError(str(exc)) from None


def render_machine(mc: Machine) -> str:
    out = [f"start: {mc.initial}", "states: " + ", ".join(sorted(mc.states)),
           "alphabet: " + ", ".join(sorted(mc.alphabet))]
    for q, (s, d), b, q2, b2 in sorted(mc.transitions):
        out.append(f"{q} --({s},{'+' if d == 1 else '-'}),{b}/{b2}--> {q2}")
    return "\n".join(out) + "\n"


_TOKEN = re.compile(r"\s*(exists|and|or|not|mu|<=|\(|\)|\{|\}|,|\.|" + _IDENT + r")")


def parse_property(text: str):
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected input at {text[pos:pos + 10]!r}", 1, pos + 1)
        toks.append((m.group(1), m.start(1) + 1))
        pos = m.end()
    i = 0

    def peek():
        return toks[i][0] if i < len(toks) else None

    def expect(tok):
        nonlocal i
        if peek() != tok:
            col = toks[i][1] if i < len(toks) else len(text) + 1
            raise ParseError(f"expected {tok!r}", 1, col)
        i += 1

    def disj():
        nonlocal i
        left = conj()
        while peek() == "or":
            i += 1
            left = Or(left, conj())
        return left

    def conj():
        nonlocal i
        left = prim()
        while peek() == "and":
            i += 1
            left = And(left, prim())
        return left

    def prim():
        nonlocal i
        tok = peek()
        if tok == "not":
            raise ParseError("negation is not allowed in configuration properties", 1, toks[i][1])
        if tok == "(":
            i += 1
            f = disj()
            expect(")")
            return f
        expect("exists")
        var = peek()
        i += 1
        expect(".")
        expect("{")
        states = []
        while peek() != "}":
            if peek() is None:
                raise ParseError("unterminated state multiset")
            states.append(peek())
            i += 1
            if peek() == ",":
                i += 1
        expect("}")
        expect("<=")
        expect("mu")
        expect("(")
        if peek() != var:
            raise ParseError(f"mu must mention the bound variable {var}")
        i += 1
        expect(")")
        if not states:
            raise ParseError("empty state multiset")
        return atom(*states)

    f = disj()
    if i != len(toks):
        raise ParseError(f"trailing input {toks[i][0]!r}", 1, toks[i][1])
    return f


def check_property_states(f, machine: Machine):
    from .semantics import atoms
    for a in atoms(f):
        for q in a.states:
            if q not in machine.states:
                raise ParseError(f"unknown state {q} in property")
