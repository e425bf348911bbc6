"""Letters of the trace, execution and composite alphabets.

Rows are numbered from 1.  Machine n, path block h (both from 1) owns row
(n - 1) * rt + h where rt = r + 1.
"""

from __future__ import annotations

from typing import NamedTuple

FLAT = "♭"  # padding label for rows that do not traverse the current edge
BOTTOM_STATE = None  # the "no state" entry of property contexts


class EncodingError(ValueError):
    pass


class TraceRow(NamedTuple):
    label: str
    src_reg: int
    trg_reg: int
    path_index: int


class TraceLetter(NamedTuple):
    """Either an edge letter (rows are TraceRow) or a shared-node letter (rows are path indices)."""

    kind: str  # "edge" | "node"
    rows: tuple

    @property
    def is_node(self):
        return self.kind == "node"

    def moving(self):
        """Rows (1-based) that traverse the edge of an edge letter."""
        if self.kind != "edge":
            return ()
        return tuple(i for i, x in enumerate(self.rows, 1) if x.label != FLAT)

    def __str__(self):
        if self.kind == "node":
            return "[" + " ".join(map(str, self.rows)) + "]"
        return "[" + " ".join(f"{x.label},{x.src_reg},{x.trg_reg},{x.path_index}" for x in self.rows) + "]"


class ExecRow(NamedTuple):
    block: int
    read: int
    write: int
    succ: str
    trace_row: int

    @property
    def active(self):
        return self.block > 0


class CompositeLetter(NamedTuple):
    trace: TraceLetter
    exec: tuple  # ExecRow per row, in row order

    def __str__(self):
        ex = " ".join(f"{e.block},{e.read},{e.write},{e.succ},{e.trace_row}" for e in self.exec)
        return f"{self.trace} | [{ex}]"


def row_of(n, h, rt):
    return (n - 1) * rt + h


def machine_of(row, rt):
    """(n, h) for a 1-based row."""
    return (row - 1) // rt + 1, (row - 1) % rt + 1


def rows_of_machine(n, rt):
    return tuple(row_of(n, h, rt) for h in range(1, rt + 1))


def inactive_row(row, q0):
    return ExecRow(0, 0, 0, q0, row)


def node_letter(classes, t):
    """Shared-node letter from a collection of row bitmasks covering rows 1..t."""
    idx = [0] * t
    for c in classes:
        if not c:
            continue
        low = (c & -c).bit_length()
        x = c
        while x:
            b = x & -x
            idx[b.bit_length() - 1] = low
            x ^= b
    if 0 in idx:
        raise EncodingError("shared-node letter does not cover every row")
    return TraceLetter("node", tuple(idx))


def edge_letter(label, moving_mask, src_reg, trg_reg, t):
    low = (moving_mask & -moving_mask).bit_length()
    rows = []
    for i in range(1, t + 1):
        if moving_mask >> (i - 1) & 1:
            rows.append(TraceRow(label, src_reg, trg_reg, low))
        else:
            rows.append(TraceRow(FLAT, 0, 0, i))
    return TraceLetter("edge", tuple(rows))


def mask(rows):
    m = 0
    for r in rows:
        m |= 1 << (r - 1)
    return m


def rows_in(m):
    out = []
    i = 1
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return out


def classes_of(letter: TraceLetter):
    """Row bitmasks of a shared-node letter, keyed by path index."""
    out = {}
    for i, x in enumerate(letter.rows, 1):
        out[x] = out.get(x, 0) | 1 << (i - 1)
    return out


class Execution(NamedTuple):
    """q0, (sigma1, b1, b1'), q1, ... stored as the flat alternating tuple `seq`."""

    seq: tuple

    @property
    def states(self):
        return self.seq[0::2]

    @property
    def steps(self):
        return self.seq[1::2]

    def __len__(self):
        return len(self.steps)


class PropertyContext(NamedTuple):
    """Element of C: block numbers, successor states and trace rows, one per row."""

    blocks: tuple
    states: tuple
    rows: tuple  # TraceRow or int (shared-node path index) per row
    rt: int


def context_zero(t, rt, q0):
    return PropertyContext((0,) * t, (q0,) * t, (TraceRow(FLAT, 0, 0, 1),) * t, rt)


def context_bottom(t, rt):
    return PropertyContext((0,) * t, (BOTTOM_STATE,) * t, (TraceRow(FLAT, 0, 0, 1),) * t, rt)


def context_of(letter: CompositeLetter, rt):
    """The element of C a composite letter determines (rows read through the trace-row index)."""
    tr = letter.trace.rows
    return PropertyContext(tuple(e.block for e in letter.exec), tuple(e.succ for e in letter.exec),
                           tuple(tr[e.trace_row - 1] for e in letter.exec), rt)


class RwCheckerState(NamedTuple):
    """State of the assumption/guarantee register checker."""

    block: tuple  # current block number per machine
    val: tuple  # current valuation per machine, bitmask over register ids
    seen: frozenset  # block numbers seen so far
    assume: tuple  # sorted (block, valuation) pairs still to be discharged
    guarantee: tuple  # sorted (block, valuation) pairs
