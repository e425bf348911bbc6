"""Word encodings of runs and the automata-based decision procedure."""

from .alphabet import FLAT, CompositeLetter, EncodingError, ExecRow, PropertyContext, TraceLetter, TraceRow
from .codec import decode_witness, encode_run
from .decide import DecideResult, decide
from .executions import build_exec_2nfa, build_exec_nfa, extract_execution
from .product import build_exec_product
from .properties import build_property_nfa, node_property
from .registers import build_rw_2nfa, build_rw_nfa
from .traces import build_register_nfa, build_trace_pda, serialize

__all__ = [
    "FLAT", "CompositeLetter", "DecideResult", "EncodingError", "ExecRow", "PropertyContext", "TraceLetter",
    "TraceRow", "build_exec_2nfa", "build_exec_nfa", "build_exec_product", "build_property_nfa",
    "build_register_nfa", "build_rw_2nfa", "build_rw_nfa", "build_trace_pda", "decide", "decode_witness",
    "encode_run", "extract_execution", "node_property", "serialize",
]
