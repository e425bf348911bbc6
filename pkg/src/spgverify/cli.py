"""Command-line front end: verify, oracle, enumerate and witness."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .encoding import EncodingError, decide
from .formats import ParseError, check_property_states, parse_grammar, parse_machine, parse_property
from .graph import GraphError, enumerate_graphs, is_series_parallel_shape, lift_grammar, symmetric_closure, \
    to_dot
from .report import SCHEMA_VERSION, dumps, graph_from_json, graph_to_json, moves_from_json, run_to_json
from .samples import sample_graph
from .semantics import Bounds, Run, SemanticsError, block_count, check_witness, oracle_reach, replay, \
    reversal_counts

EXIT_FOUND, EXIT_NONE, EXIT_ERROR = 0, 1, 2


class InputError(Exception):
    pass


def _read(path, what):
    if path is None:
        raise InputError(f"--{what} is required")
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path}: {exc.strerror}") from None


def _load(args, need=("grammar", "machine", "prop")):
    out = {}
    if "grammar" in need:
        out["grammar"] = parse_grammar(_read(args.grammar, "grammar"))
    if "machine" in need:
        out["machine"] = parse_machine(_read(args.machine, "machine"))
    if "prop" in need:
        out["prop"] = parse_property(_read(args.prop, "prop"))
        if "machine" in out:
            check_property_states(out["prop"], out["machine"])
    return out


def _bounds(args, grammar=None):
    k = args.k
    if k is None:
        k = grammar.k if grammar is not None and grammar.k is not None else 1
    return Bounds(args.m, args.r, k, args.p)


def _witness_doc(mg, machine, bounds, f, run: Run):
    problems = check_witness(mg, machine, bounds, f, run)
    return {
        "graph": graph_to_json(mg),
        "run": run_to_json(run),
        "blocks": block_count(run),
        "reversals": {str(n): v for n, v in sorted(reversal_counts(run, bounds.m).items())},
        "replay": {"valid": not problems, "problems": problems},
    }


def _base_doc(args, command, bounds=None):
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "tool_version": __version__,
           "inputs": {"grammar": args.grammar, "machine": getattr(args, "machine", None),
                      "prop": getattr(args, "prop", None)}}
    if bounds is not None:
        doc["bounds"] = {"m": bounds.m, "r": bounds.r, "k": bounds.k, "p": bounds.p}
    return doc


def _emit(args, doc, mg=None, run=None):
    if args.report:
        Path(args.report).write_text(dumps(doc))
    if mg is not None and args.dot:
        d = Path(args.dot)
        d.mkdir(parents=True, exist_ok=True)
        (d / "witness.dot").write_text(to_dot(mg, "witness"))
    if mg is not None and getattr(args, "png", None):
        try:
            from .plotting import draw_witness

            draw_witness(mg, run, args.png, title=doc.get("result", ""))
        except ImportError:
            print("warning: matplotlib is not installed, no PNG written", file=sys.stderr)


def cmd_verify(args):
    inp = _load(args)
    bounds = _bounds(args, inp["grammar"])
    bg = lift_grammar(inp["grammar"], bounds.k)
    t0 = time.perf_counter()
    res = decide(inp["machine"], bg, bounds, inp["prop"], max_p=args.max_p, limit=args.limit,
                 climb=not args.no_climb)
    doc = _base_doc(args, "verify", bounds)
    doc["bounds"]["max_p"] = args.max_p
    doc["result"] = "Reachable" if res.reachable else "Unreachable"
    doc["message"] = res.message
    doc["p_used"] = res.p
    doc["search"] = {str(p): st for p, st in sorted(res.stats["per_p"].items())}
    if args.timings:
        doc["timings"] = {"seconds": round(time.perf_counter() - t0, 3)}
    if res.reachable:
        doc["witness"] = _witness_doc(res.graph, inp["machine"], Bounds(bounds.m, bounds.r, bounds.k, res.p),
                                      inp["prop"], res.run)
        doc["witness"]["word"] = [str(x) for x in res.word]
    print(f"{doc['result']}: {res.message}")
    if res.reachable:
        _print_run(res.run)
    _emit(args, doc, res.graph, res.run)
    return EXIT_FOUND if res.reachable else EXIT_NONE


def cmd_oracle(args):
    inp = _load(args)
    bounds = _bounds(args, inp["grammar"])
    bg = lift_grammar(inp["grammar"], bounds.k)
    graphs = [sample_graph(inp["grammar"])] if args.sample_graph else None
    t0 = time.perf_counter()
    res = oracle_reach(inp["machine"], bounds, bg, inp["prop"], args.max_nodes, args.max_steps,
                       args.max_edges, graphs=graphs)
    doc = _base_doc(args, "oracle", bounds)
    doc["caps"] = {"max_nodes": args.max_nodes, "max_steps": args.max_steps, "max_edges": args.max_edges,
                   "sample_graph": bool(args.sample_graph)}
    doc["result"] = "Reachable" if res is not None else "Unreachable"
    doc["message"] = ("witness found" if res is not None
                      else "no witness within the enumeration and step caps")
    if args.timings:
        doc["timings"] = {"seconds": round(time.perf_counter() - t0, 3)}
    if res is not None:
        doc["witness"] = _witness_doc(res.graph, inp["machine"], bounds, inp["prop"], res.run)
    print(f"{doc['result']}: {doc['message']}")
    if res is not None:
        _print_run(res.run)
        _emit(args, doc, res.graph, res.run)
        return EXIT_FOUND
    _emit(args, doc)
    return EXIT_NONE


def cmd_enumerate(args):
    grammar = _load(args, ("grammar",))["grammar"]
    k = args.k if args.k is not None else (grammar.k if grammar.k is not None else 1)
    bg = lift_grammar(grammar, k)
    listing = []
    dot_dir = Path(args.dot) if args.dot else None
    if dot_dir:
        dot_dir.mkdir(parents=True, exist_ok=True)
    for i, mg in enumerate(enumerate_graphs(bg, args.max_nodes, args.max_edges)):
        if args.limit is not None and i >= args.limit:
            break
        problems = is_series_parallel_shape(mg.graph)
        listing.append({"index": i, "nodes": len(mg.graph.nodes), "edges": len(mg.graph.edges),
                        "marks": len(mg.marking), "graph": graph_to_json(mg), "problems": problems})
        print(f"{i:4d}: {len(mg.graph.nodes)} nodes, {len(mg.graph.edges)} edges, "
              f"{len(mg.marking)} marks  " + " ".join(f"{e.src}-{e.label}->{e.trg}" for e in mg.graph.edges))
        if dot_dir:
            (dot_dir / f"graph_{i:04d}.dot").write_text(to_dot(mg, f"g{i}"))
    doc = {"schema_version": SCHEMA_VERSION, "command": "enumerate", "tool_version": __version__,
           "inputs": {"grammar": args.grammar}, "k": k,
           "caps": {"max_nodes": args.max_nodes, "max_edges": args.max_edges, "limit": args.limit},
           "count": len(listing), "graphs": listing}
    if args.report:
        Path(args.report).write_text(dumps(doc))
    return EXIT_FOUND if listing else EXIT_NONE


def cmd_witness(args):
    try:
        stored = json.loads(_read(args.witness, "witness"))
    except json.JSONDecodeError as exc:
        raise InputError(f"witness file is not JSON: {exc}") from None
    if "witness" not in stored:
        raise InputError("report carries no witness")
    args.grammar = args.grammar or stored.get("inputs", {}).get("grammar")
    args.machine = args.machine or stored.get("inputs", {}).get("machine")
    args.prop = args.prop or stored.get("inputs", {}).get("prop")
    inp = _load(args)
    sb = stored.get("bounds", {})
    bounds = Bounds(args.m if args.m_set else sb.get("m", args.m),
                    args.r if args.r_set else sb.get("r", args.r),
                    args.k if args.k is not None else sb.get("k", 1),
                    args.p if args.p_set else sb.get("p", args.p))
    w = stored["witness"]
    problems = []
    try:
        mg = graph_from_json(w["graph"], inp["grammar"])
        moves = moves_from_json(w["run"], mg)
        run = replay(symmetric_closure(mg), inp["machine"], bounds.m, moves)
    except (GraphError, SemanticsError, KeyError, TypeError) as exc:
        mg, run = None, None
        problems.append(f"witness does not replay: {exc}")
    if run is not None:
        problems += check_witness(mg, inp["machine"], bounds, inp["prop"], run)
        if block_count(run) > bounds.p:
            problems.append(f"run needs {block_count(run)} blocks, bound is {bounds.p}")
    doc = _base_doc(args, "witness", bounds)
    doc["witness_file"] = args.witness
    doc["result"] = "Valid" if not problems else "Invalid"
    doc["problems"] = problems
    print(doc["result"] + "".join(f"\n  {p}" for p in problems))
    _emit(args, doc, mg, run)
    return EXIT_FOUND if not problems else EXIT_NONE


def _print_run(run: Run):
    for i, mv in enumerate(run.moves, 1):
        q, (label, d), b, q2, b2 = mv.transition
        arrow = "->" if d == 1 else "<-"
        print(f"  {i:3d}. machine {mv.machine}: {mv.edge.src} {arrow} {mv.edge.trg} via {label}  "
              f"{q} -> {q2}  read {b} write {b2}")


def _positive(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


class _Track(argparse.Action):
    """Store a value and remember that it was given explicitly."""

    def __call__(self, parser, ns, values, option_string=None):
        setattr(ns, self.dest, values)
        setattr(ns, self.dest + "_set", True)


def build_parser():
    ap = argparse.ArgumentParser(prog="spgverify", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, machine=True):
        p.add_argument("--grammar", help="grammar file")
        if machine:
            p.add_argument("--machine", help="machine file")
            p.add_argument("--prop", help="configuration property file")
            p.add_argument("-m", type=_positive, default=2, action=_Track, help="number of machines (2)")
            p.add_argument("-r", type=_positive, default=1, action=_Track, help="reversals per machine (1)")
            p.add_argument("-p", type=_positive, default=4, action=_Track, help="block bound (4)")
            p.add_argument("--png", help="draw the witness graph to this PNG file")
            p.add_argument("--timings", action="store_true", help="add wall-clock timings to the report")
        p.add_argument("-k", type=_positive, help="register bound (grammar's k, else 1)")
        p.add_argument("--report", help="write a JSON report here")
        p.add_argument("--dot", help="write DOT files into this directory")
        p.set_defaults(m_set=False, r_set=False, p_set=False)

    v = sub.add_parser("verify", help="decide reachability with the automata construction")
    common(v)
    v.add_argument("--max-p", type=_positive, help="retry with larger block bounds up to this one")
    v.add_argument("--limit", type=_positive, help="give up after this many search steps")
    v.add_argument("--no-climb", action="store_true", help="only try the given block bound, not 1..p")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="explicit search over enumerated graphs")
    common(o)
    o.add_argument("--max-nodes", type=_positive, default=8)
    o.add_argument("--max-steps", type=_positive, default=20)
    o.add_argument("--max-edges", type=_positive)
    o.add_argument("--sample-graph", action="store_true",
                   help="search only the ten-node sample graph instead of enumerating")
    o.set_defaults(func=cmd_oracle)

    e = sub.add_parser("enumerate", help="list the graphs of a grammar up to a size")
    common(e, machine=False)
    e.add_argument("--max-nodes", type=_positive, default=6)
    e.add_argument("--max-edges", type=_positive)
    e.add_argument("--limit", type=_positive, help="stop after this many graphs")
    e.set_defaults(func=cmd_enumerate)

    w = sub.add_parser("witness", help="re-validate the witness stored in a report")
    common(w)
    w.add_argument("--witness", help="report file holding the witness")
    w.set_defaults(func=cmd_witness)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ParseError, GraphError, SemanticsError, EncodingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
