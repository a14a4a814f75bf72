"""Command-line entry point: ``mvcheck {check,graph,witness,simulate,fuzz}``.

Exit codes: 0 success, 1 expectation failed / invalid history / fuzz
discrepancy, 2 parse or usage error, 3 read-rule incident in the scheduler.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from . import fuzz as fuzzing
from . import oracles
from .conflicts import mvc_order, satisfies
from .dsl import DslError, parse_history, parse_workload, serialize_history
from .gc import collect
from .graph import build_mvcg, find_cycle, serialization_witness, to_dot
from .history import HistoryError, InvalidHistoryError
from .scheduler import WorkloadError, run_workload

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCIDENT = 0, 1, 2, 3


class _Usage(Exception):
    pass


def _read_text(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise _Usage(f"cannot read {path}: {err.strerror}") from err


def _load_history(path: str):
    try:
        return parse_history(_read_text(path))
    except DslError as err:
        raise _Usage(f"{path}:{err}") from err


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps({"schema_version": oracles.SCHEMA_VERSION, **payload}, indent=2, sort_keys=False))
    else:
        print(text)


def _fmt(verdict) -> str:
    if verdict is None:
        return "n/a"
    if isinstance(verdict, bool):
        return "yes" if verdict else "no"
    return str(verdict)


def cmd_check(args) -> int:
    h = _load_history(args.file)
    report = oracles.classify(h, args.bound)
    lines = [f"history: {serialize_history(h)}"]
    lines += [f"{name:>16}: {_fmt(report.flag(name))}" for name in report.FLAGS]
    if report.mvcg_summary:
        s = report.mvcg_summary
        lines.append(f"{'mvcg':>16}: {s['vertices']} vertices, {s['edges']} edges, "
                     + (f"cycle {s['cycle']}" if s["cyclic"] else "acyclic"))
    for name, text in report.witness.items():
        lines.append(f"{'witness ' + name:>16}: {text}")
    for name, text in report.errors.items():
        lines.append(f"{'note ' + name:>16}: {text}")
    for v in report.violations:
        lines.append(f"{'VIOLATION':>16}: {v}")
    payload = {"command": "check", "report": report.to_json()}
    if args.expect:
        holds = report.flag(args.expect) is True
        payload["expect"] = {"class": args.expect, "holds": holds}
        lines.append(f"expect {args.expect}: {'holds' if holds else 'does not hold'}")
        _emit(args, payload, "\n".join(lines))
        return EXIT_OK if holds else EXIT_FAIL
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_graph(args) -> int:
    h = _load_history(args.file)
    try:
        g = build_mvcg(h)
    except InvalidHistoryError as err:
        print(f"invalid history: {err}", file=sys.stderr)
        return EXIT_FAIL
    cycle = find_cycle(g)
    dot = to_dot(g)
    if args.dot:
        Path(args.dot).write_text(dot, encoding="utf-8")
    if args.figure:
        from .plotting import render_mvcg

        render_mvcg(g, Path(args.figure), title=Path(args.file).name, cycle=cycle)
    verdict = "acyclic" if cycle is None else "cyclic: " + " -> ".join(f"T{v}" for v in cycle)
    text = verdict if args.dot else dot + verdict
    if cycle is not None:
        for u, v, e in g.cycle_edges(cycle):
            text += f"\n  T{u} -> T{v} [{e.label()}]"
    _emit(args, {"command": "graph", "acyclic": cycle is None, "cycle": cycle, "graph": g.to_json()}, text)
    return EXIT_OK


def cmd_witness(args) -> int:
    h = _load_history(args.file)
    try:
        g = build_mvcg(h)
    except InvalidHistoryError as err:
        print(f"invalid history: {err}", file=sys.stderr)
        return EXIT_FAIL
    w = serialization_witness(h, g)
    if w is not None:
        ok, pair = satisfies(w, mvc_order(h))
        if not ok:
            # graph and witness disagree; a finding, not a usage problem
            print(f"witness failed verification at {pair.describe() if pair else 'equivalence'}", file=sys.stderr)
            return EXIT_FAIL
    text = "none" if w is None else serialize_history(w)
    _emit(args, {"command": "witness", "witness": None if w is None else text}, text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        steps = parse_workload(_read_text(args.workload))
    except DslError as err:
        raise _Usage(f"{args.workload}:{err}") from err
    trace = []

    def record(state, _):
        trace.append({**state.stats.to_json(), "edges": state.graph.edge_count()})

    try:
        h, stats, state = run_workload(steps, after_step=record)
    except WorkloadError as err:
        raise _Usage(str(err)) from err
    if stats.incidents:
        print(json.dumps({"incident": True, "state": state.to_json()}, indent=2), file=sys.stderr)
        return EXIT_INCIDENT
    removed = sorted(collect(state)) if args.gc else None
    emitted = serialize_history(h)
    if args.emit:
        Path(args.emit).write_text(emitted + "\n", encoding="utf-8")
    if args.figure:
        from .plotting import render_simulation

        render_simulation(trace, Path(args.figure), title=Path(args.workload).name)
    lines = [f"history: {emitted}"]
    lines += [f"{k}: {v}" for k, v in stats.to_json().items()]
    if removed is not None:
        lines.append("gc removed: " + (" ".join(f"T{t}" for t in removed) or "none"))
    payload = {"command": "simulate", "history": emitted, "stats": stats.to_json()}
    if removed is not None:
        payload["gc"] = {"removed": removed, "post_gc_history": serialize_history(state.history())}
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_fuzz(args) -> int:
    if args.count < 0 or args.txns < 1 or args.objects < 1:
        raise _Usage("--count must be >= 0, --txns and --objects >= 1")
    repro = Path(args.repro_dir) if args.repro_dir else None
    summary = fuzzing.fuzz(args.count, args.seed, args.txns, args.objects, args.bound, repro)
    if args.figure:
        from .plotting import render_fuzz_summary

        render_fuzz_summary(summary.counts, Path(args.figure), title=f"fuzz seed={args.seed} count={args.count}")
    lines = [f"generated: {summary.generated}"]
    lines += [f"{k}: {v}" for k, v in sorted(summary.counts.items())]
    lines.append(f"discrepancies: {len(summary.discrepancies)}")
    lines += [f"  {d.kind}: {d.detail}: {serialize_history(d.history)}" for d in summary.discrepancies[:20]]
    lines += [f"  repro: {p}" for p in summary.repro_files[:20]]
    _emit(args, {"command": "fuzz", "summary": summary.to_json()}, "\n".join(lines))
    return EXIT_OK if summary.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvcheck", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("text", "json"), default="text")
        return p

    p = common(sub.add_parser("check", help="classify a history"))
    p.add_argument("file")
    p.add_argument("--expect", choices=sorted(oracles.ClassificationReport.FLAGS))
    p.add_argument("--bound", type=int, default=None, help="brute-force transaction bound (T0 included)")
    p.set_defaults(func=cmd_check)

    p = common(sub.add_parser("graph", help="build the conflict graph"))
    p.add_argument("file")
    p.add_argument("--dot", metavar="PATH")
    p.add_argument("--figure", metavar="PATH", help="render the graph to an image")
    p.set_defaults(func=cmd_graph)

    p = common(sub.add_parser("witness", help="print a serialization witness"))
    p.add_argument("file")
    p.set_defaults(func=cmd_witness)

    p = common(sub.add_parser("simulate", help="run a workload through the scheduler"))
    p.add_argument("workload")
    p.add_argument("--emit", metavar="PATH")
    p.add_argument("--gc", action="store_true")
    p.add_argument("--figure", metavar="PATH", help="plot counters per step")
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("fuzz", help="differential testing on generated histories"))
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--txns", type=int, default=4)
    p.add_argument("--objects", type=int, default=3)
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--repro-dir", default="fuzz-repro")
    p.add_argument("--figure", metavar="PATH", help="bar chart of class counts")
    p.set_defaults(func=cmd_fuzz)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _Usage as err:
        print(f"mvcheck: {err}", file=sys.stderr)
        return EXIT_USAGE
    except HistoryError as err:
        print(f"mvcheck: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
