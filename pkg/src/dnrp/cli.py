"""Command-line entry point.

Subcommands:
  run         simulate one topology and event script with one protocol
  experiment  sweep replicas and change scenarios for DNRP and ILS
  figure1     replay the seven-router example and check its causality
  topology    write a generated preferential-attachment topology

Exit status: 0 success, 1 usage or parse error, 2 verification violation,
3 a run hit the event cap before quiescence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path

from .experiment import (
    SCENARIOS,
    ExperimentPlan,
    MetricsRow,
    csv_text,
    hello_messages,
    run_experiment,
    summary_text,
)
from .figure1 import replay_figure1
from .files import ParseError, check_events, format_topology, parse_events, parse_topology
from .sim import Simulator
from .topogen import preferential_attachment

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_NONQUIESCENT = 0, 1, 2, 3

log = logging.getLogger("dnrp")


class UsageError(Exception):
    pass


def _replicas(text: str) -> tuple:
    """Accept ``4``, ``1-6`` or ``1,2,5``."""
    try:
        if "-" in text:
            lo, hi = (int(x) for x in text.split("-", 1))
            values = tuple(range(lo, hi + 1))
        else:
            values = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad replicas list {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("replicas must be positive")
    return values


def _write(path, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dnrp", description="DNRP / link-state routing simulator")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, protocols):
        p.add_argument("--protocol", choices=protocols, default=protocols[-1])
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--check", choices=("off", "checkpoints", "every-step"), default="checkpoints")
        p.add_argument("--hello-accounting", choices=("off", "on"), default="off",
                       help="add periodic HELLO messages to ILS message counts")
        p.add_argument("--csv-out", metavar="PATH", help="'-' for stdout")
        p.add_argument("--trace-out", metavar="PATH", help="'-' for stdout")

    run = sub.add_parser("run", help="simulate one scenario")
    run.add_argument("--topology", required=True)
    run.add_argument("--events")
    run.add_argument("--event-cap", type=int)
    common(run, ("ils", "dnrp"))

    exp = sub.add_parser("experiment", help="replicas x scenario sweep")
    exp.add_argument("--topology", help="topology file (default: generated 154 nodes, 184 links)")
    exp.add_argument("--replicas", type=_replicas, default=(1, 2, 3, 4, 5, 6))
    exp.add_argument("--prefixes", type=int, default=None)
    exp.add_argument("--full", action="store_true", help="1200 prefixes")
    exp.add_argument("--anchors", type=int, default=30)
    exp.add_argument("--repetitions", type=int, default=10)
    exp.add_argument("--scenarios", default=",".join(SCENARIOS))
    common(exp, ("dnrp", "ils", "both"))

    fig = sub.add_parser("figure1", help="replay the seven-router example")
    fig.add_argument("--trace-out", metavar="PATH")

    topo = sub.add_parser("topology", help="write a generated topology")
    topo.add_argument("--nodes", type=int, default=154)
    topo.add_argument("--links", type=int, default=184)
    topo.add_argument("--seed", type=int, default=1)
    topo.add_argument("-o", "--out", default="-")
    return ap


def cmd_run(args) -> int:
    topo = parse_topology(args.topology)
    events = parse_events(args.events) if args.events else []
    check_events(topo, events, args.events or "events")
    sim = Simulator(topo, args.protocol, check=args.check, event_cap=args.event_cap)
    trace = sim.run(events)
    m = trace.metrics
    kinds = Counter(m.messages_by_kind)
    if args.hello_accounting == "on" and args.protocol == "ils":
        kinds["HELLO"] += hello_messages(sim.topology, m.convergence_ticks)
    row = MetricsRow("script", args.protocol, 0, sum(kinds.values()), dict(kinds),
                     m.updates_total, m.operations_total, m.convergence_ticks,
                     0, trace.quiescent, len(trace.violations))
    if args.trace_out:
        _write(args.trace_out, trace.text())
    if args.csv_out:
        _write(args.csv_out, csv_text([row]))
    print(f"{args.protocol.upper()}: {row.messages_total} messages, {row.operations_total} "
          f"operations, converged in {row.convergence_ticks} ticks", file=sys.stderr)
    for v in trace.violations:
        print(v.line())
        log.info("%s", v)
    if not trace.quiescent:
        print(f"event cap of {sim.event_cap} deliveries reached before quiescence",
              file=sys.stderr)
        return EXIT_NONQUIESCENT
    return EXIT_VIOLATION if trace.violations else EXIT_OK


def cmd_experiment(args) -> int:
    topo = parse_topology(args.topology) if args.topology else None
    prefixes = args.prefixes if args.prefixes is not None else (1200 if args.full else 120)
    scenarios = tuple(s for s in args.scenarios.split(",") if s)
    protocols = ("dnrp", "ils") if args.protocol == "both" else (args.protocol,)
    try:
        plan = ExperimentPlan(topology=topo, prefixes=prefixes, anchors=args.anchors,
                              replicas=args.replicas, scenarios=scenarios,
                              protocols=protocols, repetitions=args.repetitions,
                              seed=args.seed, hello_accounting=args.hello_accounting == "on",
                              check=args.check)
    except ValueError as e:
        raise UsageError(str(e)) from None

    traces = []

    def keep(row, trace):
        traces.append(f"# {row.scenario} {row.protocol.upper()} replicas={row.replicas_per_prefix}"
                      f" repetition={row.repetition}\n")
        traces.append(trace.text())

    def progress(row):
        log.info("%s %s r=%d rep=%d: %d messages, %d operations", row.scenario,
                 row.protocol, row.replicas_per_prefix, row.repetition,
                 row.messages_total, row.operations_total)

    rows = run_experiment(plan, progress, keep if args.trace_out else None)
    if args.csv_out:
        _write(args.csv_out, csv_text(rows))
    if args.trace_out:
        _write(args.trace_out, "".join(traces))
    sys.stderr.write(summary_text(rows))
    if any(not r.quiescent for r in rows):
        return EXIT_NONQUIESCENT
    return EXIT_VIOLATION if any(r.violations for r in rows) else EXIT_OK


def cmd_figure1(args) -> int:
    result = replay_figure1()
    if args.trace_out:
        _write(args.trace_out, result.trace.text())
    print(result.diff())
    print("figure1: " + ("all checkpoints hold" if result.ok else "MISMATCH"))
    return EXIT_OK if result.ok else EXIT_VIOLATION


def cmd_topology(args) -> int:
    try:
        topo = preferential_attachment(args.nodes, args.links, seed=args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    _write(args.out, format_topology(topo))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "experiment": cmd_experiment,
            "figure1": cmd_figure1, "topology": cmd_topology}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ParseError, UsageError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
