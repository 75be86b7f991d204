"""Prefix and link change experiments comparing DNRP with the ILS baseline.

Every cell (replicas, scenario, protocol, repetition) starts from a
converged network, applies one scripted change and runs to quiescence.
Messages are counted where the simulator enqueues them, so both protocols
are measured the same way.
"""
from __future__ import annotations

import csv
import io
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean
from typing import Iterable, Optional

import networkx as nx

from .model import (
    EventBody,
    LinkDown,
    LinkUp,
    PrefixAdd,
    PrefixDelete,
    Topology,
)
from .sim import Simulator
from .topogen import pick_anchors, preferential_attachment
from .warm import converged_routers

SCENARIOS = ("prefix-add", "prefix-del", "link-fail", "link-recover")
HELLO_INTERVAL = 10
EVENT_TICK = 1

COLUMNS = ["scenario", "protocol", "replicas_per_prefix", "messages_total",
           "messages_by_kind", "updates_total", "operations_total",
           "convergence_ticks", "repetition", "quiescent"]


@dataclass
class MetricsRow:
    scenario: str
    protocol: str
    replicas_per_prefix: int
    messages_total: int
    messages_by_kind: dict
    updates_total: int
    operations_total: int
    convergence_ticks: int
    repetition: int = 0
    quiescent: bool = True
    violations: int = 0

    def __post_init__(self):
        if self.messages_total != sum(self.messages_by_kind.values()):
            raise ValueError("messages_total must equal the per-kind sum")

    def cells(self) -> list[str]:
        kinds = ";".join(f"{k}={v}" for k, v in sorted(self.messages_by_kind.items()))
        return [self.scenario, self.protocol.upper(), str(self.replicas_per_prefix),
                str(self.messages_total), kinds, str(self.updates_total),
                str(self.operations_total), str(self.convergence_ticks),
                str(self.repetition), "1" if self.quiescent else "0"]


@dataclass
class ExperimentPlan:
    topology: Optional[Topology] = None
    prefixes: int = 120
    anchors: int = 30
    replicas: tuple = (1, 2, 3, 4, 5, 6)
    scenarios: tuple = SCENARIOS
    protocols: tuple = ("dnrp", "ils")
    repetitions: int = 10
    seed: int = 1
    hello_accounting: bool = False
    check: str = "off"

    def __post_init__(self):
        if self.topology is None:
            self.topology = preferential_attachment(154, 184, seed=self.seed)
        bad = [s for s in self.scenarios if s not in SCENARIOS]
        if bad:
            raise ValueError(f"unknown scenario(s): {', '.join(bad)}")
        if self.anchors > len(self.topology.routers):
            raise ValueError("more anchors than routers")
        if max(self.replicas) > self.anchors or min(self.replicas) < 1:
            raise ValueError("replicas must lie between 1 and the anchor count")
        if self.prefixes < 1 or self.repetitions < 1:
            raise ValueError("need at least one prefix and one repetition")


@dataclass
class Cell:
    """The scripted change of one (replicas, repetition) draw, shared by all scenarios."""

    base: Topology
    new_prefix: str
    new_anchors: list
    deleted: tuple
    link: tuple


def _strip_anchors(topo: Topology) -> Topology:
    t = topo.copy()
    t.anchors = {}
    return t


def draw_cell(plan: ExperimentPlan, anchor_pool: list, replicas: int, rep: int,
              links: list) -> Cell:
    rng = random.Random(f"{plan.seed}/{replicas}/{rep}")
    base = _strip_anchors(plan.topology)
    for i in range(plan.prefixes):
        for a in rng.sample(anchor_pool, replicas):
            base.add_anchor(a, f"/p{i}")
    new_anchors = sorted(rng.sample(anchor_pool, replicas))
    victim = f"/p{rng.randrange(plan.prefixes)}"
    deleted = (rng.choice(sorted(base.anchors[victim])), victim)
    link = rng.choice(links)
    return Cell(base, "/new", new_anchors, deleted, link)


def candidate_links(topo: Topology) -> list:
    """Links whose failure leaves the network connected."""
    g = nx.Graph()
    g.add_nodes_from(topo.routers)
    g.add_edges_from(topo.links)
    bridges = {tuple(sorted(e)) for e in nx.bridges(g)}
    return [key for key in sorted(topo.links) if key not in bridges]


def script(cell: Cell, scenario: str) -> tuple[Topology, list[tuple[int, EventBody]]]:
    base = cell.base
    if scenario == "prefix-add":
        return base, [(EVENT_TICK, PrefixAdd(a, cell.new_prefix)) for a in cell.new_anchors]
    if scenario == "prefix-del":
        return base, [(EVENT_TICK, PrefixDelete(*cell.deleted))]
    a, b = cell.link
    if scenario == "link-fail":
        return base, [(EVENT_TICK, LinkDown(a, b))]
    if scenario == "link-recover":
        cost = base.link(a, b).cost
        down = base.copy()
        down.remove_link(a, b)
        return down, [(EVENT_TICK, LinkUp(a, b, cost))]
    raise ValueError(f"unknown scenario {scenario!r}")


def hello_messages(topo: Topology, ticks: int) -> int:
    """HELLOs both ends of every link send during the measured interval."""
    return 2 * len(topo.links) * max(1, math.ceil(ticks / HELLO_INTERVAL))


def run_cell(topo: Topology, events, protocol: str, check: str = "off",
             hello: bool = False, record: bool = False):
    sim = Simulator(topo, protocol, check=check, record=record,
                    routers=converged_routers(topo, protocol))
    trace = sim.run(events)
    kinds = Counter(trace.metrics.messages_by_kind)
    if hello and protocol == "ils":
        kinds["HELLO"] += hello_messages(sim.topology, trace.metrics.convergence_ticks)
    return trace, kinds


def run_experiment(plan: ExperimentPlan, progress=None, on_trace=None) -> list[MetricsRow]:
    """Run every cell of the plan in enumeration order.

    ``progress(row)`` is called after each cell; ``on_trace(row, trace)``
    additionally receives the full recorded trace (recording is only switched
    on when it is given).
    """
    anchor_pool = pick_anchors(plan.topology, plan.anchors, plan.seed)
    links = candidate_links(plan.topology)
    if not links:
        raise ValueError("every link is a bridge; no link can fail without a partition")
    rows = []
    for replicas in plan.replicas:
        for rep in range(plan.repetitions):
            cell = draw_cell(plan, anchor_pool, replicas, rep, links)
            for scenario in plan.scenarios:
                topo, events = script(cell, scenario)
                for protocol in plan.protocols:
                    trace, kinds = run_cell(topo, events, protocol, plan.check,
                                            plan.hello_accounting, on_trace is not None)
                    m = trace.metrics
                    rows.append(MetricsRow(
                        scenario, protocol, replicas, sum(kinds.values()), dict(kinds),
                        m.updates_total, m.operations_total, m.convergence_ticks,
                        rep, trace.quiescent, len(trace.violations)))
                    if on_trace is not None:
                        on_trace(rows[-1], trace)
                    if progress is not None:
                        progress(rows[-1])
    return rows


@dataclass
class Summary:
    scenario: str
    protocol: str
    replicas_per_prefix: int
    runs: int
    messages: float
    operations: float
    excluded: int = 0


def averages(rows: Iterable[MetricsRow]) -> dict[tuple, Summary]:
    groups: dict[tuple, list[MetricsRow]] = {}
    for row in rows:
        groups.setdefault((row.scenario, row.protocol, row.replicas_per_prefix), []).append(row)
    out = {}
    for key, group in groups.items():
        good = [r for r in group if r.quiescent]
        out[key] = Summary(*key, len(good),
                           mean(r.messages_total for r in good) if good else math.nan,
                           mean(r.operations_total for r in good) if good else math.nan,
                           len(group) - len(good))
    return out


def csv_text(rows: list[MetricsRow]) -> str:
    if not rows:
        raise ValueError("refusing to write a CSV with no rows")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow(row.cells())
    return buf.getvalue()


def emit_csv(rows: list[MetricsRow], path) -> None:
    Path(path).write_text(csv_text(rows))


def summary_text(rows: list[MetricsRow]) -> str:
    avg = averages(rows)
    lines = ["scenario       replicas  protocol  runs  mean_messages  mean_operations"]
    for key in sorted(avg, key=lambda k: (SCENARIOS.index(k[0]) if k[0] in SCENARIOS else 9,
                                          k[2], k[1])):
        s = avg[key]
        lines.append(f"{s.scenario:14} {s.replicas_per_prefix:8}  {s.protocol.upper():8}"
                     f"  {s.runs:4}  {s.messages:13.1f}  {s.operations:15.1f}")
    return "\n".join(lines) + "\n"
