"""Random connected scenarios for stress-testing the engines."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .model import (
    EventBody,
    LinkCostChange,
    LinkDown,
    LinkUp,
    PrefixAdd,
    PrefixDelete,
    Topology,
)
from .sim import Simulator, SimulationTrace


@dataclass
class FuzzCase:
    seed: int
    topology: Topology
    events: list[tuple[int, EventBody]]


def random_topology(rng: random.Random, nodes=(8, 20), prefixes=(1, 5), anchors=(1, 3),
                    max_cost: int = 5) -> Topology:
    """Random spanning tree plus random chords, so the graph starts connected."""
    n = rng.randint(*nodes)
    topo = Topology(routers=set(range(1, n + 1)))
    for v in range(2, n + 1):
        topo.add_link(v, rng.randint(1, v - 1), rng.randint(1, max_cost))
    for _ in range(rng.randint(0, n)):
        a, b = rng.sample(range(1, n + 1), 2)
        if not topo.has_link(a, b):
            topo.add_link(a, b, rng.randint(1, max_cost))
    for i in range(rng.randint(*prefixes)):
        for a in rng.sample(range(1, n + 1), rng.randint(*anchors)):
            topo.add_anchor(a, f"/p{i}")
    return topo


def random_events(rng: random.Random, topo: Topology, count=(5, 15),
                  max_cost: int = 5, gap: int = 4) -> list[tuple[int, EventBody]]:
    """Valid link fail/recover/cost and prefix add/delete events.

    Gaps between events are small, so later events often land while earlier
    diffusing computations are still running.
    """
    w = topo.copy()
    failed: list[tuple[int, int]] = []
    events: list[tuple[int, EventBody]] = []
    names = sorted(w.anchors) + ["/x"]
    t = rng.randint(0, 3)
    want = rng.randint(*count)
    while len(events) < want:
        t += rng.randint(0, gap)
        kind = rng.choice(("fail", "up", "cost", "add", "del"))
        if kind == "fail" and w.links:
            key = rng.choice(sorted(w.links))
            w.remove_link(*key)
            failed.append(key)
            events.append((t, LinkDown(*key)))
        elif kind == "up":
            if failed and rng.random() < 0.6:
                a, b = failed.pop(rng.randrange(len(failed)))
            else:
                a, b = rng.sample(sorted(w.routers), 2)
            if not w.has_link(a, b):
                c = rng.randint(1, max_cost)
                w.add_link(a, b, c)
                events.append((t, LinkUp(a, b, c)))
        elif kind == "cost" and w.links:
            key = rng.choice(sorted(w.links))
            c = rng.randint(1, max_cost)
            w.set_cost(*key, c)
            events.append((t, LinkCostChange(*key, c)))
        elif kind == "add":
            p = rng.choice(names)
            r = rng.choice(sorted(w.routers))
            if r not in w.anchors.get(p, ()):
                w.add_anchor(r, p)
                events.append((t, PrefixAdd(r, p)))
        elif kind == "del" and w.anchors:
            p = rng.choice(sorted(w.anchors))
            r = rng.choice(sorted(w.anchors[p]))
            w.remove_anchor(r, p)
            events.append((t, PrefixDelete(r, p)))
    return events


def case(seed: int) -> FuzzCase:
    rng = random.Random(seed)
    topo = random_topology(rng)
    return FuzzCase(seed, topo, random_events(rng, topo))


def run_case(c: FuzzCase, protocol: str = "dnrp", check: str = "every-step",
             drop: Optional[callable] = None) -> SimulationTrace:
    return Simulator(c.topology, protocol, check=check, drop=drop).run(c.events)


@dataclass
class FuzzReport:
    runs: int = 0
    delivery_checks: int = 0
    cycles: list = field(default_factory=list)
    ordering: list = field(default_factory=list)
    divergence: list = field(default_factory=list)
    nonquiescent: list = field(default_factory=list)
    audit: list = field(default_factory=list)
    transitions: dict = field(default_factory=dict)


_CONVERGENCE = {"divergence", "successor", "active", "not-quiescent", "fd-above-distance"}


def sweep(seeds, protocol: str = "dnrp") -> FuzzReport:
    rep = FuzzReport()
    for s in seeds:
        trace = run_case(case(s), protocol)
        rep.runs += 1
        rep.delivery_checks += trace.metrics.deliveries
        if not trace.quiescent:
            rep.nonquiescent.append(s)
        for v in trace.violations:
            if v.kind == "loop":
                rep.cycles.append((s, v))
            elif v.kind in ("nsc-order", "fd-bound"):
                rep.ordering.append((s, v))
            elif v.kind in _CONVERGENCE:
                rep.divergence.append((s, v))
            else:
                rep.audit.append((s, v))
        for e in trace.audit:
            if e.what == "transition":
                key = (e.before, e.label, e.after)
                rep.transitions[key] = rep.transitions.get(key, 0) + 1
    return rep
