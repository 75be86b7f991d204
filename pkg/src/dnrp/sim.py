"""Deterministic discrete-event simulator.

Events are ordered by ``(time, seq)``.  Every link has a fixed integer delay,
so deliveries on one directed link come out in the order they were sent.  A
message still in flight when its link fails (or flaps) is dropped; links carry
an epoch number so a message from an earlier incarnation is never delivered.
"""
from __future__ import annotations

import heapq
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .engine import DnrpRouter
from .ils import IlsRouter
from .model import (
    Deliver,
    EventBody,
    LinkCostChange,
    LinkDown,
    LinkUp,
    PrefixAdd,
    PrefixDelete,
    RouterId,
    RoutingMessage,
    SimEvent,
    Topology,
    format_cost,
    link_key,
)
from .verify import (
    AuditEntry,
    Violation,
    audit_flags,
    check_convergence,
    check_loop_free,
    check_ordering,
    check_quiescent_flags,
    oracle_all,
)

log = logging.getLogger(__name__)

PROTOCOLS = ("dnrp", "ils")
CHECK_MODES = ("off", "checkpoints", "every-step")


def make_router(protocol: str, me: RouterId):
    if protocol == "dnrp":
        return DnrpRouter(me)
    if protocol == "ils":
        return IlsRouter(me)
    raise ValueError(f"unknown protocol {protocol!r}")


@dataclass
class ScenarioScript:
    topology: Topology
    protocol: str = "dnrp"
    events: list[tuple[int, EventBody]] = field(default_factory=list)
    seed: int = 0
    link_delay: int = 1


@dataclass(frozen=True)
class TraceLine:
    tick: int
    direction: str
    src: RouterId
    dst: RouterId
    kind: str
    prefix: str
    distance: str

    def __str__(self) -> str:
        return (f"TICK {self.tick} {self.direction} {self.src} {self.dst} "
                f"{self.kind} {self.prefix} {self.distance}")


@dataclass
class Metrics:
    messages_by_kind: Counter = field(default_factory=Counter)
    updates_total: int = 0
    operations_total: int = 0
    deliveries: int = 0
    first_tick: Optional[int] = None
    last_tick: int = 0

    @property
    def messages_total(self) -> int:
        return sum(self.messages_by_kind.values())

    @property
    def convergence_ticks(self) -> int:
        return 0 if self.first_tick is None else self.last_tick - self.first_tick


@dataclass
class SimulationTrace:
    protocol: str
    lines: list[TraceLine] = field(default_factory=list)
    audit: list[AuditEntry] = field(default_factory=list)
    checkpoints: list[tuple[int, str, dict]] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)
    metrics: Metrics = field(default_factory=Metrics)
    quiescent: bool = True
    final: dict = field(default_factory=dict)

    def text(self) -> str:
        return "".join(f"{line}\n" for line in self.lines)


def _items(msg) -> list[tuple[str, str, str]]:
    if isinstance(msg, RoutingMessage):
        return [(r.kind.value, r.prefix, format_cost(r.distance)) for r in msg.records]
    lsa = getattr(msg, "lsa", None)
    if lsa is not None:
        return [(msg.kind, "-", str(lsa.seq))]
    return [(msg.kind, "-", "-")]


def _records(msg) -> int:
    return len(msg.records) if isinstance(msg, RoutingMessage) else 1


class Simulator:
    """Runs one protocol over one topology.

    ``check`` selects verification: ``every-step`` runs the loop and ordering
    checks after every processed event, ``checkpoints`` after each injected
    event and at the end, ``off`` only at the end when ``verify_end`` is set.
    """

    def __init__(self, topology: Topology, protocol: str = "dnrp", *,
                 check: str = "off", event_cap: Optional[int] = None,
                 record: bool = True, verify_end: bool = True,
                 drop: Optional[Callable[[object], bool]] = None,
                 routers: Optional[dict] = None):
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")
        if check not in CHECK_MODES:
            raise ValueError(f"unknown check mode {check!r}")
        self.topology = topology.copy()
        self.protocol = protocol
        self.check = check
        self.record = record
        self.verify_end = verify_end
        self.drop = drop
        sources = max(1, len(self.topology.anchors))
        if protocol == "ils":
            # every router originates its own adjacency LSA
            sources += len(self.topology.routers)
        self.event_cap = event_cap if event_cap is not None else \
            50 * max(1, len(self.topology.links)) * sources
        self.queue: list[SimEvent] = []
        self.now = 0
        self.step = 0
        self._seq = 0
        self.epochs = {key: 0 for key in self.topology.links}
        self.trace = SimulationTrace(protocol)
        self._counting = True
        self._ops_base = 0
        if routers is None:
            self.routers = {r: make_router(protocol, r) for r in sorted(self.topology.routers)}
            self._started = False
        else:
            self.routers = routers
            self._started = True

    # --- plumbing ---------------------------------------------------------

    def _push(self, time: int, body: EventBody) -> None:
        heapq.heappush(self.queue, SimEvent(time, self._seq, body))
        self._seq += 1

    def _audit(self, **kw) -> None:
        if self.record:
            self.trace.audit.append(AuditEntry(step=self.step, **kw))

    def _line(self, direction: str, msg) -> None:
        for kind, prefix, dist in _items(msg):
            if self.record:
                self.trace.lines.append(
                    TraceLine(self.now, direction, msg.src, msg.dst, kind, prefix, dist))
                self.trace.audit.append(AuditEntry(
                    step=self.step, what=direction.lower(), a=msg.src, b=msg.dst,
                    prefix=prefix, kind=kind,
                    distance=float(dist) if dist not in ("-",) else 0))

    def _collect(self, router) -> None:
        for t in router.transitions:
            self._audit(what="transition", a=router.me, prefix=t.prefix,
                        before=t.before, label=t.label, after=t.after)
        router.transitions.clear()

    def _send(self, msgs: Iterable) -> None:
        for m in msgs:
            if self.drop is not None and self.drop(m):
                self._line("DROP", m)
                continue
            link = self.topology.link(m.src, m.dst)
            self._push(self.now + link.delay, Deliver(m, self.epochs[link.key]))
            if self._counting:
                mt = self.trace.metrics
                mt.messages_by_kind[m.kind] += 1
                mt.updates_total += _records(m)
            self._line("SEND", m)

    def snapshots(self) -> dict:
        return {r: router.snapshot() for r, router in self.routers.items()}

    def operations(self) -> int:
        return sum(r.op_counter for r in self.routers.values()) - self._ops_base

    def reset_metrics(self) -> None:
        self.trace.metrics = Metrics()
        self._ops_base = sum(r.op_counter for r in self.routers.values())

    # --- events -----------------------------------------------------------

    def start(self) -> None:
        """Bring up every router with its links and local prefixes at time 0."""
        if self._started:
            return
        self._started = True
        adj = self.topology.adjacency()
        for r in sorted(self.routers):
            router = self.routers[r]
            prefixes = self.topology.local_prefixes(r)
            out = router.start(adj[r], prefixes)
            self._collect(router)
            self._send(out)

    def inject(self, body: EventBody) -> None:
        topo = self.topology
        out: list = []
        touched = []
        if isinstance(body, LinkUp):
            topo.add_link(body.a, body.b, body.cost)
            key = link_key(body.a, body.b)
            self.epochs[key] = self.epochs.get(key, 0) + 1
            self._audit(what="linkup", a=body.a, b=body.b)
            touched = [body.a, body.b]
            out += self.routers[body.a].link_up(body.b, body.cost)
            out += self.routers[body.b].link_up(body.a, body.cost)
        elif isinstance(body, LinkDown):
            topo.remove_link(body.a, body.b)
            key = link_key(body.a, body.b)
            self.epochs[key] += 1
            self._audit(what="linkdown", a=body.a, b=body.b)
            touched = [body.a, body.b]
            out += self.routers[body.a].link_down(body.b)
            out += self.routers[body.b].link_down(body.a)
        elif isinstance(body, LinkCostChange):
            if not topo.has_link(body.a, body.b):
                raise ValueError(f"cost change on missing link {body.a}-{body.b}")
            topo.set_cost(body.a, body.b, body.cost)
            touched = [body.a, body.b]
            out += self.routers[body.a].link_cost(body.b, body.cost)
            out += self.routers[body.b].link_cost(body.a, body.cost)
        elif isinstance(body, PrefixAdd):
            topo.add_anchor(body.router, body.prefix)
            touched = [body.router]
            out += self.routers[body.router].prefix_add(body.prefix)
        elif isinstance(body, PrefixDelete):
            topo.remove_anchor(body.router, body.prefix)
            touched = [body.router]
            out += self.routers[body.router].prefix_delete(body.prefix)
        else:
            raise TypeError(f"cannot inject {body!r}")
        for r in touched:
            self._collect(self.routers[r])
        self._send(out)

    def deliver(self, ev: Deliver) -> None:
        msg = ev.message
        key = link_key(msg.src, msg.dst)
        if key not in self.topology.links or self.epochs[key] != ev.epoch:
            self._line("DROP", msg)
            return
        self._line("RECV", msg)
        router = self.routers[msg.dst]
        out = router.handle_message(msg)
        self._collect(router)
        self._send(out)

    # --- checks -----------------------------------------------------------

    def _prefixes(self) -> list[str]:
        names = set(self.topology.anchors)
        for router in self.routers.values():
            names.update(router.routes)
        return sorted(names)

    def check_step(self) -> list[Violation]:
        if self.protocol != "dnrp":
            return []
        snaps = self.snapshots()
        found = []
        for p in self._prefixes():
            v = check_loop_free(snaps, p, self.step)
            if v is not None:
                found.append(v)
            found += check_ordering(snaps, p, self.step)
        return found

    def check_final(self) -> list[Violation]:
        snaps = self.snapshots()
        found = check_quiescent_flags(snaps, self.step)
        for p, result in oracle_all(self.topology, self._prefixes()).items():
            found += check_convergence(snaps, result, self.step)
            if self.protocol == "dnrp":
                v = check_loop_free(snaps, p, self.step)
                if v is not None:
                    found.append(v)
        return found

    # --- main loop --------------------------------------------------------

    def run(self, events: Iterable[tuple[int, EventBody]] = ()) -> SimulationTrace:
        for time, body in sorted(events, key=lambda tb: tb[0]):
            self._push(time, body)
        self.start()
        trace = self.trace
        mt = trace.metrics
        while self.queue:
            if mt.deliveries >= self.event_cap:
                trace.quiescent = False
                log.warning("event cap %d reached at tick %d", self.event_cap, self.now)
                break
            ev = heapq.heappop(self.queue)
            self.now = ev.time
            self.step += 1
            if isinstance(ev.body, Deliver):
                mt.deliveries += 1
                self.deliver(ev.body)
            else:
                if mt.first_tick is None:
                    mt.first_tick = self.now
                self.inject(ev.body)
                if self.check == "checkpoints":
                    trace.violations += self.check_step()
                    if self.record:
                        trace.checkpoints.append((self.now, f"event {self.step}",
                                                  self.snapshots()))
            mt.last_tick = self.now
            if self.check == "every-step":
                trace.violations += self.check_step()
        if mt.first_tick is None:
            mt.first_tick = 0
        mt.operations_total = self.operations()
        if trace.quiescent and self.verify_end:
            trace.violations += self.check_final()
            if self.protocol == "dnrp" and self.record:
                trace.violations += audit_flags(trace.audit)
        trace.final = self.snapshots()
        return trace


def run(script: ScenarioScript, **kw) -> SimulationTrace:
    topo = script.topology
    if script.link_delay != 1:
        topo = topo.copy()
        for key, link in list(topo.links.items()):
            if link.delay == 1:
                topo.links[key] = type(link)(link.a, link.b, link.cost, script.link_delay)
    return Simulator(topo, script.protocol, **kw).run(script.events)
