"""Per-router DNRP state machine.

One :class:`DnrpRouter` holds the neighbor table, the routing table and the
per-neighbor flags of a single router.  Every public ``handle_*``/``link_*``/
``prefix_*`` entry point processes one event to completion and returns the
routing messages it produced (already batched per neighbor).

Origin states follow the usual diffusing-computation numbering: 0 passive,
1 originated a query, 2 originated and saw the successor distance grow,
3 relaying a query from the successor, 4 relaying (or holding a successor
query) after a successor distance increase.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .model import (
    INFINITY,
    Cost,
    Kind,
    PrefixName,
    RouterId,
    RoutingMessage,
    UpdateRecord,
    cost_add,
    order_less,
)


class Mode(str, Enum):
    PASSIVE = "PASSIVE"
    ACTIVE = "ACTIVE"


class ProtocolError(Exception):
    """An input the protocol can never legitimately receive (simulator bug)."""


@dataclass
class NeighborEntry:
    distance: Cost = INFINITY
    anchor: Optional[RouterId] = None


@dataclass
class NeighborFlags:
    update: bool = False
    kind: Kind = Kind.UPDATE
    pending_reply: bool = False
    pending_query: bool = False


@dataclass
class RouteEntry:
    prefix: PrefixName
    distance: Cost = INFINITY
    feasible_distance: Cost = INFINITY
    successor: Optional[RouterId] = None
    anchor: Optional[RouterId] = None
    mode: Mode = Mode.PASSIVE
    origin: int = 0
    flags: dict[RouterId, NeighborFlags] = field(default_factory=dict)
    valid_next_hops: set[RouterId] = field(default_factory=set)


@dataclass(frozen=True)
class Transition:
    prefix: PrefixName
    before: int
    label: str
    after: int


# Labels used in the transition log.  Self-loops are not logged.
SRC_FAIL = "src_fail"
SUCC_QUERY_SRC_FAIL = "succ_query_src_fail"
LAST_REPLY = "last_reply"
LAST_REPLY_SRC_OK = "last_reply_src_ok"
LAST_REPLY_SRC_FAIL = "last_reply_src_fail"
SUCC_INCREASE = "succ_increase"
SUCC_QUERY = "succ_query"


@dataclass(frozen=True)
class PrefixView:
    distance: Cost
    feasible_distance: Cost
    successor: Optional[RouterId]
    anchor: Optional[RouterId]
    active: bool
    origin: int
    next_hops: frozenset
    reported: dict
    pending_replies: frozenset = frozenset()
    pending_queries: frozenset = frozenset()


@dataclass(frozen=True)
class RouterSnapshot:
    me: RouterId
    neighbors: dict
    routes: dict
    op_counter: int


class DnrpRouter:
    def __init__(self, me: RouterId):
        self.me = me
        self.neighbors: dict[RouterId, int] = {}
        self.neighbor_table: dict[PrefixName, dict[RouterId, NeighborEntry]] = {}
        self.routes: dict[PrefixName, RouteEntry] = {}
        self.local_prefixes: set[PrefixName] = set()
        self.op_counter = 0
        self.transitions: list[Transition] = []
        self._out: list[tuple[RouterId, UpdateRecord]] = []

    # --- table helpers ----------------------------------------------------

    def entry(self, p: PrefixName) -> RouteEntry:
        rt = self.routes.get(p)
        if rt is None:
            rt = self.routes[p] = RouteEntry(p)
            self.neighbor_table[p] = {}
        return rt

    def reported(self, p: PrefixName, n: RouterId) -> Cost:
        e = self.neighbor_table.get(p, {}).get(n)
        return INFINITY if e is None else e.distance

    def via(self, p: PrefixName, n: Optional[RouterId]) -> Cost:
        """Distance to ``p`` through ``n``; ``n == me`` is the local attachment."""
        if n is None:
            return INFINITY
        if n == self.me:
            return 0 if p in self.local_prefixes else INFINITY
        if n not in self.neighbors:
            return INFINITY
        return cost_add(self.reported(p, n), self.neighbors[n])

    def _anchor_via(self, p: PrefixName, n: RouterId) -> Optional[RouterId]:
        if n == self.me:
            return self.me
        e = self.neighbor_table[p].get(n)
        return None if e is None else e.anchor

    def _candidates(self, p: PrefixName) -> list[RouterId]:
        cands = sorted(self.neighbors)
        if p in self.local_prefixes:
            cands.insert(0, self.me)
        return cands

    # --- loop-freedom conditions ------------------------------------------

    def best_candidate(self, p: PrefixName) -> tuple[Optional[RouterId], Cost]:
        cand, dmin = None, INFINITY
        for k in self._candidates(p):
            self.op_counter += 1
            dk = self.via(p, k)
            if dk < dmin or (dk == dmin and dk < INFINITY and cand is not None
                             and order_less(k, cand)):
                cand, dmin = k, dk
        return cand, dmin

    def _feasible(self, p: PrefixName, n: RouterId, fd: Cost) -> bool:
        if n == self.me:
            return p in self.local_prefixes
        d = self.reported(p, n)
        return d < INFINITY and (d < fd or (d == fd and order_less(n, self.me)))

    def src_holds(self, p: PrefixName, n: RouterId) -> bool:
        rt = self.entry(p)
        if n != self.me and n not in self.neighbors:
            return False
        if not self._feasible(p, n, rt.feasible_distance):
            return False
        return self.via(p, n) == min((self.via(p, k) for k in self._candidates(p)),
                                     default=INFINITY)

    def nsc_next_hops(self, p: PrefixName) -> set[RouterId]:
        fd = self.entry(p).feasible_distance
        hops = set()
        if fd == INFINITY:
            return hops
        for k in sorted(self.neighbors):
            self.op_counter += 1
            if self._feasible(p, k, fd):
                hops.add(k)
        return hops

    def select_successor(self, p: PrefixName) -> tuple[bool, Optional[RouterId], Cost]:
        """Smallest-id neighbor satisfying SRC.

        Returns ``(ok, successor, dmin)``.  With no finite candidate and an
        infinite feasible distance there is nothing to protect, so ``ok`` is
        true with no successor.
        """
        rt = self.routes[p]
        _, dmin = self.best_candidate(p)
        if dmin == INFINITY:
            return rt.feasible_distance == INFINITY, None, INFINITY
        for k in self._candidates(p):
            self.op_counter += 1
            if self.via(p, k) == dmin and self._feasible(p, k, rt.feasible_distance):
                return True, k, dmin
        return False, None, dmin

    # --- flags and output -------------------------------------------------

    def _flag(self, p: PrefixName, n: RouterId, kind: Kind) -> None:
        fl = self.routes[p].flags.setdefault(n, NeighborFlags())
        fl.update = True
        fl.kind = kind

    def _flag_all(self, p: PrefixName, kind: Kind) -> None:
        for k in sorted(self.neighbors):
            self.op_counter += 1
            self._flag(p, k, kind)
            if kind is Kind.QUERY:
                self.routes[p].flags[k].pending_reply = True

    def _record_for(self, rt: RouteEntry, kind: Kind) -> UpdateRecord:
        if rt.distance == INFINITY:
            return UpdateRecord(rt.prefix, kind, INFINITY, None)
        return UpdateRecord(rt.prefix, kind, rt.distance, rt.anchor)

    def _flush(self, p: PrefixName) -> None:
        rt = self.routes[p]
        for n in sorted(rt.flags):
            fl = rt.flags[n]
            if not fl.update or n not in self.neighbors:
                continue
            # UPDATEs owed while ACTIVE are held until the next PASSIVE transition.
            if rt.mode is Mode.ACTIVE and fl.kind is Kind.UPDATE:
                continue
            self._out.append((n, self._record_for(rt, fl.kind)))
            fl.update = False
            fl.kind = Kind.UPDATE

    def _drain(self) -> list[RoutingMessage]:
        batches: dict[RouterId, list[list[UpdateRecord]]] = {}
        seen: dict[RouterId, set[PrefixName]] = {}
        for n, rec in self._out:
            lst = batches.setdefault(n, [[]])
            names = seen.setdefault(n, set())
            if rec.prefix in names:
                lst.append([])
                names.clear()
            lst[-1].append(rec)
            names.add(rec.prefix)
        self._out = []
        return [RoutingMessage(self.me, n, tuple(b))
                for n in sorted(batches) for b in batches[n]]

    def _refresh(self, p: PrefixName) -> None:
        rt = self.routes[p]
        rt.valid_next_hops = self.nsc_next_hops(p)

    def _log(self, p: PrefixName, before: int, label: str, after: int) -> None:
        self.transitions.append(Transition(p, before, label, after))

    # --- route changes ----------------------------------------------------

    def _adopt(self, p: PrefixName, succ: Optional[RouterId], dmin: Cost) -> bool:
        rt = self.routes[p]
        old = (rt.distance, rt.anchor)
        if succ is None:
            rt.successor, rt.distance, rt.anchor = None, INFINITY, None
        else:
            rt.successor = succ
            rt.anchor = self._anchor_via(p, succ)
            rt.distance = dmin
            rt.feasible_distance = min(rt.feasible_distance, dmin)
        return (rt.distance, rt.anchor) != old

    def _freeze_distance(self, rt: RouteEntry) -> None:
        rt.distance = self.via(rt.prefix, rt.successor)
        rt.anchor = (self._anchor_via(rt.prefix, rt.successor)
                     if rt.distance < INFINITY else None)

    def _go_active(self, p: PrefixName, origin: int, label: str) -> None:
        rt = self.routes[p]
        rt.mode = Mode.ACTIVE
        rt.origin = origin
        self._freeze_distance(rt)
        self._log(p, 0, label, origin)
        self._flag_all(p, Kind.QUERY)
        if not self.neighbors:
            self._last_reply(p)

    def _set_origin(self, p: PrefixName, origin: int, label: str) -> None:
        rt = self.routes[p]
        if rt.origin != origin:
            self._log(p, rt.origin, label, origin)
            rt.origin = origin

    def _check_increase(self, p: PrefixName, before: Cost) -> None:
        rt = self.routes[p]
        if self.via(p, rt.successor) > before:
            if rt.origin == 1:
                self._set_origin(p, 2, SUCC_INCREASE)
            elif rt.origin == 3:
                self._set_origin(p, 4, SUCC_INCREASE)

    def _all_replied(self, p: PrefixName) -> bool:
        rt = self.routes[p]
        done = True
        for k in sorted(rt.flags):
            self.op_counter += 1
            if rt.flags[k].pending_reply:
                done = False
        return done

    def _last_reply(self, p: PrefixName) -> None:
        rt = self.routes[p]
        if rt.origin in (1, 3):
            rt.feasible_distance = INFINITY
        self.update_route(p)

    def update_route(self, p: PrefixName) -> None:
        rt = self.routes[p]
        before = rt.origin
        ok, succ, dmin = self.select_successor(p)
        if ok:
            rt.mode = Mode.PASSIVE
            rt.origin = 0
            label = LAST_REPLY if before in (1, 3) else LAST_REPLY_SRC_OK
            self._log(p, before, label, 0)
            if self._adopt(p, succ, dmin):
                self._flag_all(p, Kind.UPDATE)
            for k in sorted(rt.flags):
                self.op_counter += 1
                fl = rt.flags[k]
                if fl.pending_query:
                    fl.pending_query = False
                    self._flag(p, k, Kind.REPLY)
            return
        if before not in (2, 4):
            raise AssertionError(f"SRC cannot fail after a feasible-distance reset ({p})")
        after = 1 if before == 2 else 3
        rt.origin = after
        self._log(p, before, LAST_REPLY_SRC_FAIL, after)
        self._freeze_distance(rt)
        self._flag_all(p, Kind.QUERY)
        if not self.neighbors:
            self._last_reply(p)

    # --- per-record processing --------------------------------------------

    def _store(self, p: PrefixName, n: RouterId, rec: UpdateRecord) -> None:
        self.neighbor_table[p][n] = NeighborEntry(rec.distance, rec.anchor)

    def handle_passive(self, p: PrefixName, n: Optional[RouterId] = None,
                       rec: Optional[UpdateRecord] = None) -> None:
        rt = self.routes[p]
        if rt.mode is not Mode.PASSIVE:
            raise ProtocolError(f"{self.me}: handle_passive on ACTIVE {p}")
        is_query = rec is not None and rec.kind is Kind.QUERY
        if rec is not None:
            if rec.kind is Kind.REPLY:
                raise ProtocolError(f"{self.me}: REPLY from {n} for {p} while PASSIVE")
            self._store(p, n, rec)
        ok, succ, dmin = self.select_successor(p)
        if ok:
            if self._adopt(p, succ, dmin):
                self._flag_all(p, Kind.UPDATE)
            if is_query:
                self._flag(p, n, Kind.REPLY)
            return
        from_successor = is_query and n == rt.successor
        if is_query and not from_successor:
            # Answer with the current distance before starting our own computation.
            self._flag(p, n, Kind.REPLY)
            self._flush(p)
        if from_successor:
            rt.flags.setdefault(n, NeighborFlags()).pending_query = True
            self._go_active(p, 3, SUCC_QUERY_SRC_FAIL)
        else:
            self._go_active(p, 1, SRC_FAIL)

    def handle_active(self, p: PrefixName, n: RouterId, rec: UpdateRecord) -> None:
        rt = self.routes[p]
        if rt.mode is not Mode.ACTIVE:
            raise ProtocolError(f"{self.me}: handle_active on PASSIVE {p}")
        if rec.kind is Kind.REPLY:
            fl = rt.flags.get(n)
            if fl is None or not fl.pending_reply:
                raise ProtocolError(f"{self.me}: unexpected REPLY from {n} for {p}")
        before = self.via(p, rt.successor)
        self._store(p, n, rec)
        if rec.kind is Kind.QUERY:
            if n == rt.successor and rt.origin in (1, 2):
                rt.flags.setdefault(n, NeighborFlags()).pending_query = True
                self._set_origin(p, 4, SUCC_QUERY)
            else:
                self._flag(p, n, Kind.REPLY)
        self._check_increase(p, before)
        if rec.kind is Kind.REPLY:
            rt.flags[n].pending_reply = False
            if self._all_replied(p):
                self._last_reply(p)

    def _finish(self, p: PrefixName) -> None:
        self._refresh(p)
        self._flush(p)

    # --- event entry points -----------------------------------------------

    def start(self, neighbors: dict[RouterId, int], prefixes) -> list[RoutingMessage]:
        self.neighbors = dict(neighbors)
        out: list[RoutingMessage] = []
        for p in sorted(prefixes):
            out += self.prefix_add(p)
        return out

    def handle_message(self, msg: RoutingMessage) -> list[RoutingMessage]:
        if msg.dst != self.me:
            raise ProtocolError(f"message for {msg.dst} delivered to {self.me}")
        if msg.src not in self.neighbors:
            raise ProtocolError(f"{self.me}: message from non-neighbor {msg.src}")
        self.op_counter += 1
        for rec in msg.records:
            rt = self.entry(rec.prefix)
            if rt.mode is Mode.PASSIVE:
                self.handle_passive(rec.prefix, msg.src, rec)
            else:
                self.handle_active(rec.prefix, msg.src, rec)
            self._finish(rec.prefix)
        return self._drain()

    def link_up(self, n: RouterId, cost: int) -> list[RoutingMessage]:
        if n in self.neighbors or n == self.me:
            raise ProtocolError(f"{self.me}: link to {n} already up")
        self.op_counter += 1
        self.neighbors[n] = cost
        for p in sorted(self.routes):
            rt = self.routes[p]
            rt.flags.pop(n, None)
            if rt.distance < INFINITY:
                self._flag(p, n, Kind.UPDATE)
            self._finish(p)
        return self._drain()

    def link_down(self, n: RouterId) -> list[RoutingMessage]:
        if n not in self.neighbors:
            raise ProtocolError(f"{self.me}: link to {n} is not up")
        self.op_counter += 1
        before = {p: self.via(p, rt.successor) for p, rt in self.routes.items()}
        del self.neighbors[n]
        for p in sorted(self.routes):
            rt = self.routes[p]
            old = self.neighbor_table[p].pop(n, None)
            fl = rt.flags.pop(n, None)
            if rt.mode is Mode.PASSIVE:
                if rt.successor == n or (old is not None and old.distance < INFINITY):
                    self.handle_passive(p)
            else:
                # A dead successor link counts as a REPLY carrying infinity.
                self._check_increase(p, before[p])
                if fl is not None and fl.pending_reply and self._all_replied(p):
                    self._last_reply(p)
            self._finish(p)
        return self._drain()

    def link_cost(self, n: RouterId, cost: int) -> list[RoutingMessage]:
        if n not in self.neighbors:
            raise ProtocolError(f"{self.me}: link to {n} is not up")
        self.op_counter += 1
        before = {p: self.via(p, rt.successor) for p, rt in self.routes.items()}
        self.neighbors[n] = cost
        for p in sorted(self.routes):
            rt = self.routes[p]
            if self.reported(p, n) == INFINITY:
                continue
            if rt.mode is Mode.PASSIVE:
                self.handle_passive(p)
            else:
                self._check_increase(p, before[p])
            self._finish(p)
        return self._drain()

    def prefix_add(self, p: PrefixName) -> list[RoutingMessage]:
        if p in self.local_prefixes:
            raise ProtocolError(f"{self.me} already anchors {p}")
        self.op_counter += 1
        rt = self.entry(p)
        self.local_prefixes.add(p)
        if rt.mode is Mode.PASSIVE:
            self.handle_passive(p)
        self._finish(p)
        return self._drain()

    def prefix_delete(self, p: PrefixName) -> list[RoutingMessage]:
        if p not in self.local_prefixes:
            raise ProtocolError(f"{self.me} does not anchor {p}")
        self.op_counter += 1
        rt = self.routes[p]
        before = self.via(p, rt.successor)
        self.local_prefixes.discard(p)
        if rt.mode is Mode.PASSIVE:
            self.handle_passive(p)
        else:
            self._check_increase(p, before)
        self._finish(p)
        return self._drain()

    # --- read-only view ---------------------------------------------------

    def snapshot(self) -> RouterSnapshot:
        routes = {}
        for p, rt in self.routes.items():
            row = self.neighbor_table[p]
            routes[p] = PrefixView(
                distance=rt.distance,
                feasible_distance=rt.feasible_distance,
                successor=None if rt.successor == self.me else rt.successor,
                anchor=rt.anchor,
                active=rt.mode is Mode.ACTIVE,
                origin=rt.origin,
                next_hops=frozenset(rt.valid_next_hops),
                reported={n: row[n].distance for n in self.neighbors if n in row},
                pending_replies=frozenset(n for n, f in rt.flags.items() if f.pending_reply),
                pending_queries=frozenset(n for n, f in rt.flags.items() if f.pending_query),
            )
        return RouterSnapshot(self.me, dict(self.neighbors), routes, self.op_counter)
