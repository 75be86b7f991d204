"""Idealized link-state baseline (ILS).

Adjacency and prefix LSAs are flooded with sequence numbers; a router only
forwards an LSA it has not seen before.  Routes are ranked per neighbor with
one shortest-path-first run rooted at each neighbor.  New adjacencies sync
databases with a single summary message per side, followed by whichever
LSAs the peer is missing.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .engine import PrefixView, ProtocolError, RouterSnapshot
from .model import INFINITY, Cost, PrefixName, RouterId


class LsaKind(str, Enum):
    ADJACENCY = "ADJ_LSA"
    PREFIX = "PREFIX_LSA"


@dataclass(frozen=True)
class Lsa:
    origin: RouterId
    seq: int
    kind: LsaKind
    payload: tuple

    @property
    def key(self) -> tuple[RouterId, LsaKind]:
        return (self.origin, self.kind)


@dataclass(frozen=True)
class LsaMessage:
    src: RouterId
    dst: RouterId
    lsa: Lsa

    @property
    def kind(self) -> str:
        return self.lsa.kind.value


@dataclass(frozen=True)
class SummaryMessage:
    src: RouterId
    dst: RouterId
    summary: tuple  # ((origin, kind), seq) pairs

    kind = "LSA_SUMMARY"


class IlsRouter:
    def __init__(self, me: RouterId):
        self.me = me
        self.db: dict[tuple[RouterId, LsaKind], Lsa] = {}
        self.neighbors: dict[RouterId, int] = {}
        self.local_prefixes: set[PrefixName] = set()
        self.seq = {LsaKind.ADJACENCY: 0, LsaKind.PREFIX: 0}
        self.routes: dict[PrefixName, list[tuple[Cost, RouterId]]] = {}
        self.op_counter = 0
        self.msg_counter = 0
        self.transitions: list = []

    # --- LSA handling -----------------------------------------------------

    def _payload(self, kind: LsaKind) -> tuple:
        if kind is LsaKind.ADJACENCY:
            return tuple(sorted(self.neighbors.items()))
        return tuple(sorted(self.local_prefixes))

    def _send(self, msgs: list, lsa: Lsa, targets: Iterable[RouterId]) -> None:
        for n in targets:
            msgs.append(LsaMessage(self.me, n, lsa))
            self.msg_counter += 1

    def originate_lsa(self, kind: LsaKind, skip: Optional[RouterId] = None) -> list:
        self.seq[kind] += 1
        lsa = Lsa(self.me, self.seq[kind], kind, self._payload(kind))
        self.db[lsa.key] = lsa
        msgs: list = []
        self._send(msgs, lsa, [n for n in sorted(self.neighbors) if n != skip])
        return msgs

    def flood(self, lsa: Lsa, from_: RouterId) -> list:
        have = self.db.get(lsa.key)
        if have is not None and have.seq >= lsa.seq:
            return []
        self.db[lsa.key] = lsa
        msgs: list = []
        self._send(msgs, lsa, [n for n in sorted(self.neighbors) if n != from_])
        return msgs

    def _summary(self) -> tuple:
        return tuple(sorted(((o, k.value), lsa.seq) for (o, k), lsa in self.db.items()))

    def _answer_summary(self, msg: SummaryMessage) -> list:
        theirs = {(o, LsaKind(k)): seq for (o, k), seq in msg.summary}
        msgs: list = []
        for key in sorted(self.db, key=lambda k: (k[0], k[1].value)):
            lsa = self.db[key]
            if theirs.get(key, 0) < lsa.seq:
                self._send(msgs, lsa, [msg.src])
        return msgs

    # --- shortest paths ---------------------------------------------------

    def _edges(self) -> dict[RouterId, list[tuple[RouterId, int]]]:
        adj: dict[RouterId, list[tuple[RouterId, int]]] = {}
        for (origin, kind), lsa in self.db.items():
            if kind is LsaKind.ADJACENCY:
                adj[origin] = list(lsa.payload)
        return adj

    def _spf(self, root: RouterId, adj) -> dict[RouterId, Cost]:
        dist = {root: 0}
        done = set()
        heap = [(0, root)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v, c in adj.get(u, ()):
                self.op_counter += 1
                nd = d + c
                if nd < dist.get(v, INFINITY):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def anchors(self) -> dict[PrefixName, list[RouterId]]:
        out: dict[PrefixName, list[RouterId]] = {}
        for (origin, kind), lsa in sorted(self.db.items(), key=lambda kv: kv[0][0]):
            if kind is LsaKind.PREFIX:
                for p in lsa.payload:
                    out.setdefault(p, []).append(origin)
        return out

    def recompute_routes(self) -> dict[PrefixName, list[tuple[Cost, RouterId]]]:
        adj = self._edges()
        via_tables = {n: self._spf(n, adj) for n in sorted(self.neighbors)}
        routes = {}
        for p, anchors in sorted(self.anchors().items()):
            ranking = []
            for n, table in via_tables.items():
                best = INFINITY
                for a in anchors:
                    self.op_counter += 1
                    best = min(best, table.get(a, INFINITY))
                if best < INFINITY:
                    ranking.append((best + self.neighbors[n], n))
            ranking.sort()
            routes[p] = ranking
        for p in self.local_prefixes:
            routes.setdefault(p, [])
        self.routes = routes
        return routes

    # --- event entry points -----------------------------------------------

    def start(self, neighbors: dict[RouterId, int], prefixes: Iterable[PrefixName]) -> list:
        self.neighbors = dict(neighbors)
        self.local_prefixes = set(prefixes)
        msgs = self.originate_lsa(LsaKind.ADJACENCY)
        if self.local_prefixes:
            msgs += self.originate_lsa(LsaKind.PREFIX)
        self.recompute_routes()
        return msgs

    def handle_message(self, msg) -> list:
        if msg.src not in self.neighbors:
            raise ProtocolError(f"{self.me}: message from non-neighbor {msg.src}")
        self.op_counter += 1
        if isinstance(msg, SummaryMessage):
            return self._answer_summary(msg)
        have = self.db.get(msg.lsa.key)
        out = self.flood(msg.lsa, msg.src)
        if self.db.get(msg.lsa.key) is not have:
            self.recompute_routes()
        return out

    def link_up(self, n: RouterId, cost: int) -> list:
        if n in self.neighbors:
            raise ProtocolError(f"{self.me}: link to {n} already up")
        self.op_counter += 1
        self.neighbors[n] = cost
        msgs = self.originate_lsa(LsaKind.ADJACENCY, skip=n)
        msgs.append(SummaryMessage(self.me, n, self._summary()))
        self.msg_counter += 1
        self.recompute_routes()
        return msgs

    def link_down(self, n: RouterId) -> list:
        if n not in self.neighbors:
            raise ProtocolError(f"{self.me}: link to {n} is not up")
        self.op_counter += 1
        del self.neighbors[n]
        msgs = self.originate_lsa(LsaKind.ADJACENCY)
        self.recompute_routes()
        return msgs

    def link_cost(self, n: RouterId, cost: int) -> list:
        if n not in self.neighbors:
            raise ProtocolError(f"{self.me}: link to {n} is not up")
        self.op_counter += 1
        self.neighbors[n] = cost
        msgs = self.originate_lsa(LsaKind.ADJACENCY)
        self.recompute_routes()
        return msgs

    def prefix_add(self, p: PrefixName) -> list:
        if p in self.local_prefixes:
            raise ProtocolError(f"{self.me} already anchors {p}")
        self.op_counter += 1
        self.local_prefixes.add(p)
        msgs = self.originate_lsa(LsaKind.PREFIX)
        self.recompute_routes()
        return msgs

    def prefix_delete(self, p: PrefixName) -> list:
        if p not in self.local_prefixes:
            raise ProtocolError(f"{self.me} does not anchor {p}")
        self.op_counter += 1
        self.local_prefixes.discard(p)
        msgs = self.originate_lsa(LsaKind.PREFIX)
        self.recompute_routes()
        return msgs

    # --- read-only view ---------------------------------------------------

    def snapshot(self) -> RouterSnapshot:
        anchors = self.anchors()
        routes = {}
        for p, ranking in self.routes.items():
            reported = {n: via - self.neighbors[n] for via, n in ranking}
            if p in self.local_prefixes:
                routes[p] = PrefixView(0, 0, None, self.me, False, 0, frozenset(), reported)
                continue
            best = ranking[0][0] if ranking else INFINITY
            hops = frozenset(n for via, n in ranking if via == best)
            succ = ranking[0][1] if ranking else None
            anchor = min(anchors[p]) if best < INFINITY else None
            routes[p] = PrefixView(best, best, succ, anchor, False, 0, hops, reported)
        return RouterSnapshot(self.me, dict(self.neighbors), routes, self.op_counter)
