"""Independent correctness checks.

Everything here works from router snapshots and the simulator's audit log,
never from engine internals.  The shortest-path oracle is networkx, so it
shares no code with either protocol engine.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import networkx as nx

from .model import INFINITY, Cost, Kind, PrefixName, RouterId, Topology


@dataclass(frozen=True)
class Violation:
    kind: str
    event_index: int
    prefix: str
    routers: tuple = ()
    detail: str = ""

    def line(self) -> str:
        parts = ["VIOLATION", self.kind, str(self.event_index), self.prefix or "-"]
        parts.extend(str(r) for r in self.routers)
        return " ".join(parts)

    def __str__(self) -> str:
        where = f" at event {self.event_index}" if self.event_index >= 0 else ""
        who = ", ".join(str(r) for r in self.routers)
        text = f"{self.kind} for prefix {self.prefix!r}{where}: routers [{who}]"
        return f"{text} ({self.detail})" if self.detail else text


# --- loop freedom ---------------------------------------------------------

def next_hop_graph(snapshots: Mapping, p: PrefixName) -> dict[RouterId, frozenset]:
    graph = {}
    for r, snap in snapshots.items():
        view = snap.routes.get(p)
        graph[r] = view.next_hops if view is not None else frozenset()
    return graph


def find_cycle(graph: Mapping[RouterId, Iterable[RouterId]]) -> Optional[list[RouterId]]:
    indeg = {v: 0 for v in graph}
    for v, outs in graph.items():
        for w in outs:
            indeg[w] = indeg.get(w, 0) + 1
    ready = [v for v, d in indeg.items() if d == 0]
    removed = set()
    while ready:
        v = ready.pop()
        removed.add(v)
        for w in graph.get(v, ()):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    left = [v for v in indeg if v not in removed]
    if not left:
        return None
    left_set = set(left)
    preds: dict[RouterId, list[RouterId]] = {v: [] for v in left}
    for v in left:
        for w in graph.get(v, ()):
            if w in left_set:
                preds[w].append(v)
    # Every leftover node keeps a leftover predecessor; walk predecessors
    # until a node repeats, then read the cycle forwards.
    path, pos = [], {}
    v = min(left)
    while v not in pos:
        pos[v] = len(path)
        path.append(v)
        v = min(preds[v])
    cycle = path[pos[v]:]
    cycle.reverse()
    return cycle


def check_loop_free(snapshots: Mapping, p: PrefixName,
                    event_index: int = -1) -> Optional[Violation]:
    cycle = find_cycle(next_hop_graph(snapshots, p))
    if cycle is None:
        return None
    return Violation("loop", event_index, p, tuple(cycle),
                     f"next-hop cycle of length {len(cycle)}")


def check_ordering(snapshots: Mapping, p: PrefixName,
                   event_index: int = -1) -> list[Violation]:
    """Per-edge lexicographic test plus the feasible-distance bound on reported values.

    For every next-hop edge (i, n): (reported distance of n, n) < (fd of i, i).
    For every stored report of n at i: fd of n <= that report.  Together they
    make (fd, id) strictly decrease along every next-hop edge.
    """
    out = []
    for i, snap in snapshots.items():
        view = snap.routes.get(p)
        if view is None:
            continue
        for n in view.next_hops:
            d = view.reported.get(n, INFINITY)
            if not (d, n) < (view.feasible_distance, i):
                out.append(Violation("nsc-order", event_index, p, (i, n),
                                     f"({d}, {n}) !< ({view.feasible_distance}, {i})"))
        for n, d in view.reported.items():
            nsnap = snapshots.get(n)
            nview = nsnap.routes.get(p) if nsnap is not None else None
            fd_n = nview.feasible_distance if nview is not None else INFINITY
            if d < INFINITY and fd_n > d:
                out.append(Violation("fd-bound", event_index, p, (n, i),
                                     f"fd {fd_n} at {n} exceeds {d} held by {i}"))
    return out


# --- shortest-path oracle -------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    prefix: PrefixName
    distance: dict
    first_hops: dict
    nearest_anchors: dict


def _graph(topology: Topology) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(topology.routers)
    for link in topology.links.values():
        g.add_edge(link.a, link.b, weight=link.cost)
    return g


def oracle(topology: Topology, p: PrefixName, graph: Optional[nx.Graph] = None) -> OracleResult:
    g = graph if graph is not None else _graph(topology)
    anchors = sorted(topology.anchors.get(p, ()))
    dist: dict[RouterId, Cost] = {r: INFINITY for r in topology.routers}
    nearest: dict[RouterId, frozenset] = {r: frozenset() for r in topology.routers}
    hops: dict[RouterId, frozenset] = {r: frozenset() for r in topology.routers}
    if not anchors:
        return OracleResult(p, dist, hops, nearest)
    dist.update(nx.multi_source_dijkstra_path_length(g, set(anchors)))
    per_anchor = {a: nx.single_source_dijkstra_path_length(g, a) for a in anchors}
    for r in topology.routers:
        d = dist[r]
        if d == INFINITY:
            continue
        nearest[r] = frozenset(a for a in anchors if per_anchor[a].get(r) == d)
        if d > 0:
            hops[r] = frozenset(n for n in g[r]
                                if dist.get(n, INFINITY) + g[r][n]["weight"] == d)
    return OracleResult(p, dist, hops, nearest)


def oracle_all(topology: Topology, prefixes: Iterable[PrefixName]) -> dict[PrefixName, OracleResult]:
    g = _graph(topology)
    return {p: oracle(topology, p, g) for p in prefixes}


def check_convergence(snapshots: Mapping, result: OracleResult,
                      event_index: int = -1) -> list[Violation]:
    p = result.prefix
    out = []
    for r in sorted(snapshots):
        view = snapshots[r].routes.get(p)
        want = result.distance.get(r, INFINITY)
        if view is None:
            if want != INFINITY:
                out.append(Violation("divergence", event_index, p, (r,),
                                     f"no route, oracle distance {want}"))
            continue
        if view.active:
            out.append(Violation("active", event_index, p, (r,), "ACTIVE after quiescence"))
        if view.distance != want:
            out.append(Violation("divergence", event_index, p, (r,),
                                 f"distance {view.distance}, oracle {want}"))
            continue
        if want < INFINITY and want > 0 and view.successor not in result.first_hops[r]:
            out.append(Violation("successor", event_index, p, (r,),
                                 f"successor {view.successor} not in "
                                 f"{sorted(result.first_hops[r])}"))
        if view.feasible_distance > view.distance:
            out.append(Violation("fd-above-distance", event_index, p, (r,),
                                 f"fd {view.feasible_distance} > d {view.distance}"))
    return out


def check_quiescent_flags(snapshots: Mapping, event_index: int = -1) -> list[Violation]:
    out = []
    for r in sorted(snapshots):
        for p in sorted(snapshots[r].routes):
            view = snapshots[r].routes[p]
            if view.active or view.pending_replies:
                out.append(Violation("not-quiescent", event_index, p, (r,),
                                     f"active={view.active} pending={sorted(view.pending_replies)}"))
    return out


# --- signaling / FSM audit ------------------------------------------------

# (origin before, label, origin after); see engine.Transition labels.
TRANSITIONS = {
    (0, "src_fail", 1),
    (0, "succ_query_src_fail", 3),
    (1, "last_reply", 0),
    (1, "succ_increase", 2),
    (1, "succ_query", 4),
    (2, "last_reply_src_ok", 0),
    (2, "last_reply_src_fail", 1),
    (2, "succ_query", 4),
    (3, "last_reply", 0),
    (3, "succ_increase", 4),
    (4, "last_reply_src_ok", 0),
    (4, "last_reply_src_fail", 3),
}
_STARTS_QUERY = {(0, 1), (0, 3), (2, 1), (4, 3)}
_HOLDS_QUERY = {(0, 3), (1, 4), (2, 4)}


@dataclass(frozen=True)
class AuditEntry:
    """One line of the simulator's audit log.

    ``what`` is one of send, recv, drop, transition, linkup, linkdown.
    For message entries ``a`` is the sender and ``b`` the receiver.
    """

    step: int
    what: str
    a: RouterId
    b: RouterId = -1
    prefix: str = ""
    kind: str = ""
    distance: Cost = INFINITY
    before: int = -1
    label: str = ""
    after: int = -1


def audit_flags(log: Iterable[AuditEntry], quiescent: bool = True) -> list[Violation]:
    out: list[Violation] = []
    active: dict[tuple, bool] = defaultdict(bool)
    query_step: dict[tuple, int] = {}
    last_step_transitions: dict[tuple, list] = defaultdict(list)
    outstanding: dict[tuple, set] = defaultdict(set)
    owed: dict[tuple, int] = defaultdict(int)
    held: dict[tuple, RouterId] = {}
    last_query_from: dict[tuple, RouterId] = {}
    round_checked: set = set()

    for e in log:
        if e.what == "transition":
            key = (e.a, e.prefix)
            if (e.before, e.label, e.after) not in TRANSITIONS:
                out.append(Violation("fsm", e.step, e.prefix, (e.a,),
                                     f"{e.before} -[{e.label}]-> {e.after} not in table"))
            active[key] = e.after != 0
            if last_step_transitions[key] and last_step_transitions[key][0][0] != e.step:
                last_step_transitions[key] = []
            last_step_transitions[key].append((e.step, e.before, e.after))
            if (e.before, e.after) in _STARTS_QUERY:
                query_step[key] = e.step
            if (e.before, e.after) in _HOLDS_QUERY:
                # triggered by the QUERY just received from the successor
                held[key] = last_query_from.get(key, -1)
        elif e.what == "recv":
            if e.kind == Kind.QUERY.value:
                k = (e.b, e.prefix, e.a)
                owed[k] += 1
                if owed[k] > 1:
                    out.append(Violation("double-query", e.step, e.prefix, (e.a, e.b)))
                last_query_from[(e.b, e.prefix)] = e.a
            elif e.kind == Kind.REPLY.value:
                outstanding[(e.b, e.prefix)].discard(e.a)
        elif e.what == "send":
            key = (e.a, e.prefix)
            if e.kind == Kind.UPDATE.value and active[key]:
                out.append(Violation("update-while-active", e.step, e.prefix, (e.a, e.b)))
            elif e.kind == Kind.QUERY.value:
                if query_step.get(key) != e.step:
                    out.append(Violation("query-without-transition", e.step, e.prefix, (e.a, e.b)))
                if (key, e.step) not in round_checked:
                    round_checked.add((key, e.step))
                    if outstanding[key]:
                        out.append(Violation("query-with-pending-replies", e.step, e.prefix,
                                             (e.a, *sorted(outstanding[key]))))
                outstanding[key].add(e.b)
            elif e.kind == Kind.REPLY.value:
                k = (e.a, e.prefix, e.b)
                if owed[k] <= 0:
                    out.append(Violation("unsolicited-reply", e.step, e.prefix, (e.a, e.b)))
                else:
                    owed[k] -= 1
                if held.get(key) == e.b:
                    trans = last_step_transitions.get(key, [])
                    if not any(step == e.step and after == 0 for step, _, after in trans):
                        out.append(Violation("held-reply-before-passive", e.step, e.prefix,
                                             (e.a, e.b)))
                    del held[key]
        elif e.what == "linkdown":
            for x, y in ((e.a, e.b), (e.b, e.a)):
                for k in [k for k in owed if k[0] == x and k[2] == y]:
                    owed[k] = 0
                for key, pend in outstanding.items():
                    if key[0] == x:
                        pend.discard(y)
                for key in [k for k, v in held.items() if k[0] == x and v == y]:
                    del held[key]

    if quiescent:
        for (r, p, n), cnt in sorted(owed.items()):
            if cnt > 0:
                out.append(Violation("unanswered-query", -1, p, (r, n)))
    return out
