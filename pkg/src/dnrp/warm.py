"""Converged starting states.

Bootstrapping a 154-router network with hundreds of prefixes by simulation
is slow for the link-state baseline (every router reruns SPF for every new
LSA), so experiments start from the state the protocols settle into and
measure only the work caused by the scripted change.  Tests check that the
preloaded DNRP state matches what a simulated bootstrap converges to.
"""
from __future__ import annotations

from .engine import DnrpRouter, NeighborEntry, NeighborFlags, RouteEntry
from .ils import IlsRouter, Lsa, LsaKind
from .model import INFINITY, Topology
from .verify import oracle_all


def dnrp_routers(topo: Topology) -> dict[int, DnrpRouter]:
    adj = topo.adjacency()
    routers = {r: DnrpRouter(r) for r in sorted(topo.routers)}
    for r, router in routers.items():
        router.neighbors = dict(adj[r])
        router.local_prefixes = set(topo.local_prefixes(r))
    for p, res in oracle_all(topo, sorted(topo.anchors)).items():
        dist = res.distance
        anchor: dict[int, int] = {}
        succ: dict[int, int] = {}
        # settle anchors in distance order so each successor is done first
        for r in sorted((r for r in topo.routers if dist[r] < INFINITY), key=lambda r: (dist[r], r)):
            if dist[r] == 0:
                succ[r], anchor[r] = r, r
                continue
            s = min(n for n, c in adj[r].items() if dist[n] + c == dist[r])
            succ[r], anchor[r] = s, anchor[s]
        for r, router in routers.items():
            row = {n: NeighborEntry(dist[n], anchor.get(n)) for n in adj[r] if dist[n] < INFINITY}
            router.neighbor_table[p] = row
            rt = router.routes[p] = RouteEntry(p)
            rt.flags = {n: NeighborFlags() for n in sorted(adj[r])}
            if dist[r] < INFINITY:
                rt.distance = rt.feasible_distance = dist[r]
                rt.successor, rt.anchor = succ[r], anchor[r]
            rt.valid_next_hops = router.nsc_next_hops(p)
        # neighbor-table rows for routers with no route still exist (empty)
    for router in routers.values():
        router.op_counter = 0
    return routers


def ils_routers(topo: Topology) -> dict[int, IlsRouter]:
    adj = topo.adjacency()
    db = {}
    for r in sorted(topo.routers):
        lsa = Lsa(r, 1, LsaKind.ADJACENCY, tuple(sorted(adj[r].items())))
        db[lsa.key] = lsa
        prefixes = topo.local_prefixes(r)
        if prefixes:
            lsa = Lsa(r, 1, LsaKind.PREFIX, tuple(prefixes))
            db[lsa.key] = lsa
    routers = {}
    for r in sorted(topo.routers):
        router = IlsRouter(r)
        router.neighbors = dict(adj[r])
        router.local_prefixes = set(topo.local_prefixes(r))
        router.db = dict(db)
        router.seq = {LsaKind.ADJACENCY: 1,
                      LsaKind.PREFIX: 1 if router.local_prefixes else 0}
        router.recompute_routes()
        router.op_counter = 0
        routers[r] = router
    return routers


def converged_routers(topo: Topology, protocol: str) -> dict:
    if protocol == "dnrp":
        return dnrp_routers(topo)
    if protocol == "ils":
        return ils_routers(topo)
    raise ValueError(f"unknown protocol {protocol!r}")
