"""Seeded preferential-attachment topology generator.

The default size mirrors a 154-router, 184-link backbone with unit costs
(average degree about 2.4).  Node ids start at 1.
"""
from __future__ import annotations

import random

from .model import Topology


def preferential_attachment(nodes: int = 154, links: int = 184, seed: int = 0,
                            cost: int = 1) -> Topology:
    """Grow a connected graph one node at a time.

    Each new node links to one existing node chosen with probability
    proportional to degree; ``links - nodes + 1`` randomly chosen newcomers
    add a second link so the total comes out exact.
    """
    if nodes < 2:
        raise ValueError("need at least two nodes")
    extra = links - (nodes - 1)
    if extra < 0 or extra > nodes - 2:
        raise ValueError(f"cannot build {links} links on {nodes} nodes this way")
    rng = random.Random(seed)
    topo = Topology(routers={1, 2})
    topo.add_link(1, 2, cost)
    ends = [1, 2]  # one entry per link endpoint, so sampling is degree-weighted
    doubles = set(rng.sample(range(3, nodes + 1), extra))
    for v in range(3, nodes + 1):
        topo.add_router(v)
        want = 2 if v in doubles else 1
        targets: list[int] = []
        while len(targets) < want:
            u = rng.choice(ends)
            if u not in targets:
                targets.append(u)
        for u in targets:
            topo.add_link(u, v, cost)
            ends += [u, v]
    return topo


def pick_anchors(topo: Topology, count: int, seed: int) -> list[int]:
    rng = random.Random(seed)
    return sorted(rng.sample(sorted(topo.routers), count))
