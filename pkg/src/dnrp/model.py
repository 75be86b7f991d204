"""Shared vocabulary: router ids, costs, update records, messages, topology and events."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

RouterId = int
PrefixName = str
Cost = Union[int, float]

INFINITY: float = math.inf


def order_less(a: RouterId, b: RouterId) -> bool:
    return a < b


def cost_add(a: Cost, b: Cost) -> Cost:
    # int + math.inf is already math.inf; spelled out so no caller relies on that.
    if a == INFINITY or b == INFINITY:
        return INFINITY
    return a + b


def format_cost(c: Cost) -> str:
    return "inf" if c == INFINITY else str(int(c))


class Kind(str, Enum):
    UPDATE = "UPDATE"
    QUERY = "QUERY"
    REPLY = "REPLY"


@dataclass(frozen=True)
class UpdateRecord:
    prefix: PrefixName
    kind: Kind
    distance: Cost
    anchor: Optional[RouterId] = None

    def __post_init__(self):
        if (self.anchor is None) != (self.distance == INFINITY):
            raise ValueError(
                f"anchor must be absent iff distance is infinite: {self!r}")


@dataclass(frozen=True)
class RoutingMessage:
    src: RouterId
    dst: RouterId
    records: tuple[UpdateRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise ValueError("a routing message carries at least one record")
        names = [r.prefix for r in self.records]
        if len(set(names)) != len(names):
            raise ValueError("at most one record per prefix per message")

    @property
    def kind(self) -> str:
        kinds = {r.kind for r in self.records}
        if len(kinds) == 1:
            return next(iter(kinds)).value
        return "MIXED"


@dataclass(frozen=True)
class Link:
    a: RouterId
    b: RouterId
    cost: int
    delay: int = 1

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"self-link at router {self.a}")
        if self.cost <= 0:
            raise ValueError(f"link costs are strictly positive, got {self.cost}")
        if self.delay <= 0:
            raise ValueError(f"link delay must be positive, got {self.delay}")

    @property
    def key(self) -> tuple[RouterId, RouterId]:
        return link_key(self.a, self.b)


def link_key(a: RouterId, b: RouterId) -> tuple[RouterId, RouterId]:
    return (a, b) if a < b else (b, a)


@dataclass
class Topology:
    """Routers, undirected links and prefix anchors.

    Mutable so scenario drivers can apply events to a working copy; use
    :meth:`copy` before mutating a shared instance.
    """

    routers: set[RouterId] = field(default_factory=set)
    links: dict[tuple[RouterId, RouterId], Link] = field(default_factory=dict)
    anchors: dict[PrefixName, set[RouterId]] = field(default_factory=dict)

    def add_router(self, r: RouterId) -> None:
        self.routers.add(r)

    def add_link(self, a: RouterId, b: RouterId, cost: int, delay: int = 1) -> Link:
        link = Link(a, b, cost, delay)
        for r in (a, b):
            if r not in self.routers:
                raise ValueError(f"link references unknown router {r}")
        if link.key in self.links:
            raise ValueError(f"duplicate link {link.key}")
        self.links[link.key] = link
        return link

    def remove_link(self, a: RouterId, b: RouterId) -> Link:
        try:
            return self.links.pop(link_key(a, b))
        except KeyError:
            raise ValueError(f"no link between {a} and {b}") from None

    def set_cost(self, a: RouterId, b: RouterId, cost: int) -> None:
        old = self.links[link_key(a, b)]
        self.links[old.key] = Link(old.a, old.b, cost, old.delay)

    def has_link(self, a: RouterId, b: RouterId) -> bool:
        return link_key(a, b) in self.links

    def link(self, a: RouterId, b: RouterId) -> Link:
        return self.links[link_key(a, b)]

    def add_anchor(self, r: RouterId, prefix: PrefixName) -> None:
        if r not in self.routers:
            raise ValueError(f"anchor {r} is not a router")
        self.anchors.setdefault(prefix, set()).add(r)

    def remove_anchor(self, r: RouterId, prefix: PrefixName) -> None:
        holders = self.anchors.get(prefix, set())
        if r not in holders:
            raise ValueError(f"router {r} does not anchor {prefix!r}")
        holders.discard(r)
        if not holders:
            del self.anchors[prefix]

    def neighbors(self, r: RouterId) -> dict[RouterId, int]:
        out = {}
        for (a, b), link in self.links.items():
            if a == r:
                out[b] = link.cost
            elif b == r:
                out[a] = link.cost
        return out

    def adjacency(self) -> dict[RouterId, dict[RouterId, int]]:
        adj: dict[RouterId, dict[RouterId, int]] = {r: {} for r in self.routers}
        for (a, b), link in self.links.items():
            adj[a][b] = link.cost
            adj[b][a] = link.cost
        return adj

    def local_prefixes(self, r: RouterId) -> list[PrefixName]:
        return sorted(p for p, hs in self.anchors.items() if r in hs)

    def sorted_links(self) -> Iterator[Link]:
        for key in sorted(self.links):
            yield self.links[key]

    def copy(self) -> "Topology":
        return Topology(set(self.routers), dict(self.links),
                        {p: set(hs) for p, hs in self.anchors.items()})


# --- injected and internal simulator events -------------------------------

@dataclass(frozen=True)
class LinkUp:
    a: RouterId
    b: RouterId
    cost: int


@dataclass(frozen=True)
class LinkDown:
    a: RouterId
    b: RouterId


@dataclass(frozen=True)
class LinkCostChange:
    a: RouterId
    b: RouterId
    cost: int


@dataclass(frozen=True)
class PrefixAdd:
    router: RouterId
    prefix: PrefixName


@dataclass(frozen=True)
class PrefixDelete:
    router: RouterId
    prefix: PrefixName


@dataclass(frozen=True)
class Deliver:
    message: object
    epoch: int


EventBody = Union[LinkUp, LinkDown, LinkCostChange, PrefixAdd, PrefixDelete, Deliver]


@dataclass(frozen=True, order=True)
class SimEvent:
    time: int
    seq: int
    body: EventBody = field(compare=False)
