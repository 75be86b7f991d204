"""Line-oriented topology and event-script files."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Union

from .model import (
    EventBody,
    LinkCostChange,
    LinkDown,
    LinkUp,
    PrefixAdd,
    PrefixDelete,
    Topology,
)


class ParseError(ValueError):
    def __init__(self, where: str, line: int, message: str):
        super().__init__(f"{where}:{line}: {message}")
        self.where = where
        self.line = line


def _lines(source: Union[str, Path], text: str = None):
    if text is None:
        text = Path(source).read_text()
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].split()
        if body:
            yield no, body


def _int(tok: str, where: str, no: int, what: str) -> int:
    try:
        return int(tok, 10)
    except ValueError:
        raise ParseError(where, no, f"{what} must be a decimal integer, got {tok!r}") from None


def parse_topology(source: Union[str, Path], text: str = None) -> Topology:
    where = str(source)
    topo = Topology()
    pending_anchors = []
    for no, tok in _lines(source, text):
        cmd, args = tok[0], tok[1:]
        try:
            if cmd == "node" and len(args) == 1:
                topo.add_router(_int(args[0], where, no, "node id"))
            elif cmd == "link" and len(args) in (3, 4):
                a, b, cost = (_int(x, where, no, "link field") for x in args[:3])
                delay = _int(args[3], where, no, "delay") if len(args) == 4 else 1
                topo.routers.update((a, b))
                topo.add_link(a, b, cost, delay)
            elif cmd == "anchor" and len(args) == 2:
                pending_anchors.append((no, _int(args[0], where, no, "anchor node"), args[1]))
            else:
                raise ParseError(where, no, f"cannot parse {' '.join(tok)!r}")
        except ParseError:
            raise
        except ValueError as e:
            raise ParseError(where, no, str(e)) from None
    for no, r, p in pending_anchors:
        if r not in topo.routers:
            raise ParseError(where, no, f"anchor {r} is not a router")
        topo.add_anchor(r, p)
    return topo


_ARITY = {"linkfail": 2, "linkup": 3, "linkcost": 3, "prefixadd": 2, "prefixdel": 2}


def parse_events(source: Union[str, Path], text: str = None) -> list[tuple[int, EventBody]]:
    where = str(source)
    events = []
    for no, tok in _lines(source, text):
        if len(tok) < 2 or tok[1] not in _ARITY or len(tok) - 2 != _ARITY[tok[1]]:
            raise ParseError(where, no, f"cannot parse {' '.join(tok)!r}")
        t = _int(tok[0], where, no, "time")
        if t < 0:
            raise ParseError(where, no, "time must be non-negative")
        cmd, args = tok[1], tok[2:]
        if cmd in ("prefixadd", "prefixdel"):
            r = _int(args[0], where, no, "node")
            body = PrefixAdd(r, args[1]) if cmd == "prefixadd" else PrefixDelete(r, args[1])
        else:
            nums = [_int(x, where, no, "link field") for x in args]
            if nums[0] == nums[1]:
                raise ParseError(where, no, "link endpoints must differ")
            if cmd == "linkfail":
                body = LinkDown(*nums)
            else:
                if nums[2] <= 0:
                    raise ParseError(where, no, "link cost must be positive")
                body = (LinkUp if cmd == "linkup" else LinkCostChange)(*nums)
        events.append((t, body))
    return events


def format_topology(topo: Topology) -> str:
    out = [f"node {r}" for r in sorted(topo.routers)]
    for link in topo.sorted_links():
        extra = f" {link.delay}" if link.delay != 1 else ""
        out.append(f"link {link.a} {link.b} {link.cost}{extra}")
    for p in sorted(topo.anchors):
        out += [f"anchor {r} {p}" for r in sorted(topo.anchors[p])]
    return "\n".join(out) + "\n"


def format_events(events: Iterable[tuple[int, EventBody]]) -> str:
    out = []
    for t, e in events:
        if isinstance(e, LinkDown):
            out.append(f"{t} linkfail {e.a} {e.b}")
        elif isinstance(e, LinkUp):
            out.append(f"{t} linkup {e.a} {e.b} {e.cost}")
        elif isinstance(e, LinkCostChange):
            out.append(f"{t} linkcost {e.a} {e.b} {e.cost}")
        elif isinstance(e, PrefixAdd):
            out.append(f"{t} prefixadd {e.router} {e.prefix}")
        elif isinstance(e, PrefixDelete):
            out.append(f"{t} prefixdel {e.router} {e.prefix}")
        else:
            raise TypeError(f"not a scripted event: {e!r}")
    return "".join(line + "\n" for line in out)


def check_events(topo: Topology, events: list[tuple[int, EventBody]], where: str = "events") -> None:
    """Replay the script against a copy of the topology and reject impossible events."""
    w = topo.copy()
    order = sorted(range(len(events)), key=lambda k: events[k][0])
    for k in order:
        t, e = events[k]
        try:
            if isinstance(e, (LinkUp, LinkDown, LinkCostChange)):
                for r in (e.a, e.b):
                    if r not in w.routers:
                        raise ValueError(f"unknown router {r}")
            if isinstance(e, LinkUp):
                w.add_link(e.a, e.b, e.cost)
            elif isinstance(e, LinkDown):
                w.remove_link(e.a, e.b)
            elif isinstance(e, LinkCostChange):
                if not w.has_link(e.a, e.b):
                    raise ValueError(f"no link between {e.a} and {e.b}")
                w.set_cost(e.a, e.b, e.cost)
            elif isinstance(e, PrefixAdd):
                if e.router in w.anchors.get(e.prefix, ()):
                    raise ValueError(f"router {e.router} already anchors {e.prefix!r}")
                w.add_anchor(e.router, e.prefix)
            elif isinstance(e, PrefixDelete):
                w.remove_anchor(e.router, e.prefix)
        except ValueError as err:
            raise ParseError(where, k + 1, f"event #{k + 1} at time {t}: {err}") from None
