"""Scripted replay of the seven-router operation example.

Routers a, q, r, s, t, u, z (ids 1..7), unit costs, prefix anchored at a
and z.  After the network converges the cost of link (r, a) rises to 5 and
the replay checks the causal order of the resulting diffusing computation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .model import LinkCostChange, Topology
from .sim import Simulator, SimulationTrace
from .verify import AuditEntry

NAMES = {"a": 1, "q": 2, "r": 3, "s": 4, "t": 5, "u": 6, "z": 7}
IDS = {v: k for k, v in NAMES.items()}
PREFIX = "/fig1"
LINKS = ["ar", "rt", "rq", "qs", "qt", "su", "tu", "uz"]
CHANGE_TICK = 100


def topology() -> Topology:
    topo = Topology(routers=set(NAMES.values()))
    for x, y in LINKS:
        topo.add_link(NAMES[x], NAMES[y], 1)
    topo.add_anchor(NAMES["a"], PREFIX)
    topo.add_anchor(NAMES["z"], PREFIX)
    return topo


def _msg(what: str, kind: str, src: str, dst: str):
    def match(e: AuditEntry) -> bool:
        return (e.what == what and e.kind == kind and e.prefix == PREFIX
                and e.a == NAMES[src] and e.b == NAMES[dst])
    return match


def _trans(who: str, before: int, label: str, after: int):
    def match(e: AuditEntry) -> bool:
        return (e.what == "transition" and e.a == NAMES[who] and e.prefix == PREFIX
                and (e.before, e.label, e.after) == (before, label, after))
    return match


# name -> matcher over audit entries
MILESTONES: dict[str, Callable[[AuditEntry], bool]] = {
    "r goes ACTIVE (origin 1)": _trans("r", 0, "src_fail", 1),
    "r sends QUERY to a": _msg("send", "QUERY", "r", "a"),
    "r sends QUERY to q": _msg("send", "QUERY", "r", "q"),
    "r sends QUERY to t": _msg("send", "QUERY", "r", "t"),
    "q receives QUERY from r": _msg("recv", "QUERY", "r", "q"),
    "q goes ACTIVE (origin 3)": _trans("q", 0, "succ_query_src_fail", 3),
    "q sends QUERY to r": _msg("send", "QUERY", "q", "r"),
    "q sends QUERY to s": _msg("send", "QUERY", "q", "s"),
    "q sends QUERY to t": _msg("send", "QUERY", "q", "t"),
    "r receives REPLY from a": _msg("recv", "REPLY", "a", "r"),
    "r receives REPLY from t": _msg("recv", "REPLY", "t", "r"),
    "r receives QUERY from q": _msg("recv", "QUERY", "q", "r"),
    "r sends REPLY to q": _msg("send", "REPLY", "r", "q"),
    "q receives REPLY from r": _msg("recv", "REPLY", "r", "q"),
    "q receives REPLY from s": _msg("recv", "REPLY", "s", "q"),
    "q receives REPLY from t": _msg("recv", "REPLY", "t", "q"),
    "q goes PASSIVE": _trans("q", 3, "last_reply", 0),
    "q sends REPLY to r": _msg("send", "REPLY", "q", "r"),
    "r receives REPLY from q": _msg("recv", "REPLY", "q", "r"),
    "r goes PASSIVE": _trans("r", 1, "last_reply", 0),
}

# (earlier, later) pairs that must hold in the audit order
ORDER = [
    ("r goes ACTIVE (origin 1)", "r sends QUERY to a"),
    ("r goes ACTIVE (origin 1)", "r sends QUERY to q"),
    ("r goes ACTIVE (origin 1)", "r sends QUERY to t"),
    ("r sends QUERY to q", "q receives QUERY from r"),
    ("q receives QUERY from r", "q goes ACTIVE (origin 3)"),
    ("q goes ACTIVE (origin 3)", "q sends QUERY to r"),
    ("q goes ACTIVE (origin 3)", "q sends QUERY to s"),
    ("q goes ACTIVE (origin 3)", "q sends QUERY to t"),
    ("r receives QUERY from q", "r sends REPLY to q"),
    ("r sends REPLY to q", "q receives REPLY from r"),
    ("q receives REPLY from r", "q goes PASSIVE"),
    ("q receives REPLY from s", "q goes PASSIVE"),
    ("q receives REPLY from t", "q goes PASSIVE"),
    ("q goes PASSIVE", "q sends REPLY to r"),
    ("q sends REPLY to r", "r receives REPLY from q"),
    ("r receives REPLY from a", "r goes PASSIVE"),
    ("r receives REPLY from t", "r goes PASSIVE"),
    ("r receives REPLY from q", "r goes PASSIVE"),
    ("r sends REPLY to q", "r goes PASSIVE"),
]


@dataclass
class Figure1Result:
    trace: SimulationTrace
    before: dict
    positions: dict[str, Optional[int]]
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems and not self.trace.violations

    def diff(self) -> str:
        lines = []
        for name in MILESTONES:
            pos = self.positions.get(name)
            mark = "ok " if pos is not None else "MISSING"
            lines.append(f"  {mark:7} {name}" + (f" @ {pos}" if pos is not None else ""))
        lines += [f"  !! {p}" for p in self.problems]
        lines += [f"  !! {v}" for v in self.trace.violations]
        return "\n".join(lines)


def _route(snaps, who: str):
    return snaps[NAMES[who]].routes[PREFIX]


def replay_figure1(drop: Optional[Callable[[object], bool]] = None,
                   check: str = "every-step") -> Figure1Result:
    """Converge, raise the cost of (r, a) to 5, and check the causal order.

    ``drop`` is passed to the simulator after convergence and lets a test
    remove messages to confirm the checks notice.
    """
    sim = Simulator(topology(), "dnrp", check=check)
    sim.run()
    before = sim.snapshots()
    problems = []
    if sim.trace.violations:
        problems.append("violations during initial convergence")
    r0 = _route(before, "r")
    if (r0.distance, r0.successor) != (1, NAMES["a"]):
        problems.append(f"before change: r has d={r0.distance} via {r0.successor}, want 1 via a")
    q0 = _route(before, "q")
    if q0.successor != NAMES["r"]:
        problems.append(f"before change: q uses {q0.successor}, want r")

    sim.trace = SimulationTrace("dnrp")
    sim.reset_metrics()
    sim.drop = drop
    trace = sim.run([(CHANGE_TICK, LinkCostChange(NAMES["r"], NAMES["a"], 5))])

    positions: dict[str, Optional[int]] = {}
    for name, match in MILESTONES.items():
        positions[name] = next((i for i, e in enumerate(trace.audit) if match(e)), None)
    for first, then in ORDER:
        i, j = positions[first], positions[then]
        if i is not None and j is not None and not i < j:
            problems.append(f"'{first}' (@{i}) should precede '{then}' (@{j})")
    if any(p is None for p in positions.values()):
        problems.append("some narrated messages or transitions never happened")

    after = trace.final
    r1 = _route(after, "r")
    if (r1.distance, r1.feasible_distance, r1.successor, r1.active) != (3, 3, NAMES["t"], False):
        problems.append(f"after: r has d={r1.distance} fd={r1.feasible_distance} "
                        f"via {IDS.get(r1.successor)} active={r1.active}, want 3/3 via t, PASSIVE")
    if _route(after, "q").active:
        problems.append("after: q is still ACTIVE")
    movers = {IDS[e.a] for e in trace.audit if e.what == "transition"}
    if movers - {"r", "q"}:
        problems.append(f"routers other than r and q changed mode: {sorted(movers - {'r', 'q'})}")
    for who in ("u", "z"):
        sent = [e for e in trace.audit if e.what == "send" and e.a == NAMES[who]
                and e.kind in ("QUERY", "REPLY")]
        if sent:
            problems.append(f"{who} took part in the diffusing computation")
    return Figure1Result(trace, before, positions, problems)
