import pytest

from dnrp.engine import DnrpRouter, NeighborEntry
from dnrp.model import INFINITY, Topology


def make_router(me, links, reports=None, p="/p"):
    """Router ``me`` with ``links`` {n: cost} and stored reports {n: (d, anchor)}."""
    r = DnrpRouter(me)
    r.neighbors = dict(links)
    r.entry(p)
    for n, (d, a) in (reports or {}).items():
        r.neighbor_table[p][n] = NeighborEntry(d, a if d < INFINITY else None)
    return r


def path_topology(n, cost=1):
    topo = Topology(routers=set(range(1, n + 1)))
    for v in range(1, n):
        topo.add_link(v, v + 1, cost)
    return topo


@pytest.fixture
def router_factory():
    return make_router


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
