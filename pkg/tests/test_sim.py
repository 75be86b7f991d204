import pytest

from dnrp.fuzz import case
from dnrp.model import INFINITY, LinkDown, LinkUp, PrefixAdd, Topology
from dnrp.sim import ScenarioScript, Simulator, run

from conftest import path_topology

P = "/p"


def test_empty_script_only_initialization():
    topo = path_topology(3)
    topo.add_anchor(1, P)
    trace = Simulator(topo, "dnrp").run([])
    assert trace.quiescent and not trace.violations
    assert all(l.tick <= 3 for l in trace.lines)
    assert trace.metrics.messages_by_kind == {"UPDATE": 4}


def test_no_prefixes_no_messages():
    trace = Simulator(path_topology(4), "dnrp").run([])
    assert trace.lines == [] and trace.quiescent


@pytest.mark.parametrize("protocol", ["dnrp", "ils"])
def test_same_script_same_trace(protocol):
    c = case(11)
    a = Simulator(c.topology, protocol).run(c.events)
    b = Simulator(c.topology, protocol).run(c.events)
    assert a.text() == b.text() and a.text()


def test_fifo_per_directed_link():
    c = case(5)
    trace = Simulator(c.topology, "dnrp").run(c.events)
    sent, got = {}, {}
    for l in trace.lines:
        key = (l.src, l.dst)
        item = (l.kind, l.prefix, l.distance)
        if l.direction == "SEND":
            sent.setdefault(key, []).append(item)
        elif l.direction in ("RECV", "DROP"):
            got.setdefault(key, []).append(item)
    for key, items in got.items():
        assert items == sent[key][:len(items)]


def test_in_flight_message_dropped_on_failure():
    topo = path_topology(2)
    topo.add_anchor(1, P)
    sim = Simulator(topo, "dnrp", check="every-step")
    # the anchor's first UPDATE leaves at tick 0 and would arrive at tick 1
    trace = sim.run([(0, LinkDown(1, 2))])
    assert [l.direction for l in trace.lines] == ["SEND", "DROP"]
    assert trace.quiescent and not trace.violations
    assert trace.final[2].routes.get(P) is None


def test_flapped_link_drops_old_incarnation_messages():
    topo = Topology(routers={1, 2})
    topo.add_link(1, 2, 1, delay=5)
    topo.add_anchor(1, P)
    trace = Simulator(topo, "dnrp", check="every-step").run(
        [(1, LinkDown(1, 2)), (2, LinkUp(1, 2, 1))])
    drops = [l for l in trace.lines if l.direction == "DROP"]
    assert len(drops) == 1 and drops[0].tick == 5
    assert trace.final[2].routes[P].distance == 1
    assert not trace.violations


def test_link_delay_sets_arrival_tick():
    topo = Topology(routers={1, 2})
    topo.add_link(1, 2, 1, delay=4)
    topo.add_anchor(1, P)
    trace = Simulator(topo, "dnrp").run([])
    assert [(l.tick, l.direction) for l in trace.lines[:2]] == [(0, "SEND"), (4, "RECV")]


def test_script_run_with_uniform_delay():
    topo = path_topology(3)
    topo.add_anchor(1, P)
    trace = run(ScenarioScript(topo, "dnrp", [(10, PrefixAdd(3, "/q"))], link_delay=3))
    # 3 -> 2 at 13, 2 -> 1 and 2 -> 3 at 16, 1 -> 2 at 19
    assert trace.metrics.last_tick == 19


def test_event_cap_flags_non_quiescence():
    c = case(3)
    trace = Simulator(c.topology, "dnrp", event_cap=5).run(c.events)
    assert not trace.quiescent
    assert trace.metrics.deliveries == 5


def test_default_event_cap():
    c = case(3)
    sim = Simulator(c.topology, "dnrp")
    assert sim.event_cap == 50 * len(c.topology.links) * len(c.topology.anchors)


def test_messages_counted_at_enqueue():
    topo = path_topology(3)
    topo.add_anchor(1, P)
    trace = Simulator(topo, "dnrp").run([])
    sends = sum(1 for l in trace.lines if l.direction == "SEND")
    assert trace.metrics.messages_total == sends == trace.metrics.updates_total


def test_rejects_unknown_protocol_and_mode():
    with pytest.raises(ValueError):
        Simulator(path_topology(2), "ospf")
    with pytest.raises(ValueError):
        Simulator(path_topology(2), "dnrp", check="sometimes")


def test_checkpoints_recorded():
    c = case(4)
    trace = Simulator(c.topology, "dnrp", check="checkpoints").run(c.events)
    assert len(trace.checkpoints) == len(c.events)
    assert not trace.violations
