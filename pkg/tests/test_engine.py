import pytest

from dnrp.engine import DnrpRouter, Mode, ProtocolError
from dnrp.model import (
    INFINITY,
    Kind,
    LinkCostChange,
    LinkDown,
    LinkUp,
    PrefixAdd,
    PrefixDelete,
    RoutingMessage,
    Topology,
    UpdateRecord,
)
from dnrp.sim import Simulator
from dnrp.verify import oracle

from conftest import make_router, path_topology

P = "/p"


def msg(src, dst, kind, d, anchor=1, p=P):
    return RoutingMessage(src, dst, (UpdateRecord(p, kind, d, anchor if d < INFINITY else None),))


def records(msgs):
    return {(m.dst, r.kind.value, r.distance) for m in msgs for r in m.records}


# --- selection conditions -------------------------------------------------

def test_best_candidate_picks_smallest_sum():
    r = make_router(3, {2: 1, 4: 1}, {2: (1, 1), 4: (3, 1)})
    assert r.best_candidate(P) == (2, 2)


def test_best_candidate_no_finite_route():
    r = make_router(3, {2: 1, 4: 1})
    assert r.best_candidate(P) == (None, INFINITY)


def test_best_candidate_tie_goes_to_smaller_id():
    r = make_router(5, {9: 1, 4: 1}, {9: (2, 1), 4: (2, 1)})
    assert r.best_candidate(P) == (4, 3)


def test_src_holds_cases():
    r = make_router(5, {2: 1, 7: 1}, {2: (1, 1), 7: (2, 1)})
    r.routes[P].feasible_distance = 2
    assert r.src_holds(P, 2)
    # equal to fd but larger id than me, and not minimal either
    assert not r.src_holds(P, 7)
    r2 = make_router(5, {2: 1}, {2: (INFINITY, None)})
    assert not r2.src_holds(P, 2)


def test_src_tie_clause_needs_smaller_id():
    lo = make_router(5, {3: 1}, {3: (2, 1)})
    lo.routes[P].feasible_distance = 2
    assert lo.src_holds(P, 3)
    hi = make_router(5, {8: 1}, {8: (2, 1)})
    hi.routes[P].feasible_distance = 2
    assert not hi.src_holds(P, 8)


def test_nsc_next_hops_clause_by_clause():
    # b=2 reports 1 < fd, c=3 reports fd with smaller id, d=6 reports 3 > fd
    r = make_router(5, {2: 1, 3: 1, 6: 1}, {2: (1, 1), 3: (2, 1), 6: (3, 1)})
    r.routes[P].feasible_distance = 2
    assert r.nsc_next_hops(P) == {2, 3}


def test_nsc_at_anchor_and_without_routes():
    r = make_router(1, {2: 1, 3: 1}, {2: (0, 2), 3: (1, 2)})
    r.routes[P].feasible_distance = 0
    assert r.nsc_next_hops(P) == set()
    r.routes[P].feasible_distance = INFINITY
    assert r.nsc_next_hops(P) == set()
    r3 = make_router(4, {2: 1, 3: 1})
    r3.routes[P].feasible_distance = 5
    assert r3.nsc_next_hops(P) == set()


# --- passive processing ---------------------------------------------------

def test_update_adopted_and_flooded():
    r = make_router(3, {1: 1, 4: 1})
    out = r.handle_message(msg(1, 3, Kind.UPDATE, 0))
    rt = r.routes[P]
    assert (rt.distance, rt.feasible_distance, rt.successor, rt.anchor) == (1, 1, 1, 1)
    assert rt.valid_next_hops == {1}
    assert records(out) == {(1, "UPDATE", 1), (4, "UPDATE", 1)}


def test_query_answered_even_when_nothing_changes():
    r = make_router(3, {1: 1, 4: 1})
    r.handle_message(msg(1, 3, Kind.UPDATE, 0))
    out = r.handle_message(msg(4, 3, Kind.QUERY, 5))
    assert records(out) == {(4, "REPLY", 1)}
    assert r.routes[P].mode is Mode.PASSIVE


def test_passive_switches_successor_on_a_closer_anchor():
    topo = path_topology(4)
    topo.add_anchor(1, P)
    sim = Simulator(topo, "dnrp", check="every-step")
    trace = sim.run([(20, PrefixAdd(4, P))])
    assert not trace.violations
    view = trace.final[3].routes[P]
    assert (view.distance, view.successor, view.anchor) == (1, 4, 4)
    assert not any(e.what == "transition" for e in trace.audit)
    want = oracle(sim.topology, P).distance
    assert {r: s.routes[P].distance for r, s in trace.final.items()} == want


def test_src_failure_without_query_goes_active_origin_1():
    # me=5 uses s=1 (reports 1), alternative k=2 reports 3 with fd 2
    r = make_router(5, {1: 1, 2: 1})
    r.handle_message(msg(1, 5, Kind.UPDATE, 1))
    r.handle_message(msg(2, 5, Kind.UPDATE, 3))
    assert (r.routes[P].distance, r.routes[P].successor) == (2, 1)
    out = r.handle_message(msg(1, 5, Kind.UPDATE, 5))
    rt = r.routes[P]
    assert rt.mode is Mode.ACTIVE and rt.origin == 1
    assert (rt.successor, rt.feasible_distance, rt.distance) == (1, 2, 6)
    assert records(out) == {(1, "QUERY", 6), (2, "QUERY", 6)}
    assert all(f.pending_reply for f in rt.flags.values())


def test_query_from_successor_that_breaks_src_relays_origin_3():
    r = make_router(5, {1: 1, 2: 1})
    r.handle_message(msg(1, 5, Kind.UPDATE, 1))
    r.handle_message(msg(2, 5, Kind.UPDATE, 3))
    out = r.handle_message(msg(1, 5, Kind.QUERY, 4))
    rt = r.routes[P]
    assert rt.origin == 3 and rt.flags[1].pending_query
    # no REPLY yet to the successor: it is held until the computation ends
    assert records(out) == {(1, "QUERY", 5), (2, "QUERY", 5)}


def test_query_from_non_successor_is_answered_before_going_active():
    # successor 2 got more expensive but stays feasible, so fd (1) < d (3)
    r = make_router(5, {2: 1, 7: 1})
    r.handle_message(msg(2, 5, Kind.UPDATE, 0, anchor=2))
    r.link_cost(2, 3)
    assert (r.routes[P].distance, r.routes[P].feasible_distance) == (3, 1)
    # 7 now offers 2 but reports fd with a larger id: SRC fails
    out = r.handle_message(msg(7, 5, Kind.QUERY, 1, anchor=9))
    to7 = [(rec.kind.value, rec.distance) for m in out if m.dst == 7 for rec in m.records]
    # on the link to 7 the REPLY precedes the QUERY of the new computation
    assert to7 == [("REPLY", 3), ("QUERY", 3)]
    assert records(out) - {(7, "REPLY", 3)} == {(2, "QUERY", 3), (7, "QUERY", 3)}
    assert r.routes[P].origin == 1 and r.routes[P].successor == 2


# --- active processing ----------------------------------------------------

def _active_origin_1():
    r = make_router(5, {1: 1, 2: 1})
    r.handle_message(msg(1, 5, Kind.UPDATE, 1))
    r.handle_message(msg(2, 5, Kind.UPDATE, 3))
    r.handle_message(msg(1, 5, Kind.UPDATE, 5))
    r.transitions.clear()
    return r


def test_active_answers_non_successor_query():
    r = _active_origin_1()
    out = r.handle_message(msg(2, 5, Kind.QUERY, 7))
    assert records(out) == {(2, "REPLY", 6)}
    assert r.routes[P].origin == 1 and r.routes[P].successor == 1


def test_active_update_only_recorded():
    r = _active_origin_1()
    out = r.handle_message(msg(2, 5, Kind.UPDATE, 0, anchor=2))
    rt = r.routes[P]
    assert out == [] and rt.distance == 6 and rt.successor == 1 and rt.feasible_distance == 2
    assert r.reported(P, 2) == 0


def test_last_reply_origin_1_resets_fd():
    r = _active_origin_1()
    r.handle_message(msg(2, 5, Kind.REPLY, 3))
    out = r.handle_message(msg(1, 5, Kind.REPLY, 5))
    rt = r.routes[P]
    assert rt.mode is Mode.PASSIVE and rt.origin == 0
    assert (rt.distance, rt.feasible_distance, rt.successor) == (4, 4, 2)
    assert records(out) == {(1, "UPDATE", 4), (2, "UPDATE", 4)}
    assert [t.label for t in r.transitions] == ["last_reply"]


def test_successor_increase_then_src_failure_requeries_from_origin_2():
    r = _active_origin_1()
    r.handle_message(msg(1, 5, Kind.UPDATE, 7))
    assert r.routes[P].origin == 2
    r.handle_message(msg(2, 5, Kind.REPLY, 3))
    out = r.handle_message(msg(1, 5, Kind.REPLY, 7))
    rt = r.routes[P]
    assert rt.origin == 1 and rt.mode is Mode.ACTIVE and rt.feasible_distance == 2
    assert records(out) == {(1, "QUERY", 8), (2, "QUERY", 8)}
    labels = [(t.before, t.label, t.after) for t in r.transitions]
    assert labels == [(1, "succ_increase", 2), (2, "last_reply_src_fail", 1)]


def test_successor_query_while_originating_is_held_until_passive():
    r = _active_origin_1()
    out = r.handle_message(msg(1, 5, Kind.QUERY, 6))
    assert out == [] and r.routes[P].origin == 4
    r.handle_message(msg(1, 5, Kind.REPLY, 6))
    out = r.handle_message(msg(2, 5, Kind.REPLY, 1))
    rt = r.routes[P]
    assert rt.mode is Mode.PASSIVE and (rt.distance, rt.successor) == (2, 2)
    # fd kept (origin 4 does not reset): 1 < 2 satisfies SRC directly
    assert rt.feasible_distance == 2
    assert records(out) == {(1, "REPLY", 2), (2, "UPDATE", 2)}


def test_origin_4_src_failure_goes_to_origin_3():
    r = _active_origin_1()
    r.handle_message(msg(1, 5, Kind.QUERY, 6))
    r.handle_message(msg(1, 5, Kind.REPLY, 6))
    out = r.handle_message(msg(2, 5, Kind.REPLY, 3))
    rt = r.routes[P]
    assert rt.origin == 3 and rt.flags[1].pending_query
    assert records(out) == {(1, "QUERY", 7), (2, "QUERY", 7)}
    r.handle_message(msg(2, 5, Kind.REPLY, 3))
    out = r.handle_message(msg(1, 5, Kind.REPLY, 6))
    assert rt.mode is Mode.PASSIVE and (rt.distance, rt.feasible_distance, rt.successor) == (4, 4, 2)
    assert (1, "REPLY", 4) in records(out)


def test_single_neighbor_last_reply():
    r = make_router(5, {1: 1})
    r.handle_message(msg(1, 5, Kind.UPDATE, 1))
    r.handle_message(msg(1, 5, Kind.UPDATE, 4))  # only route grew: src fails
    assert r.routes[P].origin == 1
    r.handle_message(msg(1, 5, Kind.REPLY, 1))
    rt = r.routes[P]
    assert (rt.mode, rt.distance, rt.feasible_distance) == (Mode.PASSIVE, 2, 2)


def test_duplicate_reply_rejected():
    r = _active_origin_1()
    r.handle_message(msg(2, 5, Kind.REPLY, 3))
    with pytest.raises(ProtocolError):
        r.handle_message(msg(2, 5, Kind.REPLY, 3))


def test_reply_while_passive_rejected():
    r = make_router(5, {1: 1})
    with pytest.raises(ProtocolError):
        r.handle_message(msg(1, 5, Kind.REPLY, 3))


def test_unknown_neighbor_rejected():
    r = make_router(5, {1: 1})
    with pytest.raises(ProtocolError):
        r.handle_message(msg(7, 5, Kind.UPDATE, 3))
    with pytest.raises(ProtocolError):
        r.link_down(7)
    with pytest.raises(ProtocolError):
        r.link_up(1, 3)


# --- two-hop diffusing computation -----------------------------------------

def test_chain_computation_relays_two_hops_and_unwinds():
    topo = path_topology(5)
    topo.add_anchor(1, P)
    trace = Simulator(topo, "dnrp", check="every-step").run([(20, LinkDown(1, 2))])
    assert not trace.violations
    moves = [(e.a, e.before, e.after) for e in trace.audit if e.what == "transition"]
    assert moves[:4] == [(2, 0, 1), (3, 0, 3), (4, 0, 3), (5, 0, 3)]
    ends = [m for m in moves if m[2] == 0]
    assert [m[0] for m in ends] == [5, 4, 3, 2]
    assert all(s.routes[P].distance == INFINITY for r, s in trace.final.items() if r != 1)


# --- link and prefix events -----------------------------------------------

def test_two_node_link_failure_leaves_no_route():
    topo = path_topology(2)
    topo.add_anchor(1, P)
    trace = Simulator(topo, "dnrp", check="every-step").run([(10, LinkDown(1, 2))])
    assert not trace.violations and trace.quiescent
    assert trace.final[2].routes[P].distance == INFINITY


def test_link_up_to_better_path_converges():
    topo = path_topology(6)
    topo.add_anchor(1, P)
    sim = Simulator(topo, "dnrp", check="every-step")
    trace = sim.run([(20, LinkUp(1, 6, 1))])
    assert not trace.violations
    assert trace.final[6].routes[P].distance == 1
    assert trace.final[5].routes[P].distance == 2


def test_cost_change_on_unused_link_is_silent():
    r = make_router(5, {1: 1, 2: 4})
    r.handle_message(msg(1, 5, Kind.UPDATE, 1))
    r.handle_message(msg(2, 5, Kind.UPDATE, 1))
    assert r.routes[P].successor == 1
    assert r.link_cost(2, 6) == []


def test_link_down_of_pending_neighbor_counts_as_reply():
    r = _active_origin_1()
    r.handle_message(msg(1, 5, Kind.REPLY, 5))
    out = r.link_down(2)
    rt = r.routes[P]
    assert rt.mode is Mode.PASSIVE and (rt.distance, rt.successor) == (6, 1)
    assert rt.feasible_distance == 6
    # the frozen distance already announced in the QUERY is unchanged: nothing owed
    assert out == []


def test_prefix_add_isolated_router():
    r = DnrpRouter(4)
    assert r.prefix_add(P) == []
    rt = r.routes[P]
    assert (rt.distance, rt.feasible_distance, rt.anchor, rt.successor) == (0, 0, 4, 4)
    assert r.snapshot().routes[P].successor is None


def test_prefix_add_and_delete_converge_to_oracle():
    topo = Topology(routers=set(range(1, 7)))
    for a, b, c in [(1, 2, 1), (2, 3, 2), (3, 4, 1), (4, 5, 3), (5, 6, 1), (6, 1, 2), (2, 5, 1)]:
        topo.add_link(a, b, c)
    topo.add_anchor(1, P)
    sim = Simulator(topo, "dnrp", check="every-step")
    trace = sim.run([(20, PrefixAdd(4, P)), (40, PrefixDelete(1, P)), (41, PrefixAdd(3, "/q"))])
    assert not trace.violations
    for p in (P, "/q"):
        want = oracle(sim.topology, p).distance
        assert {r: s.routes[p].distance for r, s in trace.final.items()} == want
    assert trace.final[1].routes[P].distance == 4


def test_prefix_delete_not_anchored_rejected():
    r = make_router(5, {1: 1})
    with pytest.raises(ProtocolError):
        r.prefix_delete(P)
    r.prefix_add(P)
    with pytest.raises(ProtocolError):
        r.prefix_add(P)


def test_op_counter_counts_events_and_loops():
    r = make_router(3, {1: 1, 4: 1, 6: 1})
    r.handle_message(msg(1, 3, Kind.UPDATE, 0))
    # 1 event + neighbor-loop iterations, so strictly more than the event count
    assert r.op_counter > 3
    before = r.op_counter
    r.link_cost(6, 2)
    assert r.op_counter > before
