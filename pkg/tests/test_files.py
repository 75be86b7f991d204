import pytest

from dnrp.files import (
    ParseError,
    check_events,
    format_events,
    format_topology,
    parse_events,
    parse_topology,
)
from dnrp.fuzz import case
from dnrp.model import LinkDown, LinkUp, PrefixAdd

TOPO = """\
# comment line
node 1
node 2
node 3   # trailing comment
link 1 2 1
link 2 3 4 2
anchor 3 /video
"""


def test_parse_topology():
    t = parse_topology("x.topo", TOPO)
    assert t.routers == {1, 2, 3}
    assert t.link(2, 3).cost == 4 and t.link(3, 2).delay == 2
    assert t.anchors == {"/video": {3}}


def test_topology_roundtrip():
    c = case(8)
    text = format_topology(c.topology)
    again = parse_topology("t", text)
    assert again == c.topology
    assert format_topology(again) == text


def test_events_roundtrip():
    c = case(9)
    text = format_events(c.events)
    assert parse_events("e", text) == c.events


@pytest.mark.parametrize("text,line", [
    ("node 1\nnode x\n", 2),
    ("node 1\nnode 2\nlink 1 2 0\n", 3),
    ("node 1\nlink 1 1 3\n", 2),
    ("node 1\nnode 2\nlink 1 2 1\nlink 2 1 1\n", 4),
    ("node 1\nanchor 5 /p\n", 2),
    ("router 1\n", 1),
])
def test_topology_errors_name_the_line(text, line):
    with pytest.raises(ParseError) as err:
        parse_topology("bad.topo", text)
    assert err.value.line == line
    assert str(err.value).startswith(f"bad.topo:{line}:")


@pytest.mark.parametrize("text", ["x linkfail 1 2", "3 linkfail 1", "3 linkup 1 2 0",
                                  "3 explode 1 2", "-1 linkfail 1 2", "3 linkfail 2 2"])
def test_event_errors(text):
    with pytest.raises(ParseError):
        parse_events("ev", "\n" + text)


def test_event_kinds():
    evs = parse_events("ev", "1 linkfail 1 2\n2 linkup 1 2 3\n3 prefixadd 4 /a\n")
    assert evs == [(1, LinkDown(1, 2)), (2, LinkUp(1, 2, 3)), (3, PrefixAdd(4, "/a"))]


def test_impossible_event_rejected():
    t = parse_topology("t", TOPO)
    check_events(t, parse_events("ev", "1 linkfail 1 2\n2 linkup 1 2 1\n"))
    with pytest.raises(ParseError):
        check_events(t, parse_events("ev", "1 linkfail 1 3\n"))
    with pytest.raises(ParseError):
        check_events(t, parse_events("ev", "1 prefixdel 1 /video\n"))
    with pytest.raises(ParseError):
        check_events(t, parse_events("ev", "1 linkup 1 9 1\n"))
