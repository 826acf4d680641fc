import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings, strategies as st

from busmob.emitter import (
    MatchedLine,
    emit_routes,
    emit_stops,
    matched_line_document,
    parse_matched_line,
    parse_routes,
)
from busmob.errors import DuplicateIdError, IntegrityError, ParseError
from busmob.matcher import MatchedRoute, MatchedStop

from conftest import build_net


def ml(line_id, edges, departures=(), stops=()):
    return MatchedLine(line_id, MatchedRoute(line_id, tuple(edges)), tuple(stops), tuple(departures))


HUNDRED = build_net({"A": (0, 0), "B": (100, 0)}, {"e": ("A", "B")})


@pytest.fixture
def hundred():
    return HUNDRED


def test_single_line():
    doc = emit_routes([ml("L1", ["e1", "e2"], [0, 600])])
    root = ET.fromstring(doc)
    routes, vehicles = root.findall("route"), root.findall("vehicle")
    assert len(routes) == 1 and routes[0].get("edges") == "e1 e2"
    assert [v.get("depart") for v in vehicles] == ["0.00", "600.00"]
    assert [v.get("id") for v in vehicles] == ["L1.0", "L1.1"]
    assert all(v.get("route") == "L1" for v in vehicles)


def test_no_lines():
    root = ET.fromstring(emit_routes([]))
    assert root.tag == "routes" and len(root) == 0


def test_vehicles_globally_sorted():
    doc = emit_routes([ml("B", ["x"], [0, 100, 200]), ml("A", ["y"], [50, 100, 150])])
    vs = ET.fromstring(doc).findall("vehicle")
    got = [(float(v.get("depart")), v.get("id")) for v in vs]
    assert got == sorted(got)
    assert [i for _, i in got] == ["B.0", "A.0", "A.1", "B.1", "A.2", "B.2"]


def test_duplicate_line_ids():
    with pytest.raises(DuplicateIdError):
        emit_routes([ml("L", ["a"]), ml("L", ["b"])])


def test_byte_deterministic():
    lines = [ml("L2", ["a", "b"], [1.005, 7]), ml("L1", ["c"], [3])]
    doc = emit_routes(lines)
    assert doc == emit_routes(list(reversed(lines)))
    assert "\r" not in doc and doc.endswith("\n")


def test_stop_children():
    line = ml("L", ["e"], [0], [MatchedStop("s", "e", 55)])
    route = ET.fromstring(emit_routes([line], stop_duration=20)).find("route")
    (stop,) = route.findall("stop")
    assert stop.get("busStop") == "L_s" and stop.get("duration") == "20.00"


@pytest.mark.parametrize("offset,start,end", [(55, "50.00", "60.00"), (2, "0.00", "7.00"), (98, "93.00", "100.00")])
def test_platform_extent(hundred, offset, start, end):
    doc = emit_stops([ml("L", ["e"], [0], [MatchedStop("s", "e", offset)])], hundred)
    (bs,) = ET.fromstring(doc).findall("busStop")
    assert (bs.get("startPos"), bs.get("endPos")) == (start, end)
    assert bs.get("lane") == "e_0" and bs.get("id") == "L_s"


def test_stop_order(hundred):
    lines = [
        ml("b", ["e"], [0], [MatchedStop("z", "e", 80), MatchedStop("a", "e", 20)]),
        ml("a", ["e"], [0], [MatchedStop("m", "e", 50)]),
    ]
    ids = [b.get("id") for b in ET.fromstring(emit_stops(lines, hundred)).findall("busStop")]
    assert ids == ["a_m", "b_z", "b_a"]


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 100))
def test_platform_inside_edge(offset):
    doc = emit_stops([ml("L", ["e"], [0], [MatchedStop("s", "e", offset)])], HUNDRED)
    (bs,) = ET.fromstring(doc).findall("busStop")
    assert 0 <= float(bs.get("startPos")) < float(bs.get("endPos")) <= 100


_ids = st.text("abcXYZ019_-", min_size=1, max_size=6)


@st.composite
def line_sets(draw):
    names = draw(st.lists(_ids, min_size=0, max_size=5, unique=True))
    out = []
    for n in names:
        edges = draw(st.lists(_ids, min_size=1, max_size=6))
        cents = draw(st.lists(st.integers(0, 10_000_000), max_size=8, unique=True))
        out.append(ml(n, edges, [c / 100 for c in sorted(cents)]))
    return out


@settings(max_examples=150, deadline=None)
@given(line_sets())
def test_round_trip(lines):
    back = parse_routes(emit_routes(lines))
    assert [(l.line_id, l.edges, l.departures) for l in back] == sorted(
        (l.line_id, l.edges, l.departures) for l in lines
    )


def test_hand_written_document():
    doc = """<routes>
        <route id="r" edges="a b c"/>
        <vehicle id="v" route="r" depart="3600"/>
    </routes>"""
    (line,) = parse_routes(doc)
    assert line.line_id == "r" and line.edges == ("a", "b", "c") and line.departures == (3600.0,)


def test_undefined_route():
    with pytest.raises(IntegrityError):
        parse_routes('<routes><route id="r" edges="a"/><vehicle id="v" route="q" depart="0"/></routes>')


def test_malformed_route_document():
    with pytest.raises(ParseError) as exc:
        parse_routes('<routes>\n<route id="r" edges="a">\n</routes>')
    assert exc.value.line == 3


def test_route_needs_edges():
    with pytest.raises(ParseError):
        parse_routes('<routes><route id="r"/></routes>')


def test_matched_line_json_round_trip():
    line = MatchedLine(
        "L", MatchedRoute("L", ("a", "b"), 2), (MatchedStop("s", "b", 12.5),), (10.0, 20.0), ("lost",)
    )
    back = parse_matched_line(matched_line_document(line))
    assert back == line and back.unmatched_stops == ("lost",) and back.route.gap_count == 2


def test_stop_off_route_rejected():
    with pytest.raises(ValueError):
        ml("L", ["a"], [0], [MatchedStop("s", "b", 1)])
