"""Route and bus-stop documents for the traffic simulator, plus the matched-line JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence
from xml.parsers import expat

from .errors import DuplicateIdError, IntegrityError, ParseError
from .matcher import MatchedRoute, MatchedStop
from .network import RoadNetwork

PLATFORM_HALF_LENGTH = 5.0


@dataclass(frozen=True)
class MatchedLine:
    line_id: str
    route: MatchedRoute
    stops: tuple[MatchedStop, ...] = ()
    departures: tuple[float, ...] = ()
    unmatched_stops: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.departures, self.departures[1:])):
            raise ValueError(f"line {self.line_id!r}: departures must be strictly increasing")
        on_route = set(self.route.edges)
        for s in self.stops:
            if s.edge_id not in on_route:
                raise ValueError(f"line {self.line_id!r}: stop {s.stop_id!r} is on edge {s.edge_id!r} outside the route")

    @property
    def edges(self) -> tuple[str, ...]:
        return self.route.edges


def _attr(s: str) -> str:
    return s.replace("&", "&amp;").replace('"', "&quot;").replace("<", "&lt;").replace(">", "&gt;")


def _check_unique(lines):
    seen = set()
    for ln in lines:
        if ln.line_id in seen:
            raise DuplicateIdError(f"duplicate line id {ln.line_id!r}")
        seen.add(ln.line_id)


def vehicle_id(line_id: str, k: int) -> str:
    return f"{line_id}.{k}"


def emit_routes(lines: Sequence[MatchedLine], stop_duration: float | None = None) -> str:
    """Route document: one ``route`` per line, one ``vehicle`` per departure.

    Vehicles are ordered by (depart, id). With ``stop_duration`` each route also
    carries ``stop`` children pointing at the lines' bus stops.
    """
    _check_unique(lines)
    out = ['<?xml version="1.0" encoding="UTF-8"?>', "<routes>"]
    for ln in sorted(lines, key=lambda l: l.line_id):
        head = f'    <route id="{_attr(ln.line_id)}" edges="{_attr(" ".join(ln.edges))}"'
        if stop_duration is not None and ln.stops:
            out.append(head + ">")
            for s in ln.stops:
                out.append(f'        <stop busStop="{_attr(stop_element_id(ln.line_id, s.stop_id))}" duration="{stop_duration:.2f}"/>')
            out.append("    </route>")
        else:
            out.append(head + "/>")
    vehicles = [
        (t, vehicle_id(ln.line_id, k), ln.line_id)
        for ln in lines
        for k, t in enumerate(ln.departures)
    ]
    vehicles.sort(key=lambda v: (v[0], v[1]))
    for t, vid, rid in vehicles:
        out.append(f'    <vehicle id="{_attr(vid)}" route="{_attr(rid)}" depart="{t:.2f}"/>')
    out.append("</routes>")
    return "\n".join(out) + "\n"


def stop_element_id(line_id: str, stop_id: str) -> str:
    return f"{line_id}_{stop_id}"


def emit_stops(lines: Sequence[MatchedLine], net: RoadNetwork, half_length: float = PLATFORM_HALF_LENGTH) -> str:
    """Additional document with one ``busStop`` per matched stop.

    The platform spans ``half_length`` either side of the stop offset, clamped
    to the edge.
    """
    _check_unique(lines)
    out = ['<?xml version="1.0" encoding="UTF-8"?>', "<additional>"]
    for ln in sorted(lines, key=lambda l: l.line_id):
        for s in ln.stops:
            length = net.edge(s.edge_id).length
            start = max(0.0, s.offset - half_length)
            end = min(length, s.offset + half_length)
            out.append(
                f'    <busStop id="{_attr(stop_element_id(ln.line_id, s.stop_id))}" lane="{_attr(s.edge_id)}_0" '
                f'startPos="{start:.2f}" endPos="{end:.2f}"/>'
            )
    out.append("</additional>")
    return "\n".join(out) + "\n"


def parse_routes(document: str | bytes) -> list[MatchedLine]:
    """Read a route document back into line skeletons (edges and departures only)."""
    parser = expat.ParserCreate()
    routes: dict[str, tuple[str, ...]] = {}
    vehicles: list[tuple[str, str, float, int]] = []
    depth = [0]

    def start(name, attrs):
        line = parser.CurrentLineNumber
        depth[0] += 1
        if depth[0] == 1:
            if name != "routes":
                raise ParseError(f"root element must be <routes>, got <{name}>", line)
            return
        if depth[0] != 2:
            return
        if name == "route":
            rid = attrs.get("id")
            if not rid or "edges" not in attrs:
                raise ParseError("route needs id and edges", line)
            if rid in routes:
                raise DuplicateIdError(f"line {line}: duplicate route id {rid!r}")
            edges = tuple(attrs["edges"].split())
            if not edges:
                raise ParseError(f"route {rid!r} has no edges", line)
            routes[rid] = edges
        elif name == "vehicle":
            vid, rid, dep = attrs.get("id"), attrs.get("route"), attrs.get("depart")
            if not vid or not rid or dep is None:
                raise ParseError("vehicle needs id, route and depart", line)
            try:
                t = float(dep)
            except ValueError:
                raise ParseError(f"bad depart {dep!r}", line) from None
            vehicles.append((vid, rid, t, line))

    def end(name):
        depth[0] -= 1

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    try:
        parser.Parse(document.encode("utf-8") if isinstance(document, str) else document, True)
    except expat.ExpatError as exc:
        raise ParseError(expat.ErrorString(exc.code), exc.lineno) from None

    deps: dict[str, list[float]] = {rid: [] for rid in routes}
    for vid, rid, t, line in vehicles:
        if rid not in routes:
            raise IntegrityError(f"line {line}: vehicle {vid!r} references undefined route {rid!r}")
        deps[rid].append(t)
    out = []
    for rid in sorted(routes):
        times = sorted(deps[rid])
        try:
            out.append(MatchedLine(rid, MatchedRoute(rid, routes[rid]), (), tuple(times)))
        except ValueError as exc:
            raise IntegrityError(str(exc)) from None
    return out


def matched_line_document(line: MatchedLine) -> dict:
    return {
        "line_id": line.line_id,
        "edges": list(line.edges),
        "gap_count": line.route.gap_count,
        "stops": [{"id": s.stop_id, "edge": s.edge_id, "offset": s.offset} for s in line.stops],
        "unmatched_stops": list(line.unmatched_stops),
        "departures": list(line.departures),
    }


def parse_matched_line(document: str | bytes | dict) -> MatchedLine:
    try:
        d = json.loads(document) if not isinstance(document, dict) else document
        route = MatchedRoute(str(d["line_id"]), tuple(d["edges"]), int(d.get("gap_count", 0)))
        stops = tuple(MatchedStop(str(s["id"]), s["edge"], float(s["offset"])) for s in d.get("stops", []))
        return MatchedLine(
            route.line_id,
            route,
            stops,
            tuple(float(t) for t in d.get("departures", [])),
            tuple(d.get("unmatched_stops", [])),
        )
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad matched-line document: {exc}") from None
