"""Map-matching of bus itineraries and stops onto a road network.

The itinerary is projected, densified and then walked point by point. The
first edge is chosen from the direction of travel between two consecutive
points; every later point either stays on the current edge, extends the chain
with a successor that is both physically adjacent and registered as a
connection, or is skipped as a gap.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

from .errors import (
    BrokenRouteError,
    NoCandidateError,
    NoOrientedCandidateError,
    ParseError,
    UnmatchableRouteError,
)
from .geo import (
    CartPoint,
    GeoPoint,
    ProjectionContext,
    check_geo,
    densify,
    polyline_length,
    project_onto_polyline,
    project_onto_segment,
    segment_param_unclamped,
    to_cartesian,
)
from .network import RoadNetwork, candidate_edges, connection_allowed


class _Marker:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name.upper()


STAY = _Marker("stay")
GAP = _Marker("gap")


@dataclass(frozen=True)
class MatcherConfig:
    radius: float = 15.0
    densify_passes: int = 1
    max_consecutive_gaps: int = 5
    geometry: str = "chord"
    stay_margin: float = 5.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.stay_margin < 0:
            raise ValueError("stay_margin must be non-negative")
        if self.densify_passes < 0 or self.max_consecutive_gaps < 0:
            raise ValueError("counts must be non-negative")
        if self.geometry not in ("chord", "polyline"):
            raise ValueError(f"unknown match geometry {self.geometry!r}")


@dataclass(frozen=True)
class LineSpec:
    line_id: str
    itinerary: tuple[GeoPoint, ...]
    stops: tuple[tuple[str, GeoPoint], ...] = ()
    departures: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.line_id:
            raise ValueError("line_id must be non-empty")
        if len(self.itinerary) < 2:
            raise ValueError(f"line {self.line_id!r}: itinerary needs at least 2 points")
        if any(b <= a for a, b in zip(self.departures, self.departures[1:])):
            raise ValueError(f"line {self.line_id!r}: departures must be strictly increasing")
        ids = [s for s, _ in self.stops]
        if len(set(ids)) != len(ids):
            raise ValueError(f"line {self.line_id!r}: duplicate stop id")


@dataclass(frozen=True)
class MatchedRoute:
    line_id: str
    edges: tuple[str, ...]
    gap_count: int = 0
    # per densified point: (x, y) and the decision taken there
    points: tuple[CartPoint, ...] = field(default=(), compare=False, repr=False)
    decisions: tuple[str, ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class MatchedStop:
    stop_id: str
    edge_id: str
    offset: float


# -- line documents ------------------------------------------------------------

_HMS = re.compile(r"^(\d{1,3}):([0-5]\d):([0-5]\d(?:\.\d+)?)$")


def parse_hms(text: str) -> float:
    m = _HMS.match(text.strip()) if isinstance(text, str) else None
    if not m:
        raise ParseError(f"bad time of day {text!r}, expected HH:MM:SS")
    h, mi, s = m.groups()
    return int(h) * 3600 + int(mi) * 60 + float(s)


def format_hms(seconds: float) -> str:
    s = int(round(seconds))
    return f"{s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}"


def _geo(obj, where):
    try:
        return check_geo(GeoPoint(float(obj["lat"]), float(obj["lon"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: bad coordinate ({exc})") from None


def parse_line_spec(document: str | bytes | dict) -> LineSpec:
    """Read one line document (JSON)."""
    try:
        data = json.loads(document) if not isinstance(document, dict) else document
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    if not isinstance(data, dict):
        raise ParseError("line document must be a JSON object")
    for key in ("line_id", "route"):
        if key not in data:
            raise ParseError(f"missing key {key!r}")
    line_id = str(data["line_id"])
    route = tuple(_geo(p, f"route[{i}]") for i, p in enumerate(data["route"]))
    stops = []
    for i, s in enumerate(data.get("stops", [])):
        if "id" not in s:
            raise ParseError(f"stops[{i}]: missing id")
        stops.append((str(s["id"]), _geo(s, f"stops[{i}]")))
    departures = tuple(parse_hms(t) for t in data.get("departures", []))
    try:
        return LineSpec(line_id, route, tuple(stops), departures)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def line_spec_document(line: LineSpec) -> dict:
    return {
        "line_id": line.line_id,
        "route": [{"lat": p.lat, "lon": p.lon} for p in line.itinerary],
        "stops": [{"id": sid, "lat": p.lat, "lon": p.lon} for sid, p in line.stops],
        "departures": [format_hms(t) for t in line.departures],
    }


# -- matching ------------------------------------------------------------------


def match_first_edge(net: RoadNetwork, p1: CartPoint, p2: CartPoint, cfg: MatcherConfig) -> str:
    """Pick the first edge from the heading p1 -> p2.

    Candidates of p1 are tried nearest first. One is accepted when p2 is nearer
    its to-node than p1 is (the bus approaches the end of the edge), or when p1
    is already past the middle, p2 is farther from the to-node than p1 and p2
    lies beyond the to-node (the bus has just left the edge for the next one).
    """
    if tuple(p1) == tuple(p2):
        raise ValueError("first-edge points coincide")
    cands = candidate_edges(net, p1, cfg.radius, cfg.geometry)
    if not cands:
        raise NoCandidateError(f"no edge within {cfg.radius} m of {tuple(p1)}")
    for c in cands:
        fr = net.from_pos(c.edge_id)
        to = net.to_pos(c.edge_id)
        d1_to = math.dist(p1, to)
        d2_to = math.dist(p2, to)
        if d2_to < d1_to:
            return c.edge_id
        if d1_to < math.dist(p1, fr) and d2_to > d1_to and segment_param_unclamped(p2, fr, to) > 1.0:
            return c.edge_id
    raise NoOrientedCandidateError(f"no candidate near {tuple(p1)} agrees with the heading")


def match_next_edge(net: RoadNetwork, prev_edge: str, p: CartPoint, cfg: MatcherConfig):
    """Return STAY, GAP, or the id of the successor edge for point ``p``."""
    prev = net.edge(prev_edge)
    cands = candidate_edges(net, p, cfg.radius, cfg.geometry)
    if not cands:
        return GAP
    limit = cands[0].distance + cfg.stay_margin
    for c in cands:
        if c.distance > limit:
            break
        if c.edge_id == prev_edge:
            return STAY
    for c in cands:
        cand = net.edges[c.edge_id]
        if cand.from_node != prev.to_node:
            continue
        if connection_allowed(net, prev_edge, c.edge_id):
            return c.edge_id
    return GAP


def project_line(line: LineSpec, ctx: ProjectionContext, passes: int = 1) -> list[CartPoint]:
    pts = [to_cartesian(p, ctx) for p in line.itinerary]
    return densify(pts, passes) if passes else pts


def match_points(net: RoadNetwork, points: Sequence[CartPoint], cfg: MatcherConfig, line_id: str = "") -> MatchedRoute:
    """Chain-match already projected points."""
    decisions = ["unresolved"] * len(points)
    first = None
    for i in range(len(points) - 1):
        if tuple(points[i]) == tuple(points[i + 1]):
            continue
        try:
            first = match_first_edge(net, points[i], points[i + 1], cfg)
        except (NoCandidateError, NoOrientedCandidateError):
            continue
        decisions[i] = first
        start = i + 1
        break
    if first is None:
        raise UnmatchableRouteError(f"line {line_id!r}: no consecutive point pair resolves a first edge")

    chain = [first]
    gaps = run = 0
    for j in range(start, len(points)):
        res = match_next_edge(net, chain[-1], points[j], cfg)
        if res is GAP:
            gaps += 1
            run += 1
            decisions[j] = "gap"
            if run > cfg.max_consecutive_gaps:
                raise BrokenRouteError(
                    f"line {line_id!r}: {run} consecutive unmatched points ending at point {j} "
                    f"after edge {chain[-1]!r}"
                )
            continue
        run = 0
        if res is STAY:
            decisions[j] = "stay"
        else:
            chain.append(res)
            decisions[j] = res
    return MatchedRoute(line_id, tuple(chain), gaps, tuple(CartPoint(*p) for p in points), tuple(decisions))


def match_route(net: RoadNetwork, line: LineSpec, ctx: ProjectionContext | None = None, cfg: MatcherConfig | None = None) -> MatchedRoute:
    cfg = cfg or MatcherConfig()
    ctx = ctx or net.projection
    return match_points(net, project_line(line, ctx, cfg.densify_passes), cfg, line.line_id)


def stop_offset(net: RoadNetwork, edge_id: str, p: CartPoint, geometry: str = "chord") -> float:
    """Longitudinal position of ``p`` on the edge, scaled to the edge's nominal length."""
    e = net.edge(edge_id)
    if geometry == "polyline" and e.shape is not None:
        _, along = project_onto_polyline(p, e.shape)
        ref = polyline_length(e.shape)
    else:
        along, _ = project_onto_segment(p, net.from_pos(edge_id), net.to_pos(edge_id))
        ref = net.chord_length(edge_id)
    return min(e.length, max(0.0, along * e.length / ref))


def match_stops(
    net: RoadNetwork,
    route: MatchedRoute,
    stops: Sequence[tuple[str, GeoPoint]],
    ctx: ProjectionContext | None = None,
    cfg: MatcherConfig | None = None,
) -> tuple[list[MatchedStop], list[str]]:
    """Place each stop on the nearest candidate edge that belongs to the route.

    Returns the matched stops in input order and the ids of unmatched ones.
    """
    cfg = cfg or MatcherConfig()
    ctx = ctx or net.projection
    on_route = set(route.edges)
    matched, unmatched = [], []
    for stop_id, gp in stops:
        p = to_cartesian(gp, ctx)
        hit = next((c for c in candidate_edges(net, p, cfg.radius, cfg.geometry) if c.edge_id in on_route), None)
        if hit is None:
            unmatched.append(stop_id)
            continue
        matched.append(MatchedStop(stop_id, hit.edge_id, stop_offset(net, hit.edge_id, p, cfg.geometry)))
    return matched, unmatched


def conference_document(route: MatchedRoute, stops=(), unmatched=()) -> dict:
    """Human-auditable record of every per-point decision."""
    return {
        "line_id": route.line_id,
        "points": [
            {"index": i, "x": round(p.x, 2), "y": round(p.y, 2), "decision": d}
            for i, (p, d) in enumerate(zip(route.points, route.decisions))
        ],
        "gap_count": route.gap_count,
        "edges": list(route.edges),
        "stops": [{"id": s.stop_id, "edge": s.edge_id, "offset": round(s.offset, 2)} for s in stops],
        "unmatched_stops": list(unmatched),
    }
