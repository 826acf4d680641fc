"""Road network model, the net document reader, and candidate-edge queries."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import NamedTuple
from xml.parsers import expat

from .errors import EmptyNetworkError, IntegrityError, ParseError, UnknownEdgeError
from .geo import (
    CartPoint,
    GeoPoint,
    ProjectionContext,
    point_segment_distance,
    polyline_length,
    to_geographic,
)

SHAPE_TOLERANCE_M = 0.5
GEOMETRIES = ("chord", "polyline")


@dataclass(frozen=True)
class Node:
    id: str
    pos: CartPoint


@dataclass(frozen=True)
class Edge:
    id: str
    from_node: str
    to_node: str
    length: float
    speed_limit: float
    shape: tuple[CartPoint, ...] | None = None


class CandidateEdge(NamedTuple):
    edge_id: str
    distance: float


class _GridIndex:
    """Uniform grid over edge geometry; a cell lists every edge whose geometry may touch it."""

    def __init__(self, cell: float):
        self.cell = cell
        self.cells: dict[tuple[int, int], list[str]] = {}

    def _key(self, x, y):
        return (math.floor(x / self.cell), math.floor(y / self.cell))

    def add_segment(self, edge_id, a, b):
        # samples no farther apart than half a cell; the 3x3 dilation then
        # covers every cell the segment actually crosses
        n = max(1, math.ceil(math.dist(a, b) / (self.cell / 2.0)))
        keys = set()
        for i in range(n + 1):
            t = i / n
            cx, cy = self._key(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    keys.add((cx + dx, cy + dy))
        for k in keys:
            bucket = self.cells.setdefault(k, [])
            if not bucket or bucket[-1] != edge_id:
                bucket.append(edge_id)

    def query(self, p, radius):
        x0, y0 = self._key(p[0] - radius, p[1] - radius)
        x1, y1 = self._key(p[0] + radius, p[1] + radius)
        found = set()
        for i in range(x0, x1 + 1):
            for j in range(y0, y1 + 1):
                found.update(self.cells.get((i, j), ()))
        return found


@dataclass
class RoadNetwork:
    """Directed edge graph. Treat as immutable once built."""

    nodes: dict[str, Node]
    edges: dict[str, Edge]
    connections: frozenset[tuple[str, str]]
    projection: ProjectionContext = field(default_factory=ProjectionContext)
    boundary: tuple[GeoPoint, GeoPoint] | None = None
    _grids: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.validate()
        if self.boundary is None:
            self.boundary = self._planar_boundary()

    def validate(self):
        if not self.edges:
            raise EmptyNetworkError("network has no edges")
        for e in self.edges.values():
            if e.from_node not in self.nodes or e.to_node not in self.nodes:
                raise IntegrityError(f"edge {e.id!r} references an undefined node")
            if e.from_node == e.to_node:
                raise IntegrityError(f"edge {e.id!r} starts and ends at node {e.from_node!r}")
            if not (e.length > 0 and math.isfinite(e.length)):
                raise IntegrityError(f"edge {e.id!r} has non-positive length")
            if not (e.speed_limit > 0 and math.isfinite(e.speed_limit)):
                raise IntegrityError(f"edge {e.id!r} has non-positive speed")
            if self.nodes[e.from_node].pos == self.nodes[e.to_node].pos:
                raise IntegrityError(f"edge {e.id!r} joins two nodes at the same position")
            if e.shape is not None:
                if len(e.shape) < 2 or all(p == e.shape[0] for p in e.shape):
                    raise IntegrityError(f"edge {e.id!r} shape is degenerate")
                if (
                    math.dist(e.shape[0], self.nodes[e.from_node].pos) > SHAPE_TOLERANCE_M
                    or math.dist(e.shape[-1], self.nodes[e.to_node].pos) > SHAPE_TOLERANCE_M
                ):
                    raise IntegrityError(f"edge {e.id!r} shape does not start/end at its nodes")
        for a, b in self.connections:
            if a not in self.edges or b not in self.edges:
                raise IntegrityError(f"connection {a!r} -> {b!r} references an undefined edge")
            if self.edges[a].to_node != self.edges[b].from_node:
                raise IntegrityError(f"connection {a!r} -> {b!r} joins edges that do not meet")
        xs = [n.pos.x for n in self.nodes.values()]
        ys = [n.pos.y for n in self.nodes.values()]
        if min(xs) == max(xs) and min(ys) == max(ys):
            raise IntegrityError("degenerate network boundary")

    def _planar_boundary(self):
        xs = [n.pos.x for n in self.nodes.values()]
        ys = [n.pos.y for n in self.nodes.values()]
        lo = to_geographic(CartPoint(min(xs), min(ys)), self.projection)
        hi = to_geographic(CartPoint(max(xs), max(ys)), self.projection)
        return lo, hi

    def edge(self, edge_id: str) -> Edge:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise UnknownEdgeError(f"unknown edge {edge_id!r}") from None

    def from_pos(self, edge_id: str) -> CartPoint:
        return self.nodes[self.edge(edge_id).from_node].pos

    def to_pos(self, edge_id: str) -> CartPoint:
        return self.nodes[self.edge(edge_id).to_node].pos

    def chord_length(self, edge_id: str) -> float:
        return math.dist(self.from_pos(edge_id), self.to_pos(edge_id))

    def geometry(self, edge_id: str, mode: str = "chord") -> tuple[CartPoint, ...]:
        if mode == "chord":
            return (self.from_pos(edge_id), self.to_pos(edge_id))
        if mode == "polyline":
            e = self.edge(edge_id)
            return e.shape if e.shape is not None else (self.from_pos(edge_id), self.to_pos(edge_id))
        raise ValueError(f"unknown match geometry {mode!r}; expected one of {GEOMETRIES}")

    def edge_distance(self, edge_id: str, p: CartPoint, mode: str = "chord") -> float:
        pts = self.geometry(edge_id, mode)
        return min(point_segment_distance(p, a, b) for a, b in zip(pts, pts[1:]) if a != b)

    def _grid(self, radius: float, mode: str) -> _GridIndex:
        key = (radius, mode)
        grid = self._grids.get(key)
        if grid is None:
            with self._lock:
                grid = self._grids.get(key)
                if grid is None:
                    grid = _GridIndex(2.0 * radius)
                    for eid in sorted(self.edges):
                        pts = self.geometry(eid, mode)
                        for a, b in zip(pts, pts[1:]):
                            grid.add_segment(eid, a, b)
                    self._grids[key] = grid
        return grid

    def successors(self, edge_id: str) -> list[str]:
        return sorted(b for a, b in self.connections if a == edge_id)


def candidate_edges(
    net: RoadNetwork, p: CartPoint, radius: float, geometry: str = "chord"
) -> list[CandidateEdge]:
    """Edges within ``radius`` of ``p``, nearest first, ties by edge id."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    out = []
    for eid in net._grid(radius, geometry).query(p, radius):
        d = net.edge_distance(eid, p, geometry)
        if d <= radius:
            out.append(CandidateEdge(eid, d))
    out.sort(key=lambda c: (c.distance, c.edge_id))
    return out


def candidate_edges_brute(
    net: RoadNetwork, p: CartPoint, radius: float, geometry: str = "chord"
) -> list[CandidateEdge]:
    """Linear scan over all edges; reference for :func:`candidate_edges`."""
    out = [CandidateEdge(eid, net.edge_distance(eid, p, geometry)) for eid in net.edges]
    out = [c for c in out if c.distance <= radius]
    out.sort(key=lambda c: (c.distance, c.edge_id))
    return out


def connection_allowed(net: RoadNetwork, from_edge: str, to_edge: str) -> bool:
    net.edge(from_edge)
    net.edge(to_edge)
    return (from_edge, to_edge) in net.connections


# -- document reader ---------------------------------------------------------


def _num(attrs, name, line, required=True):
    raw = attrs.get(name)
    if raw is None:
        if required:
            raise ParseError(f"missing attribute {name!r}", line)
        return None
    try:
        v = float(raw)
    except ValueError:
        raise ParseError(f"attribute {name!r} is not a number: {raw!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"attribute {name!r} is not finite", line)
    return v


def _shape(raw, line):
    try:
        pts = tuple(CartPoint(*map(float, tok.split(",")[:2])) for tok in raw.split())
    except (TypeError, ValueError):
        raise ParseError(f"malformed shape {raw!r}", line) from None
    if len(pts) < 2:
        raise ParseError("shape needs at least two points", line)
    return pts


def _req(attrs, name, line):
    v = attrs.get(name)
    if v is None or v == "":
        raise ParseError(f"missing attribute {name!r}", line)
    return v


def parse_network(document: str | bytes) -> RoadNetwork:
    """Read the net document subset.

    Recognised: ``net`` root, ``junction id x y``, ``edge id from to speed length
    [shape]`` (speed/length may instead come from ``lane`` children, taking the
    fastest lane), ``connection from to`` and ``location origLat origLon`` or
    ``location origBoundary``. Internal edges (``function="internal"`` or ids
    starting with ``:``) and everything else are skipped.
    """
    parser = expat.ParserCreate()
    nodes: dict[str, Node] = {}
    raw_edges: dict[str, dict] = {}
    connections: set[tuple[str, str]] = set()
    conn_lines: dict[tuple[str, str], int] = {}
    location: dict = {}
    stack: list[str] = []
    current: list[dict | None] = [None]

    def start(name, attrs):
        line = parser.CurrentLineNumber
        parent = stack[-1] if stack else None
        stack.append(name)
        if parent is None:
            if name != "net":
                raise ParseError(f"root element must be <net>, got <{name}>", line)
            return
        if name == "junction" and parent == "net":
            if attrs.get("type") == "internal" or attrs.get("id", "").startswith(":"):
                return
            jid = _req(attrs, "id", line)
            if jid in nodes:
                raise ParseError(f"duplicate junction id {jid!r}", line)
            nodes[jid] = Node(jid, CartPoint(_num(attrs, "x", line), _num(attrs, "y", line)))
        elif name == "edge" and parent == "net":
            current[0] = None
            eid = _req(attrs, "id", line)
            if attrs.get("function") == "internal" or eid.startswith(":"):
                return
            if eid in raw_edges:
                raise ParseError(f"duplicate edge id {eid!r}", line)
            rec = {
                "id": eid,
                "from": _req(attrs, "from", line),
                "to": _req(attrs, "to", line),
                "speed": _num(attrs, "speed", line, required=False),
                "length": _num(attrs, "length", line, required=False),
                "shape": _shape(attrs["shape"], line) if attrs.get("shape") else None,
                "lanes": [],
                "line": line,
            }
            raw_edges[eid] = rec
            current[0] = rec
        elif name == "lane" and parent == "edge":
            if current[0] is not None:
                current[0]["lanes"].append(
                    (_num(attrs, "speed", line, required=False), _num(attrs, "length", line, required=False))
                )
        elif name == "connection" and parent == "net":
            a, b = _req(attrs, "from", line), _req(attrs, "to", line)
            if a.startswith(":") or b.startswith(":"):
                return
            connections.add((a, b))
            conn_lines.setdefault((a, b), line)
        elif name == "location" and parent == "net":
            location.update(attrs)
            location["_line"] = line

    def end(name):
        stack.pop()

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    try:
        if isinstance(document, str):
            document = document.encode("utf-8")
        parser.Parse(document, True)
    except expat.ExpatError as exc:
        raise ParseError(expat.ErrorString(exc.code), exc.lineno) from None

    edges = {}
    for eid, rec in raw_edges.items():
        line = rec["line"]
        for key in ("from", "to"):
            if rec[key] not in nodes:
                raise IntegrityError(f"line {line}: edge {eid!r} references undefined node {rec[key]!r}")
        speed, length = rec["speed"], rec["length"]
        lane_speeds = [s for s, _ in rec["lanes"] if s is not None]
        lane_lengths = [l for _, l in rec["lanes"] if l is not None]
        if speed is None:
            if not lane_speeds:
                raise ParseError(f"edge {eid!r} has no speed", line)
            speed = max(lane_speeds)
        if length is None:
            if lane_lengths:
                length = max(lane_lengths)
            elif rec["shape"] is not None:
                length = polyline_length(rec["shape"])
            else:
                length = math.dist(nodes[rec["from"]].pos, nodes[rec["to"]].pos)
        edges[eid] = Edge(eid, rec["from"], rec["to"], length, speed, rec["shape"])

    for pair, line in sorted(conn_lines.items(), key=lambda kv: kv[1]):
        if pair[0] not in edges or pair[1] not in edges:
            raise IntegrityError(f"line {line}: connection {pair[0]!r} -> {pair[1]!r} references an undefined edge")

    if not edges:
        raise EmptyNetworkError("network has no edges")

    try:
        return RoadNetwork(
            nodes=nodes,
            edges=edges,
            connections=frozenset(connections),
            projection=_projection_from_location(location),
        )
    except IntegrityError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc), location.get("_line")) from None


def _projection_from_location(location: dict) -> ProjectionContext:
    if not location:
        return ProjectionContext()
    line = location.get("_line")
    lat = _num(location, "origLat", line, required=False)
    lon = _num(location, "origLon", line, required=False)
    if lat is not None and lon is not None:
        return ProjectionContext(GeoPoint(lat, lon))
    raw = location.get("origBoundary")
    if raw:
        try:
            min_lon, min_lat, max_lon, max_lat = map(float, raw.split(","))
        except ValueError:
            raise ParseError(f"malformed origBoundary {raw!r}", line) from None
        return ProjectionContext(GeoPoint((min_lat + max_lat) / 2.0, (min_lon + max_lon) / 2.0))
    return ProjectionContext()


def write_network(net: RoadNetwork) -> str:
    """Serialise ``net`` back into the document subset (sorted, LF endings)."""
    o = net.projection.origin
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', "<net>"]
    lines.append(f'    <location origLat="{o.lat:.9f}" origLon="{o.lon:.9f}"/>')
    for nid in sorted(net.nodes):
        n = net.nodes[nid]
        lines.append(f'    <junction id="{_esc(nid)}" x="{n.pos.x:.2f}" y="{n.pos.y:.2f}"/>')
    for eid in sorted(net.edges):
        e = net.edges[eid]
        shape = ""
        if e.shape is not None:
            shape = ' shape="' + " ".join(f"{x:.2f},{y:.2f}" for x, y in e.shape) + '"'
        lines.append(
            f'    <edge id="{_esc(eid)}" from="{_esc(e.from_node)}" to="{_esc(e.to_node)}" '
            f'speed="{e.speed_limit:.2f}" length="{e.length:.2f}"{shape}/>'
        )
    for a, b in sorted(net.connections):
        lines.append(f'    <connection from="{_esc(a)}" to="{_esc(b)}"/>')
    lines.append("</net>")
    return "\n".join(lines) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace('"', "&quot;").replace("<", "&lt;").replace(">", "&gt;")
