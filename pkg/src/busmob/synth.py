"""Synthetic road grids and GPS traces for tests and the bundled scenario."""

from __future__ import annotations

import math

from .geo import CartPoint, GeoPoint, ProjectionContext
from .network import Edge, Node, RoadNetwork


def node_id(i: int, j: int) -> str:
    return f"n{i}_{j}"


def edge_id(a: tuple[int, int], b: tuple[int, int]) -> str:
    return f"{node_id(*a)}-{node_id(*b)}"


def grid_network(
    nx: int,
    ny: int,
    spacing: float = 100.0,
    speed: float = 13.89,
    origin: GeoPoint = GeoPoint(0.0, 0.0),
    forbid=(),
    allow_uturns: bool = False,
) -> RoadNetwork:
    """Two-way street grid of ``nx`` x ``ny`` junctions.

    Every turn at every junction is registered as a connection except U-turns
    (unless ``allow_uturns``) and the (from_edge, to_edge) pairs in ``forbid``.
    Junction (i, j) sits at (i * spacing, j * spacing) minus the grid centre, so
    the projection origin is the middle of the grid.
    """
    cx = (nx - 1) * spacing / 2.0
    cy = (ny - 1) * spacing / 2.0
    nodes = {}
    for i in range(nx):
        for j in range(ny):
            nid = node_id(i, j)
            nodes[nid] = Node(nid, CartPoint(i * spacing - cx, j * spacing - cy))
    edges = {}
    for i in range(nx):
        for j in range(ny):
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                k, l = i + di, j + dj
                if 0 <= k < nx and 0 <= l < ny:
                    eid = edge_id((i, j), (k, l))
                    edges[eid] = Edge(eid, node_id(i, j), node_id(k, l), spacing, speed)
    by_from: dict[str, list[Edge]] = {}
    for e in edges.values():
        by_from.setdefault(e.from_node, []).append(e)
    forbid = set(forbid)
    conns = set()
    for e in edges.values():
        for f in by_from[e.to_node]:
            if f.to_node == e.from_node and not allow_uturns:
                continue
            if (e.id, f.id) in forbid:
                continue
            conns.add((e.id, f.id))
    return RoadNetwork(nodes, edges, frozenset(conns), ProjectionContext(origin))


def random_simple_path(net: RoadNetwork, rng, min_edges: int = 3, max_edges: int = 30, tries: int = 1000) -> list[str]:
    """Random walk over registered connections that never revisits a junction."""
    ids = sorted(net.edges)
    succ: dict[str, list[str]] = {}
    for a, b in sorted(net.connections):
        succ.setdefault(a, []).append(b)
    for _ in range(tries):
        target = int(rng.integers(min_edges, max_edges + 1))
        path = [ids[int(rng.integers(len(ids)))]]
        seen = {net.edges[path[0]].from_node, net.edges[path[0]].to_node}
        while len(path) < target:
            options = [b for b in succ.get(path[-1], []) if net.edges[b].to_node not in seen]
            if not options:
                break
            nxt = options[int(rng.integers(len(options)))]
            path.append(nxt)
            seen.add(net.edges[nxt].to_node)
        if len(path) >= min_edges:
            return path
    raise RuntimeError("could not draw a simple path")


def path_polyline(net: RoadNetwork, path: list[str]) -> list[CartPoint]:
    pts = [net.from_pos(path[0])]
    for eid in path:
        pts.append(net.to_pos(eid))
    return pts


def sample_along(points: list[CartPoint], step: float, start: float | None = None) -> list[CartPoint]:
    """Points every ``step`` meters along a polyline, beginning ``start`` meters in.

    ``start`` defaults to half a step so no sample falls on the first vertex.
    Sampling stops strictly before the polyline's end.
    """
    if start is None:
        start = step / 2.0
    cum = [0.0]
    for a, b in zip(points, points[1:]):
        cum.append(cum[-1] + math.dist(a, b))
    total = cum[-1]
    out = []
    s = start
    k = 0
    while s < total:
        while cum[k + 1] < s:
            k += 1
        a, b = points[k], points[k + 1]
        t = (s - cum[k]) / (cum[k + 1] - cum[k])
        out.append(CartPoint(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
        s += step
    return out


def disk_noise(points: list[CartPoint], rng, max_radius: float) -> list[CartPoint]:
    """Displace each point uniformly inside a disk of ``max_radius``."""
    out = []
    for p in points:
        r = max_radius * math.sqrt(rng.random())
        a = 2.0 * math.pi * rng.random()
        out.append(CartPoint(p[0] + r * math.cos(a), p[1] + r * math.sin(a)))
    return out
