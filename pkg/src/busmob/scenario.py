"""The bundled synthetic two-terminal city.

Everything here is a pure function of the constants below; no random numbers
are drawn. ``scripts/make_scenario.py`` writes the result to
``busmob/data/scenario``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geo import CartPoint, GeoPoint, to_geographic
from .matcher import LineSpec
from .network import RoadNetwork
from .synth import edge_id, grid_network, node_id, sample_along

ORIGIN = GeoPoint(-23.5, -46.6)
GRID = 17
SPACING = 250.0
SPEED = 13.89
GPS_STEP = 30.0
NOISE_AMPLITUDE = 3.0
STOP_EVERY = 500.0
START = 16 * 3600
END = 18 * 3600

# junction indices; (8, 8) is the grid centre at planar (0, 0)
TERMINALS = {"central": (8, 10), "south": (8, 2)}

# corridor -> (waypoints towards a terminal, first departure offset s, headway s, departures)
CORRIDORS = {
    "L01": ([(0, 16), (0, 10), (8, 10)], 0, 600, 12),
    "L02": ([(16, 16), (8, 16), (8, 10)], 120, 600, 12),
    "L03": ([(0, 4), (4, 4), (4, 10), (8, 10)], 300, 900, 8),
    "L04": ([(16, 6), (12, 6), (12, 10), (8, 10)], 420, 900, 8),
    "L05": ([(0, 0), (0, 2), (8, 2)], 60, 600, 12),
    "L06": ([(16, 0), (16, 2), (8, 2)], 240, 600, 12),
    "L07": ([(8, 2), (6, 2), (6, 10), (8, 10)], 180, 900, 8),
}


def _lines():
    out = {}
    for cid, (wps, first, headway, count) in CORRIDORS.items():
        out[cid] = (wps, first, headway, count)
        # the return line runs the same streets the other way, half a headway later
        out[cid + "R"] = (wps[::-1], first + headway // 2, headway, count)
    return out


# line id -> (waypoints, first departure offset s, headway s, departures)
LINES = _lines()


def city_network() -> RoadNetwork:
    return grid_network(GRID, GRID, SPACING, SPEED, ORIGIN)


def terminal_point(name: str) -> CartPoint:
    i, j = TERMINALS[name]
    c = (GRID - 1) * SPACING / 2.0
    return CartPoint(i * SPACING - c, j * SPACING - c)


def junction_path(waypoints) -> list[tuple[int, int]]:
    """Axis-aligned walk through the waypoints (each leg is straight)."""
    out = [waypoints[0]]
    for a, b in zip(waypoints, waypoints[1:]):
        if a[0] != b[0] and a[1] != b[1]:
            raise ValueError(f"leg {a}->{b} is not axis-aligned")
        di = (b[0] > a[0]) - (b[0] < a[0])
        dj = (b[1] > a[1]) - (b[1] < a[1])
        cur = a
        while cur != b:
            cur = (cur[0] + di, cur[1] + dj)
            out.append(cur)
    return out


def line_edges(line_id: str) -> list[str]:
    js = junction_path(LINES[line_id][0])
    return [edge_id(a, b) for a, b in zip(js, js[1:])]


def _wobble(k: int, phase: float) -> tuple[float, float]:
    # bounded, deterministic stand-in for GPS error (|offset| <= amplitude * sqrt(2))
    return (
        NOISE_AMPLITUDE * math.sin(1.7 * k + phase),
        NOISE_AMPLITUDE * math.cos(2.3 * k + 0.5 * phase),
    )


def line_spec(net: RoadNetwork, line_id: str) -> LineSpec:
    waypoints, first, headway, count = LINES[line_id]
    js = junction_path(waypoints)
    poly = [net.nodes[node_id(*j)].pos for j in js]
    phase = sum(map(ord, line_id)) / 10.0
    gps = []
    for k, p in enumerate(sample_along(poly, GPS_STEP)):
        dx, dy = _wobble(k, phase)
        gps.append(to_geographic(CartPoint(p.x + dx, p.y + dy), net.projection))
    stops = []
    for k, p in enumerate(sample_along(poly, STOP_EVERY, start=SPACING / 2.0)):
        dx, dy = _wobble(k + 100, phase)
        stops.append((f"S{k + 1:02d}", to_geographic(CartPoint(p.x + dx / 2, p.y + dy / 2), net.projection)))
    departures = tuple(float(START + first + i * headway) for i in range(count))
    return LineSpec(line_id, tuple(gps), tuple(stops), departures)


@dataclass(frozen=True)
class City:
    network: RoadNetwork
    lines: tuple[LineSpec, ...]
    expected_edges: dict[str, list[str]]


def build_city() -> City:
    net = city_network()
    lines = tuple(line_spec(net, lid) for lid in sorted(LINES))
    return City(net, lines, {lid: line_edges(lid) for lid in sorted(LINES)})
