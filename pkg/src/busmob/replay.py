"""Deterministic bus replay on a fixed sampling clock, and the trace CSV format.

Buses are independent: each leaves at its departure time from the start of
its first edge, drives every edge at ``speed_factor * speed_limit``, halts
``dwell_time`` seconds at each of its stops and disappears at the end of its
last edge. Positions are interpolated along the edge chords.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .emitter import MatchedLine, vehicle_id
from .errors import IntegrityError, OrderError, ParseError
from .geo import CartPoint
from .network import RoadNetwork


@dataclass(frozen=True)
class SimConfig:
    sample_interval: float = 3.0
    dwell_time: float = 20.0
    time_window: tuple[float, float] = (0.0, 7200.0)
    speed_factor: float = 1.0

    def __post_init__(self):
        if not (self.sample_interval > 0 and math.isfinite(self.sample_interval)):
            raise ValueError("sample_interval must be positive")
        if not self.dwell_time >= 0:
            raise ValueError("dwell_time must be non-negative")
        start, end = self.time_window
        if not start < end:
            raise ValueError("time window start must precede its end")
        if not 0 < self.speed_factor <= 1:
            raise ValueError("speed_factor must lie in (0, 1]")


@dataclass(frozen=True)
class VehicleState:
    vehicle_id: str
    edge_index: int
    offset: float
    phase: str  # "driving" | "dwelling" | "finished"
    dwell_remaining: float = 0.0
    distance: float = 0.0  # along-route meters from the start


@dataclass
class TraceFrame:
    t: float
    positions: dict[str, CartPoint] = field(default_factory=dict)


def _place_stops(line: MatchedLine) -> list[tuple[int, float]]:
    """Map each stop to a (chain index, offset), keeping the stop order where the chain allows."""
    edges = line.edges
    placed = []
    cursor = (0, 0.0)
    for s in line.stops:
        idx = next(
            (i for i in range(cursor[0], len(edges)) if edges[i] == s.edge_id and (i > cursor[0] or s.offset >= cursor[1])),
            None,
        )
        if idx is None:
            idx = edges.index(s.edge_id)
        else:
            cursor = (idx, s.offset)
        placed.append((idx, s.offset))
    placed.sort()
    return placed


class Schedule:
    """Precomputed (time, distance) breakpoints of one bus run."""

    def __init__(self, net: RoadNetwork, line: MatchedLine, depart: float, vid: str, cfg: SimConfig):
        self.vehicle_id = vid
        self.depart = depart
        self.net = net
        for eid in line.edges:
            if eid not in net.edges:
                raise IntegrityError(f"line {line.line_id!r}: edge {eid!r} is not in the network")
        self.edges = [net.edges[e] for e in line.edges]
        self.cum = [0.0]
        for e in self.edges:
            self.cum.append(self.cum[-1] + e.length)
        stops = _place_stops(line)
        self.knots_t, self.knots_s = self._with_dwells(stops, cfg)
        self.finish = self.knots_t[-1]

    def _with_dwells(self, stops, cfg):
        t, s = self.depart, 0.0
        kt, ks = [t], [s]
        k = 0
        for i, e in enumerate(self.edges):
            v = cfg.speed_factor * e.speed_limit
            marks = []
            while k < len(stops) and stops[k][0] == i:
                marks.append((min(e.length, max(0.0, stops[k][1])), True))
                k += 1
            marks.append((e.length, False))
            for off, is_stop in marks:
                target = self.cum[i] + off
                if target > s:
                    t += (target - s) / v
                    s = target
                    kt.append(t)
                    ks.append(s)
                if is_stop and cfg.dwell_time > 0:
                    t += cfg.dwell_time
                    kt.append(t)
                    ks.append(s)
        return kt, ks

    def distance_at(self, t: float) -> float | None:
        """Along-route distance at time ``t``; None before departure or once finished."""
        if t < self.depart or t >= self.finish:
            return None
        j = bisect.bisect_right(self.knots_t, t) - 1
        t0, t1 = self.knots_t[j], self.knots_t[j + 1]
        s0, s1 = self.knots_s[j], self.knots_s[j + 1]
        if s1 == s0:
            return s0
        return s0 + (s1 - s0) * (t - t0) / (t1 - t0)

    def state_at(self, t: float) -> VehicleState:
        if t >= self.finish:
            return VehicleState(self.vehicle_id, len(self.edges) - 1, self.edges[-1].length, "finished", 0.0, self.cum[-1])
        s = self.distance_at(t)
        if s is None:
            raise ValueError(f"vehicle {self.vehicle_id!r} has not departed at t={t}")
        i = min(bisect.bisect_right(self.cum, s) - 1, len(self.edges) - 1)
        j = bisect.bisect_right(self.knots_t, t) - 1
        dwelling = self.knots_s[j + 1] == self.knots_s[j]
        remaining = self.knots_t[j + 1] - t if dwelling else 0.0
        return VehicleState(self.vehicle_id, i, s - self.cum[i], "dwelling" if dwelling else "driving", remaining, s)

    def position_at(self, t: float) -> CartPoint | None:
        s = self.distance_at(t)
        if s is None:
            return None
        i = min(bisect.bisect_right(self.cum, s) - 1, len(self.edges) - 1)
        e = self.edges[i]
        frac = (s - self.cum[i]) / e.length
        a = self.net.nodes[e.from_node].pos
        b = self.net.nodes[e.to_node].pos
        return CartPoint(a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y))


def schedules(net: RoadNetwork, lines: Sequence[MatchedLine], cfg: SimConfig) -> list[Schedule]:
    out = []
    for ln in sorted(lines, key=lambda l: l.line_id):
        for k, dep in enumerate(ln.departures):
            out.append(Schedule(net, ln, dep, vehicle_id(ln.line_id, k), cfg))
    return out


def frame_times(cfg: SimConfig) -> list[float]:
    start, end = cfg.time_window
    n = math.floor((end - start) / cfg.sample_interval + 1e-9)
    return [start + k * cfg.sample_interval for k in range(n + 1)]


def simulate(net: RoadNetwork, lines: Sequence[MatchedLine], cfg: SimConfig | None = None) -> list[TraceFrame]:
    """Sample every bus position at start, start + dt, ..., end."""
    cfg = cfg or SimConfig()
    runs = schedules(net, lines, cfg)
    runs.sort(key=lambda r: r.vehicle_id)
    frames = []
    for t in frame_times(cfg):
        pos = {}
        for r in runs:
            p = r.position_at(t)
            if p is not None:
                pos[r.vehicle_id] = p
        frames.append(TraceFrame(t, pos))
    return frames


# -- trace CSV -------------------------------------------------------------------

TRACE_HEADER = ["t", "vehicle_id", "x", "y"]


def fmt2(v: float) -> str:
    """Two fractional digits, never a negative zero."""
    out = f"{v:.2f}"
    return "0.00" if out == "-0.00" else out


def write_trace(frames: Iterable[TraceFrame]) -> str:
    """CSV ``t,vehicle_id,x,y`` sorted by (t, vehicle_id); frames without vehicles leave no rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for fr in sorted(frames, key=lambda f: f.t):
        for vid in sorted(fr.positions):
            p = fr.positions[vid]
            w.writerow([fmt2(fr.t), vid, fmt2(p[0]), fmt2(p[1])])
    return buf.getvalue()


def read_trace(document: str) -> list[TraceFrame]:
    rows = csv.reader(io.StringIO(document))
    try:
        header = next(rows)
    except StopIteration:
        raise ParseError("empty trace document", 1) from None
    if [h.strip() for h in header] != TRACE_HEADER:
        raise ParseError(f"expected header {','.join(TRACE_HEADER)}", 1)
    frames: list[TraceFrame] = []
    for n, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", n)
        try:
            t, x, y = float(row[0]), float(row[2]), float(row[3])
        except ValueError:
            raise ParseError("non-numeric field", n) from None
        if not all(map(math.isfinite, (t, x, y))):
            raise ParseError("non-finite field", n)
        vid = row[1]
        if not vid:
            raise ParseError("empty vehicle_id", n)
        if frames and t < frames[-1].t:
            raise OrderError(f"row {n}: t={t} decreases (previous {frames[-1].t})")
        if not frames or t > frames[-1].t:
            frames.append(TraceFrame(t, {}))
        if vid in frames[-1].positions:
            raise ParseError(f"vehicle {vid!r} appears twice at t={t}", n)
        frames[-1].positions[vid] = CartPoint(x, y)
    return frames
