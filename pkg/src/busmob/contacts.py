"""Mobility metrics over sampled traces.

Two vehicles are in contact at a sampling instant when their distance is at
most the transmission range. From that relation come per-frame counts of
connected vehicles, per-vehicle degrees, and contact / inter-contact
intervals; the remaining metrics relate vehicles to a reference terminal.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import GridError, PairingError
from .geo import CartPoint
from .replay import TraceFrame, fmt2

CONTACT = "contact"
INTER_CONTACT = "inter-contact"


@dataclass(frozen=True)
class AnalysisConfig:
    tx_range: float = 150.0
    perimeter_radius: float = 2000.0
    reference: CartPoint = CartPoint(0.0, 0.0)
    arrival_threshold: float = 50.0

    def __post_init__(self):
        for name in ("tx_range", "perimeter_radius", "arrival_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ContactInterval:
    vehicle_id: str
    kind: str
    start: float
    end: float
    censored: bool = False

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class FrameGraph:
    t: float
    adjacency: dict[str, frozenset[str]]

    def degree(self, vid: str) -> int:
        return len(self.adjacency[vid])

    def edge_set(self) -> set[tuple[str, str]]:
        return {(a, b) for a, nbrs in self.adjacency.items() for b in nbrs if a < b}


def adjacency(frame: TraceFrame, tx_range: float) -> FrameGraph:
    """Undirected contact graph of one frame; distance <= tx_range is an edge."""
    ids = sorted(frame.positions)
    if len(ids) < 2:
        return FrameGraph(frame.t, {v: frozenset() for v in ids})
    xy = np.array([frame.positions[v] for v in ids], dtype=float)
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    close = d <= tx_range
    np.fill_diagonal(close, False)
    return FrameGraph(
        frame.t, {v: frozenset(ids[j] for j in np.flatnonzero(close[i])) for i, v in enumerate(ids)}
    )


def total_connected(frames: Sequence[TraceFrame], tx_range: float) -> list[tuple[float, int]]:
    """Per frame, how many vehicles have at least one neighbour."""
    out = []
    for fr in frames:
        g = adjacency(fr, tx_range)
        out.append((fr.t, sum(1 for nb in g.adjacency.values() if nb)))
    return out


def connectivity_degrees(frames: Sequence[TraceFrame], tx_range: float) -> list[tuple[float, str, int]]:
    """(t, vehicle, degree) for every vehicle with degree >= 1 in every frame."""
    out = []
    for fr in frames:
        g = adjacency(fr, tx_range)
        out.extend((fr.t, v, len(g.adjacency[v])) for v in sorted(g.adjacency) if g.adjacency[v])
    return out


def sampling_grid(frames: Sequence[TraceFrame], interval: float | None = None) -> tuple[float, list[int]]:
    """Return the sampling step and each frame's integer slot on the grid.

    The step is ``interval`` when given, else the smallest gap between frames.
    Gaps that are not whole multiples of the step raise GridError.
    """
    times = [fr.t for fr in frames]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise GridError("frame times must be strictly increasing")
    if interval is None:
        if len(times) < 2:
            raise GridError("cannot infer the sampling interval from fewer than two frames")
        interval = min(b - a for a, b in zip(times, times[1:]))
    if not interval > 0:
        raise GridError("sampling interval must be positive")
    slots = []
    for t in times:
        k = (t - times[0]) / interval
        r = round(k)
        if abs(k - r) > 1e-6:
            raise GridError(f"frame at t={t} is off the {interval} s sampling grid")
        slots.append(int(r))
    return interval, slots


def contact_intervals(
    frames: Sequence[TraceFrame], tx_range: float, interval: float | None = None
) -> list[ContactInterval]:
    """Maximal connected / disconnected runs per vehicle.

    A run is closed by the first sample in the other state, so a contact seen at
    t1..t3 and lost at t4 lasts t4 - t1. A run with no closing sample (the
    vehicle's last observation) ends one sampling step after its last sample.

    Runs cut by the observation window (starting at the first frame or
    reaching the last one) are flagged censored. So are inter-contact runs
    that open at a vehicle's first appearance or close at its disappearance:
    they lack the interruption or the re-establishment. Vehicles never in
    contact produce no intervals.
    """
    if not frames:
        return []
    step, slots = sampling_grid(frames, interval)
    t0 = frames[0].t
    last_slot = slots[-1]
    states: dict[str, list[tuple[int, bool]]] = {}
    for fr, k in zip(frames, slots):
        g = adjacency(fr, tx_range)
        for v, nbrs in g.adjacency.items():
            states.setdefault(v, []).append((k, bool(nbrs)))

    def at(k):
        return t0 + k * step

    out = []
    for v in sorted(states):
        seq = states[v]
        # split into contiguous presence segments
        segments, cur = [], [seq[0]]
        for item in seq[1:]:
            if item[0] == cur[-1][0] + 1:
                cur.append(item)
            else:
                segments.append(cur)
                cur = [item]
        segments.append(cur)
        for seg in segments:
            if not any(s for _, s in seg):
                continue
            i = 0
            while i < len(seg):
                j = i
                while j + 1 < len(seg) and seg[j + 1][1] == seg[i][1]:
                    j += 1
                connected = seg[i][1]
                first, last = i == 0, j == len(seg) - 1
                censored = (first and seg[i][0] == 0) or (last and seg[j][0] == last_slot)
                if not connected and (first or last):
                    censored = True
                end = at(seg[j][0]) + step if last else at(seg[j + 1][0])
                out.append(ContactInterval(v, CONTACT if connected else INTER_CONTACT, at(seg[i][0]), end, censored))
                i = j + 1
    return out


def _dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def vehicles_in_perimeter(frames: Sequence[TraceFrame], cfg: AnalysisConfig) -> list[tuple[float, int]]:
    out = []
    for fr in frames:
        out.append((fr.t, sum(1 for p in fr.positions.values() if _dist(p, cfg.reference) <= cfg.perimeter_radius)))
    return out


@dataclass(frozen=True)
class TravelTimes:
    durations: dict[str, tuple[float, float]]  # vehicle -> (perimeter entry time, duration)
    not_arrived: tuple[str, ...]


def travel_times(frames: Sequence[TraceFrame], cfg: AnalysisConfig) -> TravelTimes:
    """Time from first entering the perimeter to first coming within the arrival threshold."""
    entered: dict[str, float] = {}
    arrived: dict[str, float] = {}
    for fr in frames:
        for v, p in fr.positions.items():
            if v in arrived:
                continue
            d = _dist(p, cfg.reference)
            if v not in entered and d <= cfg.perimeter_radius:
                entered[v] = fr.t
            if v in entered and d <= cfg.arrival_threshold:
                arrived[v] = fr.t
    durations = {v: (entered[v], arrived[v] - entered[v]) for v in sorted(arrived)}
    return TravelTimes(durations, tuple(sorted(set(entered) - set(arrived))))


@dataclass(frozen=True)
class CompatibilityReport:
    pairs: int
    within: int
    percentage: float

    def as_dict(self) -> dict:
        return {"pairs": self.pairs, "within": self.within, "percentage": self.percentage}


def compatibility_report(real: Sequence[float], simulated: Sequence[float], tolerance: float = 0.2) -> CompatibilityReport:
    if len(real) != len(simulated):
        raise PairingError(f"{len(real)} real vs {len(simulated)} simulated durations")
    if not real:
        raise PairingError("no duration pairs")
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    within = sum(1 for r, s in zip(real, simulated) if abs(s - r) <= tolerance * r)
    return CompatibilityReport(len(real), within, 100.0 * within / len(real))


def compatibility(real: Sequence[float], simulated: Sequence[float], tolerance: float = 0.2) -> float:
    """Percentage of trips whose simulated duration is within ``tolerance`` of the real one."""
    return compatibility_report(real, simulated, tolerance).percentage


# -- metric tables -----------------------------------------------------------------

METRIC_HEADER = ["metric", "vehicle_id", "t_or_start", "value"]

METRICS = (
    "travel_time",
    "vehicles_in_perimeter",
    "total_connected",
    "connectivity",
    "contact_time",
    "inter_contact_time",
)


@dataclass
class MetricSet:
    """Every metric of one (range, perimeter) configuration."""

    config: AnalysisConfig
    rows: list[tuple[str, str, float, float]]
    samples: dict[str, list[float]]
    travel: TravelTimes
    censored: int


def analyze(
    frames: Sequence[TraceFrame],
    cfg: AnalysisConfig,
    interval: float | None = None,
    include_censored: bool = False,
) -> MetricSet:
    """Compute all metrics. Censored intervals are tabulated under ``*_censored``
    metric names and kept out of the samples unless ``include_censored``."""
    rows: list[tuple[str, str, float, float]] = []
    samples: dict[str, list[float]] = {m: [] for m in METRICS}

    tt = travel_times(frames, cfg)
    for v, (t_in, d) in tt.durations.items():
        rows.append(("travel_time", v, t_in, d))
        samples["travel_time"].append(d)
    for t, n in vehicles_in_perimeter(frames, cfg):
        rows.append(("vehicles_in_perimeter", "", t, n))
        samples["vehicles_in_perimeter"].append(n)
    for t, n in total_connected(frames, cfg.tx_range):
        rows.append(("total_connected", "", t, n))
        samples["total_connected"].append(n)
    for t, v, deg in connectivity_degrees(frames, cfg.tx_range):
        rows.append(("connectivity", v, t, deg))
        samples["connectivity"].append(deg)
    censored = 0
    for iv in contact_intervals(frames, cfg.tx_range, interval) if frames else []:
        name = "contact_time" if iv.kind == CONTACT else "inter_contact_time"
        if iv.censored:
            censored += 1
            rows.append((name + "_censored", iv.vehicle_id, iv.start, iv.duration))
            if not include_censored:
                continue
        else:
            rows.append((name, iv.vehicle_id, iv.start, iv.duration))
        samples[name].append(iv.duration)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return MetricSet(cfg, rows, samples, tt, censored)


def metrics_csv(rows: Iterable[tuple[str, str, float, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_HEADER)
    for metric, vid, t, value in rows:
        w.writerow([metric, vid, fmt2(t), fmt2(value)])
    return buf.getvalue()
