"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math
import time

import numpy as np
import pytest

from busmob import SCENARIO_DIR
from busmob.cli import main
from busmob.config import ScenarioConfig
from busmob.contacts import CONTACT, adjacency, compatibility, contact_intervals
from busmob.emitter import MatchedLine, emit_routes, parse_routes
from busmob.errors import BrokenRouteError
from busmob.geo import CartPoint, densify
from busmob.matcher import MatchedRoute, MatcherConfig, match_points, match_route, match_stops, parse_line_spec
from busmob.network import RoadNetwork, candidate_edges, candidate_edges_brute, connection_allowed, parse_network
from busmob.replay import SimConfig, TraceFrame, read_trace, simulate, write_trace
from busmob.stats import summarize
from busmob.synth import disk_noise, grid_network, path_polyline, random_simple_path, sample_along

import three_bus

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def grid():
    # 20 x 20 blocks: 21 x 21 junctions, 1680 directed edges
    return grid_network(21, 21, 100.0)


@pytest.fixture(scope="module")
def grid_sweep(grid):
    rng = np.random.default_rng(20240601)
    cfg = MatcherConfig(radius=15.0)
    t0 = time.perf_counter()
    results = []
    for _ in range(100):
        path = random_simple_path(grid, rng, 3, 30)
        pts = disk_noise(sample_along(path_polyline(grid, path), 20.0), rng, 5.0)
        results.append((path, match_points(grid, pts, cfg)))
    return results, time.perf_counter() - t0


def _scenario():
    cfg = ScenarioConfig.load(SCENARIO_DIR / "scenario.json")
    net = parse_network(cfg.network.read_bytes())
    mcfg = MatcherConfig(**{k: v for k, v in cfg.matcher.items() if k != "geometry"})
    lines = []
    for p in cfg.lines:
        spec = parse_line_spec(p.read_text())
        route = match_route(net, spec, net.projection, mcfg)
        stops, _ = match_stops(net, route, spec.stops, net.projection, mcfg)
        lines.append(MatchedLine(spec.line_id, route, tuple(stops), spec.departures))
    sim = SimConfig(sample_interval=3.0, dwell_time=20.0, time_window=(16 * 3600.0, 18 * 3600.0))
    return net, lines, simulate(net, lines, sim)


def test_three_bus_oracle(report):
    t0 = time.perf_counter()
    ivs = contact_intervals(three_bus.frames(), 150.0, 3.0)
    dt = time.perf_counter() - t0
    got = {(i.vehicle_id, i.kind, i.start): i.duration for i in ivs}
    a = got.get(("A", "contact", 0.0))
    b = got.get(("B", "contact", 0.0))
    bi = got.get(("B", "inter-contact", 6.0))
    ok = (a, b, bi) == (9.0, 6.0, 3.0) and dt < 1.0
    report("three-bus contact oracle", ok, f"contact(A)={a} contact(B)={b} inter-contact(B)={bi} in {dt * 1e3:.1f} ms")


def test_matching_recovery(report, grid, grid_sweep):
    results, dt = grid_sweep
    exact = sum(1 for path, route in results if list(route.edges) == path)
    ok = exact == len(results) == 100 and dt < 10.0
    report("matching recovery", ok, f"{exact}/{len(results)} exact chains on {len(grid.edges)} edges in {dt:.2f} s")


def test_logical_interconnection_rejection(report, grid):
    rng = np.random.default_rng(7)
    cfg = MatcherConfig()
    path = random_simple_path(grid, rng, 6, 12)
    pts = disk_noise(sample_along(path_polyline(grid, path), 20.0), rng, 3.0)
    assert list(match_points(grid, pts, cfg).edges) == path
    cut = (path[2], path[3])
    broken = RoadNetwork(grid.nodes, grid.edges, grid.connections - {cut}, grid.projection)
    try:
        match_points(broken, pts, cfg)
        outcome = "matched"
    except BrokenRouteError:
        outcome = "broken-route"
    # the physical-only oracle allows every pair that meets at a node
    physical = frozenset(
        (a.id, b.id) for a in grid.edges.values() for b in grid.edges.values() if a.to_node == b.from_node and a.id != b.id
    )
    oracle = RoadNetwork(grid.nodes, grid.edges, physical, grid.projection)
    oracle_ok = list(match_points(oracle, pts, cfg).edges) == path
    ok = outcome == "broken-route" and oracle_ok
    report("logical-interconnection rejection", ok, f"without {cut}: {outcome}; physical-only oracle recovers path: {oracle_ok}")


def test_chain_soundness(report, grid, grid_sweep):
    results, _ = grid_sweep
    bad = 0
    pairs = 0
    for _, route in results:
        for a, b in zip(route.edges, route.edges[1:]):
            pairs += 1
            if grid.edges[a].to_node != grid.edges[b].from_node or not connection_allowed(grid, a, b):
                bad += 1
    report("chain soundness", bad == 0, f"{bad} violations over {pairs} consecutive pairs")


def test_densification(report):
    rng = np.random.default_rng(11)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(2, 501))
        pts = [CartPoint(*p) for p in rng.uniform(-1e4, 1e4, size=(n, 2))]
        out = densify(pts)
        good = len(out) == 2 * n - 1 and out[0] == pts[0] and out[-1] == pts[-1]
        good = good and all(out[2 * i] == pts[i] for i in range(n))
        good = good and all(
            out[2 * i + 1] == ((pts[i][0] + pts[i + 1][0]) / 2, (pts[i][1] + pts[i + 1][1]) / 2) for i in range(n - 1)
        )
        bad += not good
    report("densification", bad == 0, f"{bad}/1000 cases violate 2n-1 / endpoints / midpoints")


def test_candidate_oracle(report, grid):
    rng = np.random.default_rng(13)
    half = 10 * 100.0 + 50
    bad = 0
    hits = 0
    for _ in range(1000):
        p = CartPoint(*rng.uniform(-half, half, 2))
        got = candidate_edges(grid, p, 15.0)
        hits += bool(got)
        bad += got != candidate_edges_brute(grid, p, 15.0)
    report("candidate-query oracle", bad == 0, f"{bad}/1000 mismatches ({hits} queries with candidates)")


def _random_trace(rng):
    nf = int(rng.integers(1, 201))
    nv = int(rng.integers(1, 21))
    frames = [TraceFrame(3.0 * k, {}) for k in range(nf)]
    for v in range(nv):
        a = int(rng.integers(nf))
        b = int(rng.integers(a, nf)) + 1
        p = rng.uniform(-500, 500, 2)
        for k in range(a, b):
            p = p + rng.normal(0, 30, 2)
            frames[k].positions[f"v{v}"] = CartPoint(float(p[0]), float(p[1]))
    return frames


def test_contact_partition(report):
    rng = np.random.default_rng(17)
    violations = 0
    checked = 0
    for _ in range(500):
        frames = _random_trace(rng)
        by_v = {}
        for iv in contact_intervals(frames, 150.0, 3.0):
            by_v.setdefault(iv.vehicle_id, []).append(iv)
        for v, seq in by_v.items():
            checked += 1
            present = [f.t for f in frames if v in f.positions]
            ok = seq[0].start == present[0] and seq[-1].end == present[-1] + 3.0
            ok = ok and all(x.end == y.start and x.kind != y.kind for x, y in zip(seq, seq[1:]))
            ok = ok and all(iv.end > iv.start for iv in seq)
            violations += not ok
    report("contact-interval partition", violations == 0, f"{violations} violations over {checked} vehicle histories in 500 traces")


def test_range_monotonicity(report):
    _, _, frames = _scenario()
    not_subset = sum(1 for fr in frames if not adjacency(fr, 150.0).edge_set() <= adjacency(fr, 300.0).edge_set())

    def in_contact(r):
        tot = {}
        for iv in contact_intervals(frames, r, 3.0):
            if iv.kind == CONTACT:
                tot[iv.vehicle_id] = tot.get(iv.vehicle_id, 0.0) + iv.duration
        return tot

    small, big = in_contact(150.0), in_contact(300.0)
    decreasing = sum(1 for v, d in small.items() if big.get(v, 0.0) < d)
    ok = not_subset == 0 and decreasing == 0
    report(
        "range monotonicity",
        ok,
        f"{not_subset}/{len(frames)} frames not nested; {decreasing}/{len(small)} vehicles lose contact time; "
        f"total contact {sum(small.values()):.0f} s -> {sum(big.values()):.0f} s",
    )


def test_quartile_oracle(report):
    rng = np.random.default_rng(19)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 2001))
        xs = (rng.normal(0, 1, n) * 10 ** rng.uniform(-3, 4)).tolist()
        s = summarize(xs)
        srt = sorted(xs)
        for got, q in ((s.q1, 0.25), (s.median, 0.5), (s.q3, 0.75)):
            pos = q * (n - 1)
            lo = math.floor(pos)
            hi = min(lo + 1, n - 1)
            want = srt[lo] + (srt[hi] - srt[lo]) * (pos - lo)
            worst = max(worst, abs(got - want))
    report("quartile oracle", worst <= 1e-9, f"max |error| {worst:.3g} over 1000 sample sets")


def test_round_trips(report):
    rng = np.random.default_rng(23)
    route_bad = trace_bad = 0
    for _ in range(300):
        lines = []
        for k in range(int(rng.integers(0, 6))):
            edges = tuple(f"e{int(x)}" for x in rng.integers(0, 1000, int(rng.integers(1, 10))))
            deps = tuple(float(x) / 100 for x in np.unique(rng.integers(0, 10**7, int(rng.integers(0, 8)))))
            lines.append(MatchedLine(f"L{k}", MatchedRoute(f"L{k}", edges), (), deps))
        back = parse_routes(emit_routes(lines))
        route_bad += [(l.line_id, l.edges, l.departures) for l in back] != [
            (l.line_id, l.edges, l.departures) for l in lines
        ]
        frames = []
        for t in np.unique(rng.integers(0, 10**6, int(rng.integers(0, 20)))):
            ids = [f"bus{int(i)}" for i in np.unique(rng.integers(0, 50, int(rng.integers(1, 8))))]
            frames.append(TraceFrame(float(t) / 100, {v: CartPoint(*(np.round(rng.uniform(-1e5, 1e5, 2), 2))) for v in ids}))
        back_frames = read_trace(write_trace(frames))
        trace_bad += [(f.t, f.positions) for f in back_frames] != [(f.t, f.positions) for f in frames]
    ok = route_bad == 0 and trace_bad == 0
    report("round trips", ok, f"route documents {route_bad}/300 and traces {trace_bad}/300 differ after a round trip")


def test_bundled_scenario_shape(report, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = str(SCENARIO_DIR / "scenario.json")
    t0 = time.perf_counter()
    codes = [main([cmd, "--config", cfg]) for cmd in ("match", "simulate", "analyze", "report")]
    dt = time.perf_counter() - t0
    out = tmp_path / "busmob-out"
    matched = [json.loads(p.read_text()) for p in sorted((out / "match" / "matched").glob("*.json"))]
    buses = sum(len(m["departures"]) for m in matched)
    frames = read_trace((out / "trace.csv").read_text())
    window = frames[-1].t - frames[0].t if frames else 0.0
    summ = json.loads((out / "analysis" / "r150_p2000" / "summary.json").read_text())
    c = summ["metrics"]["contact_time"]
    ic = summ["metrics"]["inter_contact_time"]
    ratio = ic["mean"] / c["mean"]
    ok = (
        codes == [0, 0, 0, 0]
        and len(matched) >= 6
        and buses >= 20
        and window >= 7200 - 3 * 2
        and ratio > 1
        and dt < 60
    )
    report(
        "bundled-scenario shape",
        ok,
        f"{len(matched)} lines, {buses} buses, {window / 3600:.2f} h; at 150 m mean contact {c['mean']:.1f} s "
        f"(n={c['n']}), mean inter-contact {ic['mean']:.1f} s (n={ic['n']}), ratio {ratio:.2f}; {dt:.1f} s end-to-end",
    )


def test_compatibility_metric(report):
    rng = np.random.default_rng(29)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 200))
        k = int(rng.integers(0, n + 1))
        real = rng.uniform(30, 3600, n)
        inside = real * (1 + rng.uniform(-0.19, 0.19, n))
        outside = real * (1 + rng.choice([-1, 1], n) * rng.uniform(0.21, 0.9, n))
        sim = np.concatenate([inside[:k], outside[k:]])
        bad += compatibility(real.tolist(), sim.tolist()) != 100.0 * k / n
        bad += compatibility(real.tolist(), real.tolist()) != 100.0
    report("compatibility metric", bad == 0, f"{bad} inexact percentages over 1000 random (n, k) cases")
