"""Command line: ``busmob match | simulate | analyze | report``.

Exit codes: 0 success, 1 data or processing failure, 2 usage failure.
Every subcommand accepts ``--config scenario.json``; explicit flags win over
the file, the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import contacts, emitter, matcher, network, replay, stats
from .config import DEFAULT_PERIMETERS, DEFAULT_RANGES, ScenarioConfig
from .errors import BusmobError, ParseError
from .geo import CartPoint

log = logging.getLogger("busmob")


class UsageError(Exception):
    pass


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _non_negative(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return v


def _count(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return v


def _clock(text):
    """Seconds, or HH:MM:SS."""
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return matcher.parse_hms(text)
    except ParseError:
        raise argparse.ArgumentTypeError(f"not a time: {text!r}") from None


def _point(text):
    if isinstance(text, (list, tuple)):
        x, y = text
        return CartPoint(float(x), float(y))
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y got {text!r}") from None
    return CartPoint(x, y)


def _pick(cli_value, cfg_value, default):
    if cli_value is not None:
        return cli_value
    if cfg_value is not None:
        return cfg_value
    return default


def _existing(path, what):
    if path is None:
        raise UsageError(f"{what} is required")
    path = Path(path)
    if not path.exists():
        raise UsageError(f"{what} not found: {path}")
    return path


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _out_dir(args, cfg, sub, fallback):
    if args.out is not None:
        return Path(args.out)
    if cfg.output_dir is not None:
        return cfg.output_dir / sub
    return Path(fallback)


# -- match -------------------------------------------------------------------------


def cmd_match(args, cfg: ScenarioConfig) -> int:
    net_path = _existing(_pick(args.network, cfg.network, None), "network")
    line_paths = args.lines or cfg.lines
    if not line_paths:
        raise UsageError("at least one line document is required")
    line_paths = [_existing(p, "line document") for p in line_paths]
    m = cfg.matcher
    mcfg = matcher.MatcherConfig(
        radius=_pick(args.radius, m.get("radius"), 15.0),
        densify_passes=_pick(args.densify_passes, m.get("densify_passes"), 1),
        max_consecutive_gaps=_pick(args.max_gaps, m.get("max_consecutive_gaps"), 5),
        geometry=_pick(args.match_geometry, m.get("geometry"), "chord"),
        stay_margin=_pick(args.stay_margin, m.get("stay_margin"), 5.0),
    )
    out = _out_dir(args, cfg, "match", "match")
    net = network.parse_network(net_path.read_bytes())

    matched: list[emitter.MatchedLine] = []
    errors = []
    seen = {}
    for path in line_paths:
        line_id = None
        try:
            spec = matcher.parse_line_spec(path.read_text(encoding="utf-8"))
            line_id = spec.line_id
            if line_id in seen:
                raise BusmobError(f"line id {line_id!r} also defined in {seen[line_id]}")
            seen[line_id] = str(path)
            route = matcher.match_route(net, spec, net.projection, mcfg)
            stops, unmatched = matcher.match_stops(net, route, spec.stops, net.projection, mcfg)
        except BusmobError as exc:
            errors.append({"file": str(path), "line_id": line_id, "error": type(exc).__name__, "message": str(exc)})
            log.error("%s: %s", path, exc)
            continue
        _write(out / "conference" / f"{line_id}.json", _dump(matcher.conference_document(route, stops, unmatched)))
        ml = emitter.MatchedLine(line_id, route, tuple(stops), spec.departures, tuple(unmatched))
        _write(out / "matched" / f"{line_id}.json", _dump(emitter.matched_line_document(ml)))
        matched.append(ml)
        if unmatched:
            log.warning("%s: %d stop(s) unmatched: %s", line_id, len(unmatched), ", ".join(unmatched))

    matched.sort(key=lambda l: l.line_id)
    _write(out / "routes.rou.xml", emitter.emit_routes(matched))
    _write(out / "stops.add.xml", emitter.emit_stops(matched, net))
    _write(out / "errors.json", _dump(errors))
    print(f"matched {len(matched)} of {len(line_paths)} line(s) -> {out}")
    return 1 if errors else 0


# -- simulate ----------------------------------------------------------------------


def _matched_files(paths) -> list[Path]:
    files = []
    for p in paths:
        p = _existing(p, "matched artifact")
        if p.is_dir():
            if (p / "matched").is_dir():
                p = p / "matched"
            files.extend(sorted(p.glob("*.json")))
        else:
            files.append(p)
    if not files:
        raise UsageError("no matched-line documents found")
    return files


def cmd_simulate(args, cfg: ScenarioConfig) -> int:
    net_path = _existing(_pick(args.network, cfg.network, None), "network")
    sources = args.matched or ([cfg.output_dir / "match"] if cfg.output_dir else None)
    if not sources:
        raise UsageError("matched artifacts are required")
    files = _matched_files(sources)
    s = cfg.simulation
    interval = _pick(args.sample_interval, s.get("sample_interval"), 3.0)
    if not interval > 0:
        raise UsageError("sample interval must be positive")
    net = network.parse_network(net_path.read_bytes())
    lines = [emitter.parse_matched_line(f.read_text(encoding="utf-8")) for f in files]

    window = s.get("time_window") or [None, None]
    start = args.start if args.start is not None else (_clock(window[0]) if window[0] is not None else None)
    end = args.end if args.end is not None else (_clock(window[1]) if window[1] is not None else None)
    if start is None:
        deps = [t for ln in lines for t in ln.departures]
        start = min(deps) if deps else 0.0
    if end is None:
        end = start + 7200.0
    try:
        scfg = replay.SimConfig(
            sample_interval=interval,
            dwell_time=_pick(args.dwell, s.get("dwell_time"), 20.0),
            time_window=(start, end),
            speed_factor=_pick(args.speed_factor, s.get("speed_factor"), 1.0),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    frames = replay.simulate(net, lines, scfg)
    out = Path(args.out) if args.out else (cfg.output_dir / "trace.csv" if cfg.output_dir else Path("trace.csv"))
    _write(out, replay.write_trace(frames))
    active = sum(1 for f in frames if f.positions)
    print(f"{len(frames)} frames ({active} with vehicles) -> {out}")
    return 0


# -- analyze -----------------------------------------------------------------------


def _label(tx_range, perimeter):
    return f"r{tx_range:g}_p{perimeter:g}"


def summary_document(ms: contacts.MetricSet, n_frames: int, bins: int, clip, include_censored: bool) -> dict:
    metrics = {}
    for name in contacts.METRICS:
        vals = ms.samples[name]
        c = clip if name in ("contact_time", "inter_contact_time") else None
        metrics[name] = stats.summarize(vals, bins, c).as_dict() if vals else None
    c = ms.config
    return {
        "config": {
            "tx_range": c.tx_range,
            "perimeter_radius": c.perimeter_radius,
            "reference": [c.reference.x, c.reference.y],
            "arrival_threshold": c.arrival_threshold,
            "include_censored": include_censored,
        },
        "frames": n_frames,
        "censored_intervals": ms.censored,
        "metrics": metrics,
        "travel_times": {v: d for v, (_, d) in ms.travel.durations.items()},
        "not_arrived": list(ms.travel.not_arrived),
    }


def cmd_analyze(args, cfg: ScenarioConfig) -> int:
    trace_path = args.trace or (cfg.output_dir / "trace.csv" if cfg.output_dir else None)
    trace_path = _existing(trace_path, "trace")
    a = cfg.analysis
    ranges = args.range or a.get("ranges") or list(DEFAULT_RANGES)
    perimeters = args.perimeter or a.get("perimeters") or list(DEFAULT_PERIMETERS)
    reference = args.reference if args.reference is not None else _point(a.get("reference", [0.0, 0.0]))
    threshold = _pick(args.arrival_threshold, a.get("arrival_threshold"), 50.0)
    interval = _pick(args.sample_interval, a.get("sample_interval"), None)
    bins = _pick(args.bins, a.get("bins"), 40)
    clip = _pick(args.clip, a.get("clip"), None)
    include = bool(args.include_censored or a.get("include_censored", False))
    out = _out_dir(args, cfg, "analysis", "analysis")

    frames = replay.read_trace(trace_path.read_text(encoding="utf-8"))
    if interval is None and len(frames) < 2:
        interval = 3.0  # nothing to infer the step from
    for r in ranges:
        for p in perimeters:
            acfg = contacts.AnalysisConfig(float(r), float(p), reference, threshold)
            ms = contacts.analyze(frames, acfg, interval, include)
            d = out / _label(acfg.tx_range, acfg.perimeter_radius)
            _write(d / "metrics.csv", contacts.metrics_csv(ms.rows))
            _write(d / "summary.json", _dump(summary_document(ms, len(frames), bins, clip, include)))
    print(f"{len(ranges) * len(perimeters)} configuration(s), {len(frames)} frames -> {out}")
    return 0


# -- report ------------------------------------------------------------------------


def _summary_files(paths) -> list[Path]:
    files = []
    for p in paths:
        p = _existing(p, "summary")
        files.extend(sorted(p.rglob("summary.json")) if p.is_dir() else [p])
    if not files:
        raise UsageError("no summary documents found")
    return files


def _load_real_times(path: Path) -> dict[str, float]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return {str(t["vehicle_id"]): float(t["duration"]) for t in data["trips"]}
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad real travel-time document ({exc})") from None


def cmd_report(args, cfg: ScenarioConfig) -> int:
    sources = args.summaries or ([cfg.output_dir / "analysis"] if cfg.output_dir else None)
    if not sources:
        raise UsageError("at least one summary is required")
    files = _summary_files(sources)
    real_path = args.real_times or cfg.real_times
    real = _load_real_times(_existing(real_path, "real travel-time file")) if real_path else None
    tolerance = args.tolerance
    out = _out_dir(args, cfg, "report", "report")

    configs: dict[str, dict] = {}
    origin: dict[str, Path] = {}
    for f in files:
        try:
            doc = json.loads(f.read_text(encoding="utf-8"))
            c = doc["config"]
            label = _label(float(c["tx_range"]), float(c["perimeter_radius"]))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{f}: {exc.msg}", exc.lineno) from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{f}: not a summary document ({exc})") from None
        if label in configs:
            if configs[label] != doc:
                raise BusmobError(f"conflicting summaries for {label}: {origin[label]} and {f}")
            continue
        configs[label] = doc
        origin[label] = f

    report = {"configurations": {}, "metrics": []}
    names = set()
    for label in sorted(configs):
        doc = configs[label]
        entry = {"config": doc["config"], "frames": doc.get("frames"), "metrics": {}}
        for name, summ in sorted(doc["metrics"].items()):
            if summ is None:
                continue
            s = stats.StatSummary.from_dict(summ)
            names.add(name)
            brief = s.as_dict()
            brief.pop("density")
            entry["metrics"][name] = brief
            _write(out / "density" / label / f"{name}.csv", stats.density_csv(s))
        if real is not None:
            sim = doc.get("travel_times", {})
            paired = sorted(set(sim) & set(real))
            if paired:
                rep = contacts.compatibility_report([real[v] for v in paired], [sim[v] for v in paired], tolerance)
                entry["compatibility"] = rep.as_dict() | {"tolerance": tolerance}
            else:
                entry["compatibility"] = {"pairs": 0, "within": 0, "percentage": None, "tolerance": tolerance}
        report["configurations"][label] = entry
    report["metrics"] = sorted(names)
    _write(out / "report.json", _dump(report))
    print(f"report over {len(configs)} configuration(s) -> {out}")
    return 0


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="busmob", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="scenario JSON supplying defaults")
        sp.add_argument("--out", help="output file or directory")

    m = sub.add_parser("match", help="map-match lines and emit route/stop documents")
    common(m)
    m.add_argument("--network", help="road network document")
    m.add_argument("lines", nargs="*", help="line documents (JSON)")
    m.add_argument("--radius", type=_positive, help="candidate search radius in meters (default 15)")
    m.add_argument("--densify-passes", type=_count, help="midpoint densification passes (default 1)")
    m.add_argument("--max-gaps", type=_count, help="tolerated consecutive unmatched points (default 5)")
    m.add_argument("--stay-margin", type=_non_negative, help="meters within which the current edge is kept (default 5)")
    m.add_argument("--match-geometry", choices=network.GEOMETRIES, help="edge geometry for distances (default chord)")

    s = sub.add_parser("simulate", help="replay matched lines into a sampled trace")
    common(s)
    s.add_argument("--network", help="road network document")
    s.add_argument("matched", nargs="*", help="match output directory or matched-line JSON files")
    s.add_argument("--sample-interval", type=_positive, help="seconds between frames (default 3)")
    s.add_argument("--dwell", type=_non_negative, help="seconds stopped at each bus stop (default 20)")
    s.add_argument("--speed-factor", type=_positive, help="fraction of the speed limit driven (default 1.0)")
    s.add_argument("--start", type=_clock, help="window start, seconds or HH:MM:SS (default first departure)")
    s.add_argument("--end", type=_clock, help="window end (default start + 2 h)")

    a = sub.add_parser("analyze", help="compute mobility metrics from a trace")
    common(a)
    a.add_argument("trace", nargs="?", help="trace CSV")
    a.add_argument("--range", type=_positive, nargs="+", help="transmission ranges in meters (default 150 300)")
    a.add_argument("--perimeter", type=_positive, nargs="+", help="perimeter radii in meters (default 2000 4000)")
    a.add_argument("--reference", type=_point, help="terminal position X,Y in meters (default 0,0)")
    a.add_argument("--arrival-threshold", type=_positive, help="arrival distance in meters (default 50)")
    a.add_argument("--sample-interval", type=_positive, help="trace sampling step (default: inferred)")
    a.add_argument("--bins", type=int, help="density histogram bins (default 40)")
    a.add_argument("--clip", type=_positive, help="upper bound of contact-time density (default none)")
    a.add_argument("--include-censored", action="store_true", help="keep window-truncated intervals in the statistics")

    r = sub.add_parser("report", help="consolidate summaries into one report")
    common(r)
    r.add_argument("summaries", nargs="*", help="summary.json files or analysis directories")
    r.add_argument("--real-times", help="observed travel times (JSON) for the compatibility section")
    r.add_argument("--tolerance", type=_non_negative, default=0.2, help="relative tolerance for compatibility (default 0.2)")
    return p


COMMANDS = {"match": cmd_match, "simulate": cmd_simulate, "analyze": cmd_analyze, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors (and --help) this way
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = ScenarioConfig.load(_existing(args.config, "config")) if args.config else ScenarioConfig()
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"busmob {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except BusmobError as exc:
        print(f"busmob {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"busmob {args.command}: error: {exc}", file=sys.stderr)
        return 1


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
