"""Write the bundled synthetic city to src/busmob/data/scenario.

Produces the network, one JSON document per line, the scenario config, the
expected edge chains (used by the tests) and a set of "observed" travel times
for the compatibility report. Re-running yields byte-identical files.
"""

import json
import math
import sys
from pathlib import Path

from busmob import SCENARIO_DIR
from busmob.contacts import AnalysisConfig, travel_times
from busmob.emitter import MatchedLine
from busmob.matcher import line_spec_document, match_route, match_stops
from busmob.network import write_network
from busmob.replay import SimConfig, simulate
from busmob.scenario import END, START, build_city, terminal_point


def dump(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def main(out=SCENARIO_DIR):
    out = Path(out)
    city = build_city()
    (out / "lines").mkdir(parents=True, exist_ok=True)
    (out / "network.net.xml").write_text(write_network(city.network))
    for ln in city.lines:
        dump(out / "lines" / f"{ln.line_id}.json", line_spec_document(ln))
    dump(out / "expected_routes.json", city.expected_edges)

    ref = terminal_point("central")
    scenario = {
        "network": "network.net.xml",
        "lines": [f"lines/{ln.line_id}.json" for ln in city.lines],
        "output_dir": "busmob-out",
        "real_times": "observed_travel_times.json",
        "matcher": {"radius": 15.0, "densify_passes": 1, "max_consecutive_gaps": 5},
        "simulation": {
            "sample_interval": 3.0,
            "dwell_time": 20.0,
            "speed_factor": 1.0,
            "time_window": ["16:00:00", "18:00:00"],
        },
        "analysis": {
            "ranges": [150.0, 300.0],
            "perimeters": [2000.0, 4000.0],
            "reference": [ref.x, ref.y],
            "arrival_threshold": 50.0,
            "sample_interval": 3.0,
        },
    }
    dump(out / "scenario.json", scenario)

    # "observed" durations: the replay's own travel times stretched by a fixed
    # pattern, roughly one trip in ten falling outside a 20 % band
    matched = []
    for ln in city.lines:
        r = match_route(city.network, ln)
        st, un = match_stops(city.network, r, ln.stops)
        matched.append(MatchedLine(ln.line_id, r, tuple(st), ln.departures, tuple(un)))
    frames = simulate(city.network, matched, SimConfig(time_window=(START, END)))
    tt = travel_times(frames, AnalysisConfig(perimeter_radius=2000.0, reference=ref))
    trips = []
    for k, (vid, (_, d)) in enumerate(sorted(tt.durations.items())):
        factor = 1.0 + 0.3 * math.sin(0.9 * k) ** 3
        trips.append({"vehicle_id": vid, "duration": round(d * factor, 2)})
    dump(out / "observed_travel_times.json", {"trips": trips})
    print(f"wrote {len(city.lines)} lines, {len(city.network.edges)} edges -> {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
