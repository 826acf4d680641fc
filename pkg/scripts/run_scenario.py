"""Run the full pipeline on the bundled city and print the headline numbers.

    python3 scripts/run_scenario.py [--out DIR]
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

from busmob import SCENARIO_DIR
from busmob.cli import main


def run(out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    os.chdir(out)  # the scenario's output_dir is relative to the working directory
    cfg = str(SCENARIO_DIR / "scenario.json")
    t0 = time.perf_counter()
    for cmd in ("match", "simulate", "analyze", "report"):
        rc = main([cmd, "--config", cfg])
        if rc:
            print(f"{cmd} failed with exit code {rc}", file=sys.stderr)
            return rc
    elapsed = time.perf_counter() - t0

    report = json.loads((out / "busmob-out" / "report" / "report.json").read_text())
    print(f"\npipeline finished in {elapsed:.1f} s; outputs under {out / 'busmob-out'}\n")
    print(f"{'config':<14}{'contact':>10}{'inter':>10}{'ratio':>8}{'degree':>8}{'in perim':>10}{'travel':>9}{'compat %':>10}")
    for label, entry in report["configurations"].items():
        m = entry["metrics"]
        c, ic = m["contact_time"]["mean"], m["inter_contact_time"]["mean"]
        print(
            f"{label:<14}{c:>10.1f}{ic:>10.1f}{ic / c:>8.2f}{m['connectivity']['mean']:>8.2f}"
            f"{m['vehicles_in_perimeter']['mean']:>10.2f}{m['travel_time']['median']:>9.0f}"
            f"{entry['compatibility']['percentage']:>10.1f}"
        )
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="scenario-run", help="working directory for the outputs")
    sys.exit(run(Path(ap.parse_args().out).resolve()))
