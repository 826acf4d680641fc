"""Bus-line map-matching, deterministic trace replay and contact analysis."""

from pathlib import Path

__version__ = "0.1.0"

SCENARIO_DIR = Path(__file__).parent / "data" / "scenario"
