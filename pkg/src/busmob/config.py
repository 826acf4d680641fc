"""Scenario configuration: one JSON file naming the inputs and parameter overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError

DEFAULT_RANGES = (150.0, 300.0)
DEFAULT_PERIMETERS = (2000.0, 4000.0)


@dataclass
class ScenarioConfig:
    network: Path | None = None
    lines: list[Path] = field(default_factory=list)
    output_dir: Path | None = None
    real_times: Path | None = None
    matcher: dict = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        """Read a scenario file.

        Relative input paths resolve against the file's directory; ``output_dir``
        resolves against the working directory.
        """
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", exc.lineno) from None
        if not isinstance(data, dict):
            raise ParseError(f"{path}: scenario must be a JSON object")
        base = path.parent

        def rel(p):
            return None if p is None else (base / p)

        known = {"network", "lines", "output_dir", "real_times", "matcher", "simulation", "analysis"}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"{path}: unknown keys {sorted(unknown)}")
        return cls(
            network=rel(data.get("network")),
            lines=[base / p for p in data.get("lines", [])],
            output_dir=Path(data["output_dir"]) if data.get("output_dir") else None,
            real_times=rel(data.get("real_times")),
            matcher=dict(data.get("matcher", {})),
            simulation=dict(data.get("simulation", {})),
            analysis=dict(data.get("analysis", {})),
        )
