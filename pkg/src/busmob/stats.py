"""Box-plot quartiles and a histogram density trace, i.e. the numbers behind a violin plot."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptySampleError
from .replay import fmt2


@dataclass(frozen=True)
class StatSummary:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    iqr: float
    outliers: tuple[float, ...] = ()
    density: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["outliers"] = list(self.outliers)
        d["density"] = [list(b) for b in self.density]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StatSummary":
        d = dict(d)
        d["outliers"] = tuple(d.get("outliers", ()))
        d["density"] = tuple(tuple(b) for b in d.get("density", ()))
        return cls(**d)


def summarize(samples: Sequence[float], bins: int = 40, clip: float | None = None) -> StatSummary:
    """Quartiles (linear interpolation between order statistics), Tukey outliers and
    a unit-mass histogram over [min, max], or over [min, clip] when ``clip`` is set.

    Samples above ``clip`` still count in every statistic except the density; if
    none remain below it the density is empty.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptySampleError("cannot summarize an empty sample")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    x = np.sort(x)
    q1, med, q3 = np.percentile(x, [25, 50, 75], method="linear")
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    outliers = tuple(float(v) for v in x if v < lo or v > hi)

    top = float(x[-1]) if clip is None else float(clip)
    kept = x[x <= top]
    density: tuple[tuple[float, float], ...] = ()
    if kept.size:
        rng = (float(x[0]), max(top, float(x[0])))
        try:
            counts, edges = np.histogram(kept, bins=bins, range=rng)
        except ValueError:
            # range narrower than float spacing allows for `bins` bins
            counts, edges = np.histogram(kept, bins=1, range=rng)
        centers = (edges[:-1] + edges[1:]) / 2.0
        freq = counts / counts.sum()
        density = tuple((float(c), float(f)) for c, f in zip(centers, freq))
    return StatSummary(
        n=int(x.size),
        min=float(x[0]),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        max=float(x[-1]),
        mean=float(x.mean()),
        iqr=float(iqr),
        outliers=outliers,
        density=density,
    )


def density_csv(summary: StatSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_center", "frequency"])
    for c, f in summary.density:
        w.writerow([fmt2(c), f"{f:.6f}"])
    return buf.getvalue()
