"""Exhaustive grid search for the swarm hovering point.

The swarm centroid is placed on the vertical plane through S and D
(azimuth theta_u = 0 about the source) and the disc-averaged MRC-with-jamming
bound is minimised over the horizontal offset x along S-D and altitude H.
An optional list of azimuths lets the theta_u = 0 reduction be tested
rather than assumed.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from dataclasses import dataclass, field

import numpy as np

from .analytic import AnalyticControl, SopQuery, sop_lower_bound_random_e
from .geometry import NodePosition
from .protocol import Scenario, Scheme, SystemConfig
from .specfun import NumericalError


@dataclass(frozen=True)
class CorridorSearchSpec:
    """Search box. x is the along-track coordinate source.x + (ground distance
    from the source towards D), which is the plain x coordinate when S and D
    share the same y."""

    H_min: float = 60.0
    H_max: float = 120.0
    x_min: float = 300.0
    x_max: float = 600.0
    nx: int = 16
    nH: int = 16
    thetas: tuple = (0.0,)
    scheme: Scheme = Scheme.MRC
    jamming: bool = True

    def __post_init__(self):
        if not self.H_min <= self.H_max:
            raise ValueError("H_min must be <= H_max")
        if not self.x_min <= self.x_max:
            raise ValueError("x_min must be <= x_max")
        if self.H_min < 0:
            raise ValueError("altitudes must be >= 0")
        if self.nx < 1 or self.nH < 1:
            raise ValueError("grid needs at least one cell")
        if not self.thetas:
            raise ValueError("thetas must not be empty")
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))

    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx) if self.nx > 1 else np.array([self.x_min])

    def Hs(self) -> np.ndarray:
        return np.linspace(self.H_min, self.H_max, self.nH) if self.nH > 1 else np.array([self.H_min])


@dataclass(frozen=True)
class CorridorCell:
    x: float
    H: float
    theta: float
    position: NodePosition
    sop: float  # nan when the cell failed


@dataclass(frozen=True)
class CorridorResult:
    best: CorridorCell
    surface: tuple
    failures: dict = field(default_factory=dict)

    @property
    def best_position(self) -> NodePosition:
        return self.best.position

    @property
    def best_sop(self) -> float:
        return self.best.sop


def corridor_position(scenario: Scenario, x: float, H: float, theta: float = 0.0) -> NodePosition:
    """Swarm position at along-track coordinate x, altitude H and azimuth
    theta about the source, theta = 0 pointing at the destination."""
    s, d = scenario.source, scenario.destination
    heading = math.atan2(d.y - s.y, d.x - s.x)
    r = x - s.x
    return NodePosition(float(s.x + r * math.cos(heading + theta)), float(s.y + r * math.sin(heading + theta)), float(H))


def _evaluate_cell(spec, scenario, cfg, ctl, cell):
    x, H, th = cell
    pos = corridor_position(scenario, x, H, th)
    try:
        q = SopQuery(spec.scheme, spec.jamming, cfg, scenario.with_(swarm=pos), "random")
        return cell, pos, sop_lower_bound_random_e(q, ctl).value, None
    except (NumericalError, ValueError) as exc:
        return cell, pos, math.nan, str(exc)


def optimize_corridor(spec: CorridorSearchSpec, scenario: Scenario, cfg: SystemConfig,
                      threads: int = 1, ctl: AnalyticControl | None = None) -> CorridorResult:
    if scenario.disc is None:
        raise ValueError("corridor search needs a random-eavesdropper disc")
    cells = [(float(x), float(H), th) for th in spec.thetas for H in spec.Hs() for x in spec.xs()]
    work = partial(_evaluate_cell, spec, scenario, cfg, ctl)
    # the objective is pure, so cells can go to worker processes; map keeps order
    if threads > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, cells, chunksize=max(1, len(cells) // (4 * threads))))
    else:
        results = [work(c) for c in cells]

    surface = []
    failures = {}
    for (x, H, th), pos, v, err in results:
        surface.append(CorridorCell(x, H, th, pos, v))
        if err is not None:
            failures[(x, H, th)] = err
    if failures:
        warnings.warn(f"{len(failures)} corridor cell(s) failed and were excluded", RuntimeWarning)
    ok = [c for c in surface if not math.isnan(c.sop)]
    if not ok:
        raise NumericalError("every corridor cell failed")
    # ties: lowest altitude, then smallest x, then smallest azimuth
    best = min(ok, key=lambda c: (c.sop, c.H, c.x, c.theta))
    return CorridorResult(best, tuple(surface), failures)


def write_surface_csv(result: CorridorResult, dest, with_theta: bool = False) -> None:
    """Write columns x, H[, theta], sop to a path or an open text file."""
    if isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__"):
        with open(dest, "w", newline="") as fh:
            write_surface_csv(result, fh, with_theta)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(["x", "H", "theta", "sop"] if with_theta else ["x", "H", "sop"])
    for c in result.surface:
        row = [f"{c.x:.10g}", f"{c.H:.10g}"]
        if with_theta:
            row.append(f"{c.theta:.10g}")
        row.append("" if math.isnan(c.sop) else f"{c.sop:.10g}")
        w.writerow(row)
