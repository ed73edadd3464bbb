"""Node positions, free-space path loss and disc-averaged eavesdropper distances.

Positions are stored in Cartesian metres. Polar coordinates (r, theta)
are measured in the horizontal plane around an origin, usually the source's
ground projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NodePosition:
    """A node position in Cartesian metres."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.z < 0:
            raise ValueError(f"altitude z must be >= 0, got {self.z}")

    @classmethod
    def from_polar(cls, r: float, theta: float, z: float, origin: "NodePosition | None" = None) -> "NodePosition":
        """Build from horizontal radius/azimuth around ``origin`` (default: (0, 0))."""
        if r < 0:
            raise ValueError(f"r must be >= 0, got {r}")
        ox, oy = (origin.x, origin.y) if origin is not None else (0.0, 0.0)
        return cls(ox + r * math.cos(theta), oy + r * math.sin(theta), z)

    @classmethod
    def from_seq(cls, seq) -> "NodePosition":
        x, y, z = (float(v) for v in seq)
        return cls(x, y, z)

    def polar(self, origin: "NodePosition | None" = None) -> tuple[float, float, float]:
        """Return (r, theta, z) with theta in [0, 2*pi)."""
        ox, oy = (origin.x, origin.y) if origin is not None else (0.0, 0.0)
        dx, dy = self.x - ox, self.y - oy
        theta = math.atan2(dy, dx) % (2 * math.pi)
        return math.hypot(dx, dy), theta, self.z

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def ground(self) -> "NodePosition":
        return NodePosition(self.x, self.y, 0.0)


@dataclass(frozen=True)
class PathLossModel:
    """Power-law path loss normalised to 1 at the reference distance ``d0``."""

    tau: float = 2.0
    d0: float = 100.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not self.d0 > 0:
            raise ValueError(f"d0 must be > 0, got {self.d0}")


@dataclass(frozen=True)
class EavesdropperDisc:
    """Uniform eavesdropper placement on a ground disc of radius ``r_c``
    centred below the source."""

    r_c: float

    def __post_init__(self):
        if not self.r_c > 0:
            raise ValueError(f"r_c must be > 0, got {self.r_c}")

    def density(self, r):
        """Radial density of the distance from the centre, 2r/r_c^2 on [0, r_c]."""
        r = np.asarray(r, dtype=float)
        return np.where((r >= 0) & (r <= self.r_c), 2.0 * r / self.r_c**2, 0.0)


def distance(a: NodePosition, b: NodePosition) -> float:
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def path_loss(model: PathLossModel, d):
    """(d/d0)^(-tau). Accepts scalars or arrays; every d must be positive."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(~(d_arr > 0)):
        raise ValueError("path_loss requires d > 0")
    out = (d_arr / model.d0) ** (-model.tau)
    return float(out) if out.ndim == 0 else out


def sample_disc(disc: EavesdropperDisc, center: NodePosition, rng: np.random.Generator, n: int):
    """Uniform ground points on the disc via the inverse radial CDF.

    Returns (xs, ys) arrays of length n at altitude 0.
    """
    u = rng.random(n)
    v = rng.random(n)
    r = disc.r_c * np.sqrt(u)
    th = 2.0 * np.pi * v
    return center.x + r * np.cos(th), center.y + r * np.sin(th)


def expected_disc_distances(disc: EavesdropperDisc, source: NodePosition, relay: NodePosition,
                            rel_tol: float = 1e-8) -> tuple[float, float]:
    """Mean S-E and relay-E distances for E uniform on the disc around the source.

    The S-E mean has a radial closed form; the relay-E mean is a 2-D polar
    integral evaluated by nested adaptive quadrature.
    """
    from .specfun import QuadControl, quad_2d

    rc = disc.r_c
    h_s = source.z
    # 2/(3 rc^2) ((rc^2 + h^2)^(3/2) - h^3), rearranged to avoid cancellation for small rc
    q = math.sqrt(rc**2 + h_s**2)
    r_se = 2.0 * (q * q + q * h_s + h_s * h_s) / (3.0 * (q + h_s))

    r_u, th_u, h_u = relay.polar(origin=source)

    def integrand(theta, r):
        # r * |p_u - p_E| with p_E = (r, theta, 0) relative to the source
        d2 = r_u**2 + r**2 - 2.0 * r_u * r * np.cos(theta - th_u) + h_u**2
        return r * np.sqrt(d2)

    ctl = QuadControl(rel_tol=rel_tol, abs_tol=1e-12 * rc)
    # split the angular range at the relay azimuth where the integrand kinks if h_u = 0
    total = quad_2d(integrand, (0.0, rc), (th_u, th_u + 2.0 * np.pi), ctl)
    r_re = total / (math.pi * rc**2)
    return float(r_se), float(r_re)
