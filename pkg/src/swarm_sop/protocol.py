"""Time-switching wireless-powered relaying: constants, link SNRs, combining
and jamming power.

All SNRs are normalised by the noise power, so ``psi`` is the transmit SNR
of the source and every instantaneous SNR is dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .fading import ShadowedRicianParams
from .geometry import EavesdropperDisc, NodePosition, PathLossModel, distance, path_loss


class Scheme(str, Enum):
    SC = "SC"
    MRC = "MRC"


class JammingMode(str, Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"


@dataclass(frozen=True)
class SystemConfig:
    """Protocol and power parameters.

    psi is the linear source SNR, alpha the energy-harvesting time fraction,
    eta_eh the conversion efficiency, delta the share of harvested energy a
    jammer spends, U the swarm size and C_th the target secrecy rate.
    """

    psi: float = 1e4
    alpha: float = 0.8
    eta_eh: float = 0.8
    delta: float = 1.0
    U: int = 5
    C_th: float = 0.1
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.psi > 0:
            raise ValueError(f"psi must be > 0, got {self.psi}")
        # alpha = 0 is allowed as the degenerate no-harvesting case
        if not 0 <= self.alpha < 1:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if not 0 < self.eta_eh < 1:
            raise ValueError(f"eta_eh must be in (0, 1), got {self.eta_eh}")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must be in (0, 1], got {self.delta}")
        if int(self.U) != self.U or self.U < 1:
            raise ValueError(f"U must be a positive integer, got {self.U}")
        if not self.C_th > 0:
            raise ValueError(f"C_th must be > 0, got {self.C_th}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")
        object.__setattr__(self, "U", int(self.U))

    @classmethod
    def from_db(cls, psi_db: float, **kw) -> "SystemConfig":
        return cls(psi=10.0 ** (psi_db / 10.0), **kw)

    @property
    def psi_db(self) -> float:
        return 10.0 * math.log10(self.psi)

    @property
    def epsilon(self) -> float:
        return derived_constants(self)[0]

    @property
    def gamma_S(self) -> float:
        return derived_constants(self)[1]

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class LinkGains:
    """Large-scale power gains of the four links that enter the SNRs."""

    sr: float
    rd: float
    re: float
    se: float

    def __post_init__(self):
        for name in ("sr", "rd", "re", "se"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"path gain lambda_{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class Scenario:
    """Node geometry plus channel statistics.

    ``eavesdropper`` is a fixed position; ``disc`` describes a random
    eavesdropper on a ground disc centred below the source. At least one is
    required.
    """

    source: NodePosition
    destination: NodePosition
    swarm: NodePosition
    eavesdropper: NodePosition | None = None
    disc: EavesdropperDisc | None = None
    pathloss: PathLossModel = field(default_factory=PathLossModel)
    fading: ShadowedRicianParams = field(default_factory=ShadowedRicianParams)

    def __post_init__(self):
        if self.eavesdropper is None and self.disc is None:
            raise ValueError("scenario needs a fixed eavesdropper or a disc")

    @property
    def g(self) -> float:
        """Mean source-to-jammer small-scale gain."""
        return self.fading.mean

    def lam(self, a: NodePosition, b: NodePosition) -> float:
        return path_loss(self.pathloss, distance(a, b))

    def links(self, eavesdropper: NodePosition | None = None) -> LinkGains:
        e = eavesdropper if eavesdropper is not None else self.eavesdropper
        if e is None:
            raise ValueError("no fixed eavesdropper; use links_from_distances for a disc")
        return LinkGains(
            sr=self.lam(self.source, self.swarm),
            rd=self.lam(self.swarm, self.destination),
            re=self.lam(self.swarm, e),
            se=self.lam(self.source, e),
        )

    def links_from_distances(self, d_se: float, d_re: float) -> LinkGains:
        return LinkGains(
            sr=self.lam(self.source, self.swarm),
            rd=self.lam(self.swarm, self.destination),
            re=path_loss(self.pathloss, d_re),
            se=path_loss(self.pathloss, d_se),
        )

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def derived_constants(cfg: SystemConfig) -> tuple[float, float]:
    """(epsilon, gamma_S) = (2 eta_eh alpha/(1-alpha), 2^(2 C_th/(1-alpha)))."""
    a = cfg.alpha
    if a >= 1:
        raise ValueError("alpha must be < 1")
    eps = 2.0 * cfg.eta_eh * a / (1.0 - a)
    gamma_s = 2.0 ** (2.0 * cfg.C_th / (1.0 - a))
    return eps, gamma_s


def snr_destination(x, y, links: LinkGains, cfg: SystemConfig):
    eps = cfg.epsilon
    return eps * cfg.psi * links.sr * links.rd * x * y / (eps * links.rd * y + 1.0)


def snr_eve_direct(w, links: LinkGains, cfg: SystemConfig):
    return cfg.psi * links.se * w


def snr_eve_relay(x, z, links: LinkGains, cfg: SystemConfig, jamming_power=0.0):
    eps = cfg.epsilon
    return eps * cfg.psi * links.sr * links.re * x * z / (eps * links.re * z + 1.0 + jamming_power)


def jammer_power(links: LinkGains, cfg: SystemConfig, g: float) -> float:
    """Average-energy jamming power P_J = delta eps psi lambda_SR g."""
    return cfg.delta * cfg.epsilon * cfg.psi * links.sr * g


def jamming_power(mode, links: LinkGains, cfg: SystemConfig, g: float,
                  j_sum=None, per_jammer_gains=None):
    """Jamming term added to the eavesdropper's noise (normalised).

    exact: delta eps sum_j (psi lambda_SR h_Sj + 1) lambda_RE h_jE, with
        ``per_jammer_gains = (h_S, h_E)`` arrays whose last axis has U-1 entries.
    approximate: P_J lambda_RE J with ``j_sum`` the summed jammer-to-E gain.
    """
    mode = JammingMode(mode)
    if cfg.U == 1:
        if mode is JammingMode.EXACT and per_jammer_gains is not None:
            return np.zeros(np.shape(per_jammer_gains[0])[:-1])
        return 0.0 if j_sum is None else np.zeros_like(np.asarray(j_sum, dtype=float))
    if mode is JammingMode.APPROXIMATE:
        if j_sum is None:
            raise ValueError("approximate mode needs j_sum")
        return jammer_power(links, cfg, g) * links.re * np.asarray(j_sum)
    if per_jammer_gains is None:
        raise ValueError("exact mode needs per-jammer gain pairs")
    h_s, h_e = (np.asarray(a, dtype=float) for a in per_jammer_gains)
    if h_s.shape[-1] != cfg.U - 1 or h_e.shape[-1] != cfg.U - 1:
        raise ValueError("exact mode needs U-1 gain pairs")
    harvested = cfg.psi * links.sr * h_s + 1.0
    return cfg.delta * cfg.epsilon * np.sum(harvested * links.re * h_e, axis=-1)


def combine_eve(scheme, gamma_se, gamma_re):
    scheme = Scheme(scheme)
    if scheme is Scheme.SC:
        return np.maximum(gamma_se, gamma_re)
    return np.asarray(gamma_se) + np.asarray(gamma_re)


def secrecy_capacity(gamma_d, gamma_e, cfg: SystemConfig):
    """max(0, (1-alpha)/2 log2((1+gamma_D)/(1+gamma_E)))."""
    c = 0.5 * (1.0 - cfg.alpha) * np.log2((1.0 + np.asarray(gamma_d)) / (1.0 + np.asarray(gamma_e)))
    out = np.maximum(c, 0.0)
    return float(out) if np.ndim(out) == 0 else out
