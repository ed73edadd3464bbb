"""Trial-level simulator of the relaying protocol.

Trials are drawn in fixed-size blocks. Block b always uses a Philox stream
keyed by (seed, b), so the outage count depends only on (seed, plan) and
not on how blocks are spread over worker threads. Within a block every
(combining, jamming) outcome is computed from the same draws, which makes
the per-trial dominance relations hold exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fading import sample_rayleigh_gain, sample_sr_gain
from .geometry import path_loss, sample_disc
from .protocol import (
    JammingMode,
    LinkGains,
    Scenario,
    Scheme,
    SystemConfig,
    combine_eve,
    jamming_power,
    snr_destination,
    snr_eve_direct,
)

BLOCK_SIZE = 1 << 16
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class McPlan:
    trials: int = 1_000_000
    seed: int = 0
    sop_definition: str = "asymptotic"  # or "exact"
    jamming_model: str = "approximate"  # or "exact"
    eavesdropper: str = "fixed"  # or "random"
    scheme: Scheme = Scheme.SC
    jamming: bool = False
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials}")
        if self.sop_definition not in ("exact", "asymptotic"):
            raise ValueError(f"sop_definition must be 'exact' or 'asymptotic', got {self.sop_definition!r}")
        if self.eavesdropper not in ("fixed", "random"):
            raise ValueError(f"eavesdropper must be 'fixed' or 'random', got {self.eavesdropper!r}")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        object.__setattr__(self, "jamming_model", JammingMode(self.jamming_model).value)
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    std_err: float
    trials: int
    outage_count: int

    @classmethod
    def from_count(cls, count: int, trials: int) -> "McEstimate":
        p = count / trials
        return cls(p, math.sqrt(p * (1.0 - p) / trials), trials, int(count))


CASES = ((Scheme.SC, False), (Scheme.SC, True), (Scheme.MRC, False), (Scheme.MRC, True))


def block_rng(seed: int, block: int) -> np.random.Generator:
    key = np.array([int(seed) & _MASK64, int(block) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _eve_links(rng, n, scenario: Scenario, plan: McPlan):
    """(lam_re, lam_se) arrays or scalars for this block."""
    if plan.eavesdropper == "fixed":
        L = scenario.links()
        return L.re, L.se
    xs, ys = sample_disc(scenario.disc, scenario.source.ground(), rng, n)
    s, u = scenario.source, scenario.swarm
    d_se = np.sqrt((xs - s.x) ** 2 + (ys - s.y) ** 2 + s.z**2)
    d_re = np.sqrt((xs - u.x) ** 2 + (ys - u.y) ** 2 + u.z**2)
    return path_loss(scenario.pathloss, d_re), path_loss(scenario.pathloss, d_se)


def simulate_block(rng: np.random.Generator, n: int, scenario: Scenario, cfg: SystemConfig,
                   plan: McPlan, cases=CASES) -> dict:
    """Outage indicators (bool arrays of length n) for every requested case."""
    fad = scenario.fading
    U = cfg.U
    # eavesdropper position first, then the channel draws
    lam_re, lam_se = _eve_links(rng, n, scenario, plan)
    sr = scenario.lam(scenario.source, scenario.swarm)
    rd = scenario.lam(scenario.swarm, scenario.destination)
    h_su = sample_sr_gain(fad, rng, (n, U))
    y = sample_sr_gain(fad, rng, n)
    z = sample_sr_gain(fad, rng, n)
    w = sample_rayleigh_gain(rng, n)
    h_je = sample_sr_gain(fad, rng, (n, U - 1)) if U > 1 else np.zeros((n, 0))

    # relay chosen by the strongest source link
    order = np.argsort(h_su, axis=1)
    x = np.take_along_axis(h_su, order[:, -1:], axis=1)[:, 0]
    h_sj = np.take_along_axis(h_su, order[:, :-1], axis=1)

    links = LinkGains(sr=sr, rd=rd, re=1.0, se=1.0)  # eve gains applied below
    g_d = snr_destination(x, y, links, cfg)
    g_se = snr_eve_direct(w, links, cfg) * lam_se

    gam_s = cfg.gamma_S
    out = {}
    relay_snr = {}
    for jam in sorted({j for _, j in cases}):
        if jam and U > 1:
            if plan.jamming_model == JammingMode.APPROXIMATE.value:
                jp = jamming_power("approximate", links, cfg, fad.mean, j_sum=h_je.sum(axis=1)) * lam_re
            else:
                jp = jamming_power("exact", links, cfg, fad.mean, per_jammer_gains=(h_sj, h_je)) * lam_re
        else:
            jp = 0.0
        relay_snr[jam] = _relay_eve_snr(x, z, sr, lam_re, cfg, jp)
    for scheme, jam in cases:
        g_e = combine_eve(scheme, g_se, relay_snr[jam])
        if plan.sop_definition == "asymptotic":
            out[(Scheme(scheme), jam)] = g_d < gam_s * g_e
        else:
            out[(Scheme(scheme), jam)] = 1.0 + g_d < gam_s * (1.0 + g_e)
    return out


def _relay_eve_snr(x, z, sr, lam_re, cfg, jp):
    # same as protocol.snr_eve_relay, but lam_re may vary per trial
    eps = cfg.epsilon
    return eps * cfg.psi * sr * lam_re * x * z / (eps * lam_re * z + 1.0 + jp)


def run_trial(rng: np.random.Generator, scenario: Scenario, cfg: SystemConfig, plan: McPlan) -> bool:
    """One protocol realisation; True when the secrecy outage event occurs."""
    case = (plan.scheme, bool(plan.jamming))
    return bool(simulate_block(rng, 1, scenario, cfg, plan, (case,))[case][0])


def _block_sizes(plan: McPlan):
    nb = -(-plan.trials // plan.block_size)
    return [(b, min(plan.block_size, plan.trials - b * plan.block_size)) for b in range(nb)]


def count_outages(plan: McPlan, scenario: Scenario, cfg: SystemConfig, cases=CASES,
                  threads: int = 1) -> dict:
    """Outage counts per case over plan.trials trials (shared draws)."""
    if plan.eavesdropper == "random" and scenario.disc is None:
        raise ValueError("random-eavesdropper plan needs scenario.disc")
    if plan.eavesdropper == "fixed" and scenario.eavesdropper is None:
        raise ValueError("fixed-eavesdropper plan needs scenario.eavesdropper")
    cases = tuple((Scheme(s), bool(j)) for s, j in cases)

    def work(bn):
        b, n = bn
        res = simulate_block(block_rng(plan.seed, b), n, scenario, cfg, plan, cases)
        return {c: int(np.count_nonzero(v)) for c, v in res.items()}

    blocks = _block_sizes(plan)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, blocks))
    else:
        parts = [work(bn) for bn in blocks]
    return {c: sum(p[c] for p in parts) for c in cases}


def estimate_all(plan: McPlan, scenario: Scenario, cfg: SystemConfig, cases=CASES,
                 threads: int = 1) -> dict:
    counts = count_outages(plan, scenario, cfg, cases, threads)
    return {c: McEstimate.from_count(k, plan.trials) for c, k in counts.items()}


def estimate_sop(plan: McPlan, scenario: Scenario, cfg: SystemConfig, threads: int = 1) -> McEstimate:
    case = (plan.scheme, bool(plan.jamming))
    return estimate_all(plan, scenario, cfg, (case,), threads)[case]


def estimate_sop_random_e(plan: McPlan, scenario: Scenario, cfg: SystemConfig, threads: int = 1) -> McEstimate:
    """Disc-averaged SOP: every trial draws its own eavesdropper position."""
    if plan.eavesdropper != "random":
        plan = McPlan(**{**plan.__dict__, "eavesdropper": "random"})
    return estimate_sop(plan, scenario, cfg, threads)
