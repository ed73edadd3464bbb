"""Asymptotic secrecy outage probability, Pr{gamma_D < gamma_S gamma_E}, in
closed/semi-closed form for the four (combining, jamming) cases and the
Jensen lower bound for an eavesdropper placed uniformly on a disc.

Notation used throughout (all derived from the query):

    alpha_D = 1/(eps lam_RD),  alpha_E = 1/(eps lam_RE),  rho_s = lam_SR/lam_SE
    g_Y = alpha_D/(gamma_S - 1),  g_Z = alpha_E/(gamma_S - 1),  xi = gamma_S g_Y
    D(y) = y/(y + alpha_D)   (destination SNR = psi lam_SR X D(Y))
    Ups_Z(y) = g_Z y/(y + xi)         Ups_Z(t) = g_Z K(t),  K(t) = 1 + P_J lam_RE t
    Ups_Y(z, t) = xi z/(Ups_Z(t) - z)

The best-relay gain X enters only through its Laplace transform, written as
the Gamma mixture L_X(s) = sum_j w_j (a_j/(a_j + s))^(k_j + 1). Every
(a_j/(a_j + s))^(k_j+1) factor reduces to a ratio ((x+alpha)/(x+beta))^g,
which is how the Theta integrals arise.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .composite import max_gain_dist, sum_gain_dist
from .fading import ShadowedRicianParams, sr_ccdf_coefficients, sr_pdf_mixture
from .geometry import EavesdropperDisc, expected_disc_distances
from .protocol import LinkGains, Scenario, Scheme, SystemConfig, derived_constants, jammer_power
from .specfun import (
    DEFAULT_QUAD,
    DEFAULT_SERIES,
    NumericalError,
    QuadControl,
    SeriesControl,
    integrate_batch,
    theta2,
    theta5_sum,
    theta6_sum,
    theta7,
)

OVERSHOOT_TOL = 1e-6


@dataclass(frozen=True)
class AnalyticControl:
    series: SeriesControl = DEFAULT_SERIES
    quad: QuadControl = DEFAULT_QUAD


@dataclass(frozen=True)
class SopQuery:
    scheme: Scheme
    jamming: bool
    cfg: SystemConfig
    scenario: Scenario
    eavesdropper: str = "fixed"  # "fixed" or "random"

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.eavesdropper not in ("fixed", "random"):
            raise ValueError("eavesdropper must be 'fixed' or 'random'")
        if self.eavesdropper == "fixed" and self.scenario.eavesdropper is None:
            raise ValueError("fixed-eavesdropper query needs scenario.eavesdropper")
        if self.eavesdropper == "random" and self.scenario.disc is None:
            raise ValueError("random-eavesdropper query needs scenario.disc")


@dataclass(frozen=True)
class SopResult:
    value: float
    method: str
    scheme: Scheme
    jamming: bool
    definition: str = "asymptotic"
    std_err: float | None = None
    diagnostics: dict = field(default_factory=dict)


# -- shared pieces ------------------------------------------------------------------


@dataclass
class _Setup:
    links: LinkGains
    cfg: SystemConfig
    fad: ShadowedRicianParams
    ctl: AnalyticControl

    def __post_init__(self):
        eps, gs = derived_constants(self.cfg)
        if not gs > 1:
            raise ValueError("gamma_S must exceed 1")
        self.eps, self.gs = eps, gs
        L = self.links
        self.alpha_d = 1.0 / (eps * L.rd)
        self.alpha_e = 1.0 / (eps * L.re)
        self.rho_s = L.sr / L.se
        self.g_y = self.alpha_d / (gs - 1.0)
        self.g_z = self.alpha_e / (gs - 1.0)
        self.xi = gs * self.g_y
        f = self.fad
        self.eta = f.eta
        self.zeta = f.zeta
        self.K = sr_ccdf_coefficients(f)  # 1 - F(x) = sum_q K[q] x^q e^{-eta x}
        self.pdf = sr_pdf_mixture(f)
        self.V = f.m_S - 1
        w, k, a = max_gain_dist(f, self.cfg.U).gamma_components()
        groups = defaultdict(lambda: defaultdict(float))
        for wj, kj, aj in zip(w, k, a):
            groups[float(aj)][int(kj) + 1] += wj
        # rate -> (gammas, weights)
        self.groups = {a_: (np.array(sorted(d)), np.array([d[g] for g in sorted(d)]))
                       for a_, d in sorted(groups.items())}
        self.x_weights = w
        self.quad = self.ctl.quad

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        q = np.arange(self.V + 1).reshape((-1,) + (1,) * x.ndim)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.sum(self.K.reshape(q.shape) * x[None] ** q, axis=0) * np.exp(-self.eta * x)
        return np.where(np.isinf(x), 0.0, out)

    def density(self, x):
        return self.pdf.evaluate(x)

    def cutoff(self, power: float | None = None) -> float:
        return self.quad.tail_cutoff(self.eta, self.V if power is None else power)

    def jam_load(self, jamming: bool):
        """(kind, data): ('point', None) for J = 0, else ('density', poly coefficients)."""
        if not jamming or self.cfg.U == 1:
            return "point", None
        return "density", sum_gain_dist(self.fad, self.cfg.U - 1).poly_coefficients()


def _clamp(raw: float, scheme, jamming, diag) -> SopResult:
    if not math.isfinite(raw):
        raise NumericalError("SOP evaluation produced a non-finite value", raw)
    if raw < -OVERSHOOT_TOL or raw > 1 + OVERSHOOT_TOL:
        raise NumericalError(f"SOP {raw!r} outside [0, 1] beyond tolerance", raw)
    diag = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in diag.items()}
    diag["raw_value"] = float(raw)
    return SopResult(float(min(1.0, max(0.0, raw))), "analytic", Scheme(scheme), bool(jamming), diagnostics=diag)


def _degenerate(cfg: SystemConfig) -> bool:
    # no harvesting time: relay transmits nothing, gamma_D = 0 and outage is certain
    return cfg.alpha == 0.0


def _prob_z_above_threshold(s: _Setup) -> float:
    """Pr{Z > Ups_Z(Y)} = sum_lY zeta_lY sum_q K_q g_Z^q Theta2(lY, q, eta, eta g_Z; xi)."""
    total = 0.0
    for ly in range(s.V + 1):
        for q in range(s.V + 1):
            if s.K[q] == 0.0:
                continue
            th = theta2(ly, q, s.eta, s.eta * s.g_z, s.xi, s.ctl.series, s.quad)
            total += s.zeta[ly] * s.K[q] * s.g_z**q * th
    return total


def _integrate_1d(f, hi: float, s: _Setup, rows: int = 1):
    vals, errs = integrate_batch(f, np.zeros(rows), np.full(rows, hi),
                                 rel_tol=s.quad.rel_tol, abs_tol=s.quad.abs_tol)
    return vals, errs


# -- SC, no jamming -------------------------------------------------------------------


def _sc_nojam(s: _Setup) -> tuple[float, dict]:
    # P = T1 + T2 - T3 with
    #   T1 = E[L_X(Ups_W(Y))]                      (Theta1 terms)
    #   T2 = Pr{Z > Ups_Z(Y)}                      (Theta2 terms)
    #   T3 = E[(1 - F_Z(Ups_Z(Y))) L_X(Ups_W(Y))]  (Theta3 terms)
    gs, ad, rho_s = s.gs, s.alpha_d, s.rho_s
    vs = np.arange(s.V + 1)
    t1 = 0.0
    per_rate = []
    for a, (gam, wts) in s.groups.items():
        g_t = gs / (a * gs + rho_s)
        beta = a * g_t * ad
        ratio = a * g_t
        coef = s.zeta[:, None] * (wts * ratio**gam)[None, :]
        t1 += float(theta5_sum(0.0, coef, gam, s.eta, ad, beta, s.ctl.series, s.quad))
        per_rate.append((beta, coef, gam))
    t2 = _prob_z_above_threshold(s)

    # Theta3 sum: int f_Y(y) (1 - F_Z(Ups_Z(y))) sum_j ... ((y + alpha_D)/(y + beta_j))^g dy
    def f(y):
        lz = s.ccdf(s.g_z * y / (y + s.xi))
        acc = np.zeros_like(y)
        for beta, coef, gam in per_rate:
            r = (y + ad) / (y + beta)
            acc += np.einsum("vg,vmn,gmn->mn", coef, y[None] ** vs[:, None, None], r[None] ** gam[:, None, None])
        return acc * np.exp(-s.eta * y) * lz

    t3 = float(_integrate_1d(f, s.cutoff(), s)[0][0])
    return t1 + t2 - t3, {"T1_theta1": t1, "T2_theta2": t2, "T3_theta3": t3}


# -- MRC, no jamming ------------------------------------------------------------------


def _mrc_nojam(s: _Setup) -> tuple[float, dict]:
    # P = Pr{Z > Ups_Z(Y)} + E[1{Z < Ups_Z(Y)} L_X(Ups_W(Y, Z))]
    # with a + Ups_W = (1/lt_S) (z + beta6)/(z + alpha_E),
    #   lt_Y = a + rho_s D(y)/gamma_S, lt_S = 1/(lt_Y - rho_s), beta6 = alpha_E lt_S lt_Y
    gs, ad, ae, rho_s = s.gs, s.alpha_d, s.alpha_e, s.rho_s
    t6 = _prob_z_above_threshold(s)
    zeta = s.zeta

    def f(y):
        y = y.ravel()
        d = y / (y + ad)
        u = s.g_z * y / (y + s.xi)
        acc = np.zeros_like(y)
        for a, (gam, wts) in s.groups.items():
            lt_y = a + rho_s * d / gs
            lt_s = 1.0 / (lt_y - rho_s)
            beta6 = ae * lt_s * lt_y
            ratio = a * lt_s
            coef = zeta[:, None, None] * (wts[:, None] * ratio[None, :] ** gam[:, None])[None]
            acc += theta6_sum(u, coef, gam, s.eta, ae, beta6, s.ctl.series, s.quad)
        fy = s.density(y)
        return (fy * acc).reshape(1, -1)

    t7 = float(_integrate_1d(f, s.cutoff(), s)[0][0])
    return t6 + t7, {"I6_theta2": t6, "I7_theta6": t7}


# -- jamming: shared outer integral over the jammer load --------------------------------


def _jam_expectation(s: _Setup, inner, jamming: bool, ncomp: int):
    """E_J[inner(t)] where inner maps a 1-D array of loads to (n, ncomp)."""
    kind, poly = s.jam_load(jamming)
    if kind == "point":
        return inner(np.zeros(1))[0]
    d = np.arange(poly.size)
    hi = s.quad.tail_cutoff(s.eta, poly.size - 1)

    def f(t):
        shape = t.shape
        tt = t.ravel()
        dens = np.sum(poly[:, None] * tt[None] ** d[:, None], axis=0) * np.exp(-s.eta * tt)
        vals = inner(tt) * dens[:, None]
        return vals.reshape(shape + (ncomp,))

    vals, _ = integrate_batch(f, np.zeros(1), np.full(1, hi), rel_tol=s.quad.rel_tol, abs_tol=s.quad.abs_tol)
    return vals[0]


def _inner_z(s: _Setup, t, pj_re: float, third_term):
    """For each load t: int_0^{Ups_Z(t)} f_Z(z) [1 - F_Y(Ups_Y), third_term(z, t)] dz.

    The first component is the Theta4 integrand summed over (lZ, qY); the
    second is the Theta5 combination supplied by ``third_term``.
    """
    ups_z = s.g_z * (1.0 + pj_re * t)
    zmax = np.minimum(ups_z, s.cutoff())

    def f(z):
        # z has shape (n_t, n); rows follow t
        uz = ups_z[:, None]
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            ups_y = s.xi * z / (uz - z)
        ups_y = np.where(z < uz, ups_y, np.inf)
        fz = s.density(z)
        c4 = s.ccdf(ups_y)
        c5 = third_term(z, np.broadcast_to(t[:, None], z.shape), ups_y)
        return np.stack([fz * c4, fz * c5], axis=-1)

    vals, _ = integrate_batch(f, np.zeros_like(t), zmax,
                              rel_tol=s.quad.rel_tol / 10, abs_tol=s.quad.abs_tol / 10)
    return vals


def _sc_third(s: _Setup):
    ad = s.alpha_d
    terms = []
    for a, (gam, wts) in s.groups.items():
        g_t = s.gs / (a * s.gs + s.rho_s)
        beta = a * g_t * ad
        coef = s.zeta[:, None] * (wts * (a * g_t) ** gam)[None, :]
        terms.append((beta, coef, gam))

    def third(z, t, ups_y):
        out = np.zeros(z.shape)
        fin = np.isfinite(ups_y)
        if not fin.any():
            return out
        u = ups_y[fin]
        acc = np.zeros(u.shape)
        for beta, coef, gam in terms:
            acc += theta5_sum(u, coef, gam, s.eta, ad, beta, s.ctl.series, s.quad)
        out[fin] = acc
        return out

    return third


def _mrc_third(s: _Setup, pj_re: float):
    ad, ae, rho_s, gs = s.alpha_d, s.alpha_e, s.rho_s, s.gs
    zeta = s.zeta

    def third(z, t, ups_y):
        out = np.zeros(z.shape)
        fin = np.isfinite(ups_y)
        if not fin.any():
            return out
        u = ups_y[fin]
        zz = z[fin]
        kt = 1.0 + pj_re * t[fin]
        e = zz / (zz + kt * ae)
        acc = np.zeros(u.shape)
        for a, (gam, wts) in s.groups.items():
            v_t = a - rho_s * e
            g_v = gs / (gs * v_t + rho_s)
            beta9 = v_t * g_v * ad
            ratio = a * g_v
            coef = zeta[:, None, None] * (wts[:, None] * ratio[None, :] ** gam[:, None])[None]
            acc += theta5_sum(u, coef, gam, s.eta, ad, beta9, s.ctl.series, s.quad)
        out[fin] = acc
        return out

    return third


def _sc_jam(s: _Setup, jamming: bool = True) -> tuple[float, dict]:
    pj_re = jammer_power(s.links, s.cfg, s.fad.mean) * s.links.re if jamming else 0.0
    third = _sc_third(s)
    vals = _jam_expectation(s, lambda t: _inner_z(s, t, pj_re, third), jamming, 2)
    i4, i5 = float(vals[0]), float(vals[1])
    return 1.0 - (i4 - i5), {"I4_theta4": i4, "I5_theta5": i5}


def _jam_tail_terms(s: _Setup, pj_re: float, jamming: bool):
    """J8 = Pr{Z > Ups_Z(J)} and J9 = Pr{Z < Ups_Z(J)} through Theta7."""
    kind, poly = s.jam_load(jamming)
    eta = s.eta
    if kind == "point":
        j8 = float(s.ccdf(s.g_z))
        return j8, 1.0 - j8
    alpha7 = 1.0 / pj_re
    scale = s.g_z * pj_re  # = P_J/(eps (gamma_S - 1))
    rho7 = eta * scale
    j8 = 0.0
    j9 = 0.0
    for d, c in enumerate(poly):
        if c == 0.0:
            continue
        th = [theta7(d, q, eta, rho7, alpha7) for q in range(s.V + 1)]
        for q in range(s.V + 1):
            j8 += c * s.K[q] * scale**q * th[q]
        for lz in range(s.V + 1):
            full = math.factorial(lz) / eta ** (lz + 1) * math.factorial(d) / eta ** (d + 1)
            tail = sum(math.factorial(lz) / math.factorial(q) / eta ** (lz - q + 1) * scale**q * th[q]
                       for q in range(lz + 1))
            j9 += c * s.zeta[lz] * (full - tail)
    return j8, j9


def _mrc_jam(s: _Setup, jamming: bool = True) -> tuple[float, dict]:
    pj_re = jammer_power(s.links, s.cfg, s.fad.mean) * s.links.re if jamming else 0.0
    j8, j9 = _jam_tail_terms(s, pj_re, jamming)
    third = _mrc_third(s, pj_re)
    vals = _jam_expectation(s, lambda t: _inner_z(s, t, pj_re, third), jamming, 2)
    j10, j11 = float(vals[0]), float(vals[1])
    return j8 + j9 - j10 + j11, {"J8_theta7": j8, "J9_theta7": j9, "J10_theta4": j10,
                                 "I9_theta5": j11, "J8_plus_J9_minus_1": j8 + j9 - 1.0}


# -- public API -----------------------------------------------------------------------------


def _links_for(q: SopQuery, r_c_override: float | None = None) -> tuple[LinkGains, dict]:
    sc = q.scenario
    if q.eavesdropper == "fixed":
        return sc.links(), {}
    disc = sc.disc if r_c_override is None else EavesdropperDisc(r_c_override)
    r_se, r_re = expected_disc_distances(disc, sc.source, sc.swarm)
    return sc.links_from_distances(r_se, r_re), {"R_SE": r_se, "R_RE": r_re}


def _run(q: SopQuery, scheme, jamming, fn, ctl: AnalyticControl | None, links: LinkGains | None = None) -> SopResult:
    if Scheme(q.scheme) is not Scheme(scheme) or bool(q.jamming) != jamming:
        raise ValueError(f"query is ({q.scheme.value}, jamming={q.jamming}), expected ({scheme}, jamming={jamming})")
    if _degenerate(q.cfg):
        return _clamp(1.0, scheme, jamming, {"degenerate": "alpha = 0"})
    extra = {}
    if links is None:
        links, extra = _links_for(q)
    s = _Setup(links, q.cfg, q.scenario.fading, ctl or AnalyticControl())
    raw, diag = fn(s)
    diag.update(extra)
    return _clamp(raw, scheme, jamming, diag)


def sop_sc_nojam(q: SopQuery, ctl: AnalyticControl | None = None, links: LinkGains | None = None) -> SopResult:
    return _run(q, "SC", False, _sc_nojam, ctl, links)


def sop_sc_jam(q: SopQuery, ctl: AnalyticControl | None = None, links: LinkGains | None = None) -> SopResult:
    return _run(q, "SC", True, _sc_jam, ctl, links)


def sop_mrc_nojam(q: SopQuery, ctl: AnalyticControl | None = None, links: LinkGains | None = None) -> SopResult:
    return _run(q, "MRC", False, _mrc_nojam, ctl, links)


def sop_mrc_jam(q: SopQuery, ctl: AnalyticControl | None = None, links: LinkGains | None = None) -> SopResult:
    return _run(q, "MRC", True, _mrc_jam, ctl, links)


_DISPATCH = {
    (Scheme.SC, False): sop_sc_nojam,
    (Scheme.SC, True): sop_sc_jam,
    (Scheme.MRC, False): sop_mrc_nojam,
    (Scheme.MRC, True): sop_mrc_jam,
}


def evaluate(q: SopQuery, ctl: AnalyticControl | None = None) -> SopResult:
    """Dispatch on (scheme, jamming). Random-eavesdropper queries return the
    mean-distance lower bound."""
    if q.eavesdropper == "random":
        return sop_lower_bound_random_e(q, ctl)
    return _DISPATCH[(q.scheme, bool(q.jamming))](q, ctl)


def sop_lower_bound_random_e(q: SopQuery, ctl: AnalyticControl | None = None) -> SopResult:
    """Substitute the disc-averaged S-E and relay-E distances into the
    fixed-eavesdropper expression (Jensen's inequality on the distances)."""
    if q.scenario.disc is None:
        raise ValueError("random-eavesdropper bound needs scenario.disc")
    rq = SopQuery(q.scheme, q.jamming, q.cfg, q.scenario, "random")
    links, extra = _links_for(rq)
    res = _DISPATCH[(q.scheme, bool(q.jamming))](rq, ctl, links)
    res.diagnostics.update(extra)
    res.diagnostics["bound"] = "jensen_mean_distance"
    return res
