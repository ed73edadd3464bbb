"""Independent reference evaluators used only by the tests.

These integrate the outage event directly with scipy's adaptive quadrature,
conditioning on the gains one at a time. They share no code with the Theta
closed forms or the batched Gauss-Kronrod integrator in the package.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from swarm_sop.composite import max_gain_dist, sum_gain_dist
from swarm_sop.fading import ShadowedRicianParams


def sr_pdf(p: ShadowedRicianParams, x):
    # textbook form: A e^{-B x} 1F1(m; 1; vartheta x)
    return p.A * np.exp(-p.B * x) * special.hyp1f1(p.m_S, 1.0, p.vartheta * x)


def sr_cdf(p: ShadowedRicianParams, x):
    return integrate.quad(lambda t: sr_pdf(p, t), 0.0, x, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


class DirectSop:
    """Outage probability Pr{gamma_D < gamma_S gamma_E} by nested quadrature."""

    def __init__(self, links, cfg, fading: ShadowedRicianParams, tol=1e-9):
        self.L, self.cfg, self.p = links, cfg, fading
        eps, gs = cfg.epsilon, cfg.gamma_S
        self.eps, self.gs = eps, gs
        self.ad = 1.0 / (eps * links.rd)
        self.ae = 1.0 / (eps * links.re)
        self.rho = links.sr / links.se
        self.X = max_gain_dist(fading, cfg.U)
        self.tol = tol
        self.top = 60.0 / fading.eta

    def _q(self, f, a, b):
        if b <= a:
            return 0.0
        return integrate.quad(f, a, b, epsabs=self.tol * 1e-2, epsrel=self.tol, limit=200)[0]

    def lx(self, s):
        return float(self.X.laplace(max(s, 0.0)))

    def fz(self, x):
        return float(sr_pdf(self.p, x))

    def Fz(self, x):
        return 1.0 if x >= self.top else sr_cdf(self.p, x)

    def _d(self, y):
        return y / (y + self.ad)

    def sc_nojam(self):
        # non-outage needs Z below the relay threshold and W below X * rho D/gs
        def g(y):
            zt = self.ae * self._d(y) / self.gs / (1.0 - self._d(y) / self.gs)
            return self.fz(y) * self.Fz(zt) * (1.0 - self.lx(self.rho * self._d(y) / self.gs))
        return 1.0 - self._q(g, 0.0, self.top)

    def mrc_nojam(self):
        def g(y):
            dy = self._d(y) / self.gs
            zt = self.ae * dy / (1.0 - dy)

            def h(z):
                return self.fz(z) * (1.0 - self.lx(self.rho * (dy - z / (z + self.ae))))
            return self.fz(y) * self._q(h, 0.0, min(zt, self.top))
        return 1.0 - self._q(g, 0.0, self.top)

    def _jam(self, scheme, pj_re):
        def inner(t):
            k = 1.0 + pj_re * t

            def g(y):
                dy = self._d(y) / self.gs
                zt = k * self.ae * dy / (1.0 - dy)
                if scheme == "SC":
                    return self.fz(y) * self.Fz(zt) * (1.0 - self.lx(self.rho * dy))

                def h(z):
                    return self.fz(z) * (1.0 - self.lx(self.rho * (dy - z / (z + k * self.ae))))
                return self.fz(y) * self._q(h, 0.0, min(zt, self.top))
            return self._q(g, 0.0, self.top)
        return inner

    def with_jamming(self, scheme):
        U = self.cfg.U
        pj_re = self.cfg.delta * self.eps * self.cfg.psi * self.L.sr * self.p.mean * self.L.re
        inner = self._jam(scheme, pj_re)
        if U == 1:
            return 1.0 - inner(0.0)
        J = sum_gain_dist(self.p, U - 1)
        c = J.poly_coefficients()
        eta = self.p.eta

        def fj(t):
            return float(sum(ci * t**d for d, ci in enumerate(c)) * math.exp(-eta * t))
        hi = special.gammainccinv(c.size, 1e-13) / eta
        # inner(t) moves on the scale 1/pj_re, far below the bulk of f_J;
        # a single adaptive span misses that and loses ~1e-7
        edges = [0.0] + [10.0**k / pj_re for k in range(-2, 8) if 10.0**k / pj_re < hi] + [hi]
        return 1.0 - sum(self._q(lambda t: fj(t) * inner(t), a, b) for a, b in zip(edges[:-1], edges[1:]))

    def sop(self, scheme, jamming):
        if jamming:
            return self.with_jamming(scheme)
        return self.sc_nojam() if scheme == "SC" else self.mrc_nojam()
