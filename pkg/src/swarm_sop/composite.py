"""Composite gains: the best of U relay links and the sum of U-1 jammer links.

Both laws come out as exponential-polynomial mixtures. The fast paths use
polynomial powers/convolutions; the literal multi-index expansions are kept
for small instances as cross-checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .fading import ExpPolyMix, ShadowedRicianParams, sr_cdf_mixture


@dataclass(frozen=True)
class MaxGainDist:
    """Law of the maximum of U i.i.d. shadowed-Rician gains."""

    U: int
    cdf: ExpPolyMix
    pdf: ExpPolyMix

    def gamma_components(self):
        """pdf as sum w_j Gamma(k_j + 1, a_j); weights alternate in sign and sum to 1."""
        return self.pdf.gamma_weights()

    def laplace(self, s):
        """E[exp(-s X)] for s >= 0 (array input allowed)."""
        w, k, a = self.gamma_components()
        s = np.asarray(s, dtype=float)[..., None]
        out = np.sum(w * (a / (a + s)) ** (k + 1), axis=-1)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SumGainDist:
    """Law of the sum of ``count`` i.i.d. shadowed-Rician gains.

    Every term shares the decay rate ``eta``: the density is
    sum_s weights[s-1] * Gamma(s, eta) with shapes s = 1..count*m_S.
    ``count == 0`` is the point mass at zero and has no density.
    """

    count: int
    eta: float
    shapes: np.ndarray
    weights: np.ndarray

    @property
    def is_point_mass(self) -> bool:
        return self.count == 0

    @property
    def pdf(self) -> ExpPolyMix:
        if self.is_point_mass:
            raise ValueError("a sum of zero gains has no density")
        terms = []
        for s, w in zip(self.shapes, self.weights):
            c = w * math.exp(s * math.log(self.eta) - math.lgamma(s))
            terms.append((c, int(s) - 1, self.eta))
        return ExpPolyMix.from_terms(terms)

    def poly_coefficients(self) -> np.ndarray:
        """c[d] with pdf(t) = sum_d c[d] t^d exp(-eta t)."""
        if self.is_point_mass:
            raise ValueError("a sum of zero gains has no density")
        c = np.zeros(int(self.shapes.max()))
        for s, w in zip(self.shapes, self.weights):
            c[int(s) - 1] = w * math.exp(s * math.log(self.eta) - math.lgamma(s))
        return c

    def mean(self) -> float:
        if self.is_point_mass:
            return 0.0
        return float(np.sum(self.weights * self.shapes) / self.eta)


def max_gain_dist(p: ShadowedRicianParams, U: int) -> MaxGainDist:
    if int(U) != U or U < 1:
        raise ValueError(f"U must be a positive integer, got {U}")
    cdf = sr_cdf_mixture(p).integer_power(int(U))
    return MaxGainDist(int(U), cdf, cdf.derivative())


def sum_gain_dist(p: ShadowedRicianParams, count: int) -> SumGainDist:
    """Sum of ``count`` gains via powers of the Gamma-shape generating polynomial.

    A single gain is sum_l w_l Gamma(l + 1, eta); its generating polynomial is
    W(z) = sum_l w_l z^(l+1), and the n-fold sum has shape weights W(z)^n.
    """
    if int(count) != count or count < 0:
        raise ValueError(f"count must be a non-negative integer, got {count}")
    count = int(count)
    if count == 0:
        return SumGainDist(0, p.eta, np.zeros(0, dtype=int), np.zeros(0))
    base = np.concatenate([[0.0], p.component_weights])  # index = shape
    poly = np.array([1.0])
    for _ in range(count):
        poly = np.convolve(poly, base)
    shapes = np.nonzero(poly)[0]
    return SumGainDist(count, p.eta, shapes.astype(int), poly[shapes])


# -- literal multi-index expansions (reference only, small instances) ----------


def max_cdf_tilde_sum(p: ShadowedRicianParams, U: int, x):
    """Evaluate F_X(x) by enumerating ordered distinct index tuples and
    per-factor (l, q) choices. Cost grows like U! * (m_S^2)^U."""
    x = np.asarray(x, dtype=float)
    pairs = [(l, q) for l in range(p.m_S) for q in range(l + 1)]
    total = np.zeros_like(x)
    for u in range(U + 1):
        n_tuples = sum(1 for _ in itertools.permutations(range(U), u))
        acc = np.zeros_like(x)
        for choice in itertools.product(pairs, repeat=u):
            kap = 1.0
            chi = 0
            for l, q in choice:
                kap *= p.kappa[l, q]
                chi += q
            acc = acc + kap * x**chi * np.exp(-u * p.eta * x)
        total = total + (-1) ** u / math.factorial(u) * n_tuples * acc
    return total


def max_pdf_tilde_sum(p: ShadowedRicianParams, U: int, x):
    """f_X(x) = U * sum_lX zeta_lX x^lX e^{-eta x} * (tilde-sum over U-1 factors)."""
    x = np.asarray(x, dtype=float)
    single = sum(p.zeta[l] * x**l * np.exp(-p.eta * x) for l in range(p.m_S))
    return U * single * max_cdf_tilde_sum(p, U - 1, x)


def sum_pdf_hat_sum(p: ShadowedRicianParams, count: int, t):
    """f_J(t) by enumerating every (k_1..k_count) index tuple."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for ks in itertools.product(range(p.m_S), repeat=count):
        chi = sum(k + 1 for k in ks)
        coef = 1.0
        for k in ks:
            coef *= p.zeta[k] * math.factorial(k)
        coef /= math.factorial(chi - 1)
        total = total + coef * t ** (chi - 1) * np.exp(-p.eta * t)
    return total


def sum_pdf_hat_terms(p: ShadowedRicianParams, count: int) -> ExpPolyMix:
    """Literal hat-sum collected into an ExpPolyMix (for term-by-term comparison)."""
    terms = []
    for ks in itertools.product(range(p.m_S), repeat=count):
        chi = sum(k + 1 for k in ks)
        coef = 1.0
        for k in ks:
            coef *= p.zeta[k] * math.factorial(k)
        terms.append((coef / math.factorial(chi - 1), chi - 1, p.eta))
    return ExpPolyMix.from_terms(terms)
