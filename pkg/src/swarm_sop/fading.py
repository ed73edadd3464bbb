"""Channel-gain distributions built from exponential-polynomial mixtures.

Every gain law used by the link model has a density or CDF of the form

    c0 + sum_j c_j * x**k_j * exp(-a_j * x)

which :class:`ExpPolyMix` represents exactly, with closed-form products,
powers, derivatives and integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

MAX_SEVERITY = 30


def _rate_key(a: float) -> float:
    # merge rates that differ only by rounding noise (13 significant digits)
    return float(f"{a:.13g}")


@dataclass(frozen=True)
class ExpPolyMix:
    """Finite mixture ``constant_offset + sum c * x**k * exp(-a * x)``.

    ``terms`` holds (c, k, a) triples with k a non-negative int. Terms with
    the same (k, a) are merged on construction through :meth:`from_terms`.
    """

    terms: tuple = ()
    constant_offset: float = 0.0

    @classmethod
    def from_terms(cls, terms, constant_offset: float = 0.0, drop_tol: float = 0.0) -> "ExpPolyMix":
        acc: dict[tuple[int, float], list] = {}
        offset = float(constant_offset)
        for c, k, a in terms:
            k = int(k)
            if k < 0:
                raise ValueError("powers must be non-negative")
            if a == 0 and k == 0:
                offset += c
                continue
            key = (k, _rate_key(a))
            if key in acc:
                acc[key][0] += c
            else:
                acc[key] = [float(c), float(a)]
        out = []
        for (k, _), (c, a) in sorted(acc.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            if c != 0.0 and abs(c) > drop_tol:
                out.append((c, k, a))
        return cls(tuple(out), offset)

    @classmethod
    def constant(cls, value: float) -> "ExpPolyMix":
        return cls((), float(value))

    # -- algebra ---------------------------------------------------------

    def _as_list(self):
        out = list(self.terms)
        if self.constant_offset != 0.0:
            out.append((self.constant_offset, 0, 0.0))
        return out

    def __add__(self, other: "ExpPolyMix") -> "ExpPolyMix":
        return ExpPolyMix.from_terms(self.terms + other.terms, self.constant_offset + other.constant_offset)

    def __neg__(self) -> "ExpPolyMix":
        return self.scale(-1.0)

    def __sub__(self, other: "ExpPolyMix") -> "ExpPolyMix":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ExpPolyMix):
            return self.multiply(other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, s: float) -> "ExpPolyMix":
        return ExpPolyMix(tuple((s * c, k, a) for c, k, a in self.terms), s * self.constant_offset)

    def multiply(self, other: "ExpPolyMix") -> "ExpPolyMix":
        prod = []
        for c1, k1, a1 in self._as_list():
            for c2, k2, a2 in other._as_list():
                prod.append((c1 * c2, k1 + k2, a1 + a2))
        return ExpPolyMix.from_terms(prod)

    def integer_power(self, n: int) -> "ExpPolyMix":
        if n < 0:
            raise ValueError("power must be >= 0")
        result = ExpPolyMix.constant(1.0)
        base = self
        while n:
            if n & 1:
                result = result.multiply(base)
            n >>= 1
            if n:
                base = base.multiply(base)
        return result

    def derivative(self) -> "ExpPolyMix":
        out = []
        for c, k, a in self.terms:
            if k > 0:
                out.append((c * k, k - 1, a))
            if a != 0.0:
                out.append((-a * c, k, a))
        return ExpPolyMix.from_terms(out)

    # -- evaluation ------------------------------------------------------

    @cached_property
    def _arrays(self):
        if not self.terms:
            return np.zeros(0), np.zeros(0, dtype=int), np.zeros(0)
        c, k, a = zip(*self.terms)
        return np.array(c, float), np.array(k, int), np.array(a, float)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        c, k, a = self._arrays
        if c.size == 0:
            out = np.full(x.shape, self.constant_offset)
        else:
            xe = x[..., None]
            with np.errstate(over="ignore", invalid="ignore"):
                out = np.sum(c * xe**k * np.exp(-a * xe), axis=-1) + self.constant_offset
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    def integrate_0_to(self, x):
        """Exact integral over [0, x] (x may be an array)."""
        x = np.asarray(x, dtype=float)
        total = self.constant_offset * x
        for c, k, a in self.terms:
            if a > 0:
                piece = math.factorial(k) / a ** (k + 1) * special.gammainc(k + 1, a * x)
            elif a == 0:
                piece = x ** (k + 1) / (k + 1)
            else:
                piece = _int_growing(k, -a, x)
            total = total + c * piece
        return float(total) if np.ndim(total) == 0 else total

    def integrate_0_to_inf(self) -> float:
        if self.constant_offset != 0.0:
            raise ValueError("infinite integral of a non-zero constant diverges")
        s = 0.0
        for c, k, a in self.terms:
            if a <= 0:
                raise ValueError(f"infinite integral needs a > 0, got a={a}")
            s += c * math.exp(math.lgamma(k + 1) - (k + 1) * math.log(a))
        return s

    def moment(self, order: int) -> float:
        """Integral of x**order times the mix over [0, inf)."""
        shifted = ExpPolyMix(tuple((c, k + order, a) for c, k, a in self.terms), 0.0)
        if self.constant_offset != 0.0:
            raise ValueError("moments need a decaying mix")
        return shifted.integrate_0_to_inf()

    def gamma_weights(self):
        """Rewrite a density as sum w_j * Gamma(k_j + 1, rate a_j) density.

        Returns arrays (w, k, a). The weights sum to the total mass.
        """
        c, k, a = self._arrays
        w = c * np.exp(special.gammaln(k + 1) - (k + 1) * np.log(a))
        return w, k, a


def _int_growing(k: int, g: float, x):
    # integral_0^x t^k e^{g t} dt for g > 0
    x = np.asarray(x, dtype=float)
    s = np.zeros_like(x)
    for i in range(k + 1):
        s = s + (-1) ** (k - i) * math.factorial(k) / math.factorial(i) * x**i / g ** (k - i + 1)
    return np.exp(g * x) * s - (-1) ** k * math.factorial(k) / g ** (k + 1)


@dataclass(frozen=True)
class ShadowedRicianParams:
    """Shadowed-Rician fading: severity ``m_S``, half scatter power ``b``,
    line-of-sight power ``Omega``."""

    m_S: int = 5
    b: float = 0.251
    Omega: float = 0.279

    def __post_init__(self):
        if int(self.m_S) != self.m_S or self.m_S < 1:
            raise ValueError(f"m_S must be a positive integer, got {self.m_S}")
        if self.m_S > MAX_SEVERITY:
            raise ValueError(f"m_S must be <= {MAX_SEVERITY}, got {self.m_S}")
        if not self.b > 0:
            raise ValueError(f"b must be > 0, got {self.b}")
        if not self.Omega >= 0:
            raise ValueError(f"Omega must be >= 0, got {self.Omega}")
        object.__setattr__(self, "m_S", int(self.m_S))

    @property
    def A(self) -> float:
        m, b = self.m_S, self.b
        return (2 * b * m / (2 * b * m + self.Omega)) ** m / (2 * b)

    @property
    def B(self) -> float:
        return 1.0 / (2 * self.b)

    @property
    def vartheta(self) -> float:
        return self.Omega / (2 * self.b * self.m_S + self.Omega) / (2 * self.b)

    @property
    def eta(self) -> float:
        return self.B - self.vartheta

    @property
    def mean(self) -> float:
        return 2 * self.b + self.Omega

    @cached_property
    def zeta(self) -> np.ndarray:
        """zeta_l = A (m_S - l)_l vartheta^l / (l!)^2 for l = 0..m_S-1, in log space."""
        m = self.m_S
        out = np.zeros(m)
        log_a = math.log(self.A)
        th = self.vartheta
        for l in range(m):
            if l > 0 and th == 0:
                out[l] = 0.0
                continue
            # (m-l)_l = (m-1)! / (m-l-1)!
            log_poch = math.lgamma(m) - math.lgamma(m - l)
            log_th = l * math.log(th) if l > 0 else 0.0
            out[l] = math.exp(log_a + log_poch + log_th - 2 * math.lgamma(l + 1))
        return out

    @cached_property
    def kappa(self) -> np.ndarray:
        """kappa[l, q] = zeta_l l!/q! eta^-(l+1-q) for q <= l (zero above)."""
        m, eta = self.m_S, self.eta
        out = np.zeros((m, m))
        for l in range(m):
            for q in range(l + 1):
                out[l, q] = self.zeta[l] * math.exp(math.lgamma(l + 1) - math.lgamma(q + 1)) / eta ** (l + 1 - q)
        return out

    @cached_property
    def component_weights(self) -> np.ndarray:
        """Gamma-mixture weights w_l = zeta_l l! / eta^(l+1)."""
        l = np.arange(self.m_S)
        return self.zeta * np.exp(special.gammaln(l + 1) - (l + 1) * np.log(self.eta))


def sr_pdf_mixture(p: ShadowedRicianParams) -> ExpPolyMix:
    return ExpPolyMix.from_terms([(p.zeta[l], l, p.eta) for l in range(p.m_S)])


def sr_cdf_mixture(p: ShadowedRicianParams) -> ExpPolyMix:
    terms = []
    for l in range(p.m_S):
        for q in range(l + 1):
            terms.append((-p.kappa[l, q], q, p.eta))
    return ExpPolyMix.from_terms(terms, constant_offset=1.0)


def sr_ccdf_coefficients(p: ShadowedRicianParams) -> np.ndarray:
    """K_q = sum_l kappa[l, q], so that 1 - F(x) = sum_q K_q x^q e^{-eta x}."""
    return p.kappa.sum(axis=0)


def rayleigh_gain_pdf() -> ExpPolyMix:
    return ExpPolyMix.from_terms([(1.0, 0, 1.0)])


def rayleigh_gain_cdf() -> ExpPolyMix:
    return ExpPolyMix.from_terms([(-1.0, 0, 1.0)], constant_offset=1.0)


def sample_sr_gain(p: ShadowedRicianParams, rng: np.random.Generator, size=None):
    """Exact draws: pick component l with weight w_l, then Gamma(l + 1, rate eta)."""
    w = p.component_weights
    n = 1 if size is None else int(np.prod(size))
    if p.m_S == 1:
        shape = np.ones(n)
    else:
        shape = rng.choice(p.m_S, size=n, p=w / w.sum()) + 1.0
    g = rng.gamma(shape, 1.0 / p.eta)
    if size is None:
        return float(g[0])
    return g.reshape(size)


def sample_rayleigh_gain(rng: np.random.Generator, size=None):
    return rng.standard_exponential(size)
