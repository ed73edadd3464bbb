"""Special-function kernel for the SOP closed forms.

The Phi/Theta families are one-dimensional integrals of exponential-rational
integrands. Each has a finite or series closed form evaluated here with a
cancellation guard: when the sum of term magnitudes exceeds the result by
more than ``SeriesControl.max_cancellation`` the series value is discarded
and the defining integral is integrated adaptively instead.

Definitions (mu > 0 throughout):

    Phi1(u; v, mu)            = int_u^inf x^v e^{-mu x} dx
    Phi2(g, mu; b)            = int_0^inf e^{-mu x} (x + b)^{-g} dx
    Theta1(v, g, mu; a, b)    = int_0^inf x^v ((x+a)/(x+b))^g e^{-mu x} dx
    Theta2(v, g, mu, rho; b)  = int_0^inf x^v (x/(x+b))^g e^{-mu x} e^{-rho x/(x+b)} dx
    Theta3(v, g, l, mu, rho; a, b, xi)
                              = int_0^inf x^v ((x+a)/(x+b))^g (x/(x+xi))^l
                                            e^{-rho x/(x+c)} e^{-mu x} dx,  c = xi by default
    Theta4(u; v, g, mu, rho; b) = int_0^u x^v (x/(b-x))^g e^{-mu x} e^{-rho x/(b-x)} dx
    Theta5(u; v, g, mu; a, b) = int_u^inf x^v ((x+a)/(x+b))^g e^{-mu x} dx
    Theta6(u; v, g, mu; a, b) = int_0^u x^v ((x+a)/(x+b))^g e^{-mu x} dx
    Theta7(v, g, mu, rho; a)  = int_0^inf t^v (t+a)^g e^{-mu t} e^{-rho (t+a)} dt
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

EPS = np.finfo(float).eps
# Taylor series of exp(-rho x/(x+c)) are only used while rho c stays below this
SERIES_EXP_LIMIT = 50.0
# beyond this decay exponent the e^{-mu w} ladders reach subnormal numbers and
# lose their relative precision before the e^{mu beta} rescaling
LADDER_EXP_LIMIT = 600.0


class NumericalError(RuntimeError):
    """Raised when neither a series nor quadrature reaches the requested accuracy."""

    def __init__(self, message: str, estimate: float | None = None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class _SeriesFailure(Exception):
    pass


@dataclass(frozen=True)
class SeriesControl:
    rel_tol: float = 1e-12
    max_terms: int = 500
    # largest tolerated ratio sum|terms| / |sum| before a series is abandoned
    max_cancellation: float = 1e6

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


@dataclass(frozen=True)
class QuadControl:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    # relative tail mass dropped when a semi-infinite range is truncated
    tail_eps: float = 1e-17

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")

    def tail_cutoff(self, rate: float, power: float = 0.0, start: float = 0.0) -> float:
        """Upper bound X beyond which int_X^inf x^power e^{-rate x} is below
        ``tail_eps`` of the integral over [start, inf)."""
        if rate <= 0:
            raise ValueError("tail cutoff needs a positive decay rate")
        x = special.gammainccinv(power + 1.0, self.tail_eps) / rate
        return max(x, start + x)


DEFAULT_SERIES = SeriesControl()
DEFAULT_QUAD = QuadControl()


def _check_cancellation(value: float, abs_sum: float, ctl: SeriesControl):
    if not (math.isfinite(value) and math.isfinite(abs_sum)):
        raise _SeriesFailure("non-finite series terms")
    if abs_sum == 0.0:
        return
    if value == 0.0 or abs_sum / abs(value) > ctl.max_cancellation:
        raise _SeriesFailure("cancellation exceeds limit")


# -- quadrature ------------------------------------------------------------------


def quad_1d(f, a: float, b: float, ctl: QuadControl = DEFAULT_QUAD, points=None) -> float:
    """Adaptive 1-D quadrature (QUADPACK). ``b`` may be ``np.inf``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        kw = {}
        if points is not None and math.isfinite(b):
            kw["points"] = points
        res = integrate.quad(f, a, b, epsabs=ctl.abs_tol, epsrel=ctl.rel_tol,
                             limit=ctl.max_subdivisions, full_output=1, **kw)
    val, err = res[0], res[1]
    if len(res) > 3:
        tol = max(ctl.abs_tol, ctl.rel_tol * abs(val))
        # QUADPACK flags roundoff before the target is met; accept small misses
        if not (err <= 10 * tol and math.isfinite(val)):
            raise NumericalError(f"quadrature did not converge: {res[3]}", val, err)
    return float(val)


def quad_2d(f, x_range, y_range, ctl: QuadControl = DEFAULT_QUAD) -> float:
    """int_{x0}^{x1} int_{y0(x)}^{y1(x)} f(y, x) dy dx by nested adaptive quadrature.

    ``y_range`` is a pair of numbers or a callable x -> (y0, y1).
    """
    inner_ctl = QuadControl(rel_tol=ctl.rel_tol / 10, abs_tol=ctl.abs_tol / 10,
                            max_subdivisions=ctl.max_subdivisions, tail_eps=ctl.tail_eps)

    def outer(x):
        y0, y1 = y_range(x) if callable(y_range) else y_range
        return quad_1d(lambda y: f(y, x), y0, y1, inner_ctl)

    return quad_1d(outer, x_range[0], x_range[1], ctl)


# Gauss-Kronrod 10/21 abscissae and weights (QUADPACK qk21)
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208980563086, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651138])

GK_NODES = np.concatenate([-_XGK[:10], [0.0], _XGK[:10][::-1]])
GK_WK = np.concatenate([_WGK[:10], [_WGK[10]], _WGK[:10][::-1]])
GK_WG = np.zeros(21)
for _i in range(1, 10, 2):
    GK_WG[_i] = GK_WG[20 - _i] = _WG[(_i - 1) // 2]


def integrate_batch(f, lo, hi, *, rel_tol: float = 1e-9, abs_tol: float = 1e-13,
                    init_panels: int = 4, max_panels: int = 4096, raise_on_fail: bool = True):
    """Adaptive Gauss-Kronrod quadrature of many integrals sharing one mesh.

    Row i is int_{lo[i]}^{hi[i]} f(x) dx. The unit interval is split into
    panels; every row is mapped onto the same panels, so one call of ``f``
    evaluates all rows at once. ``f`` receives x of shape (M, n) and returns
    shape (M, n) or (M, n, *C) for vector-valued integrands.

    Returns (values, errors) with shape (M,) or (M, *C).
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    lo, hi = np.broadcast_arrays(lo, hi)
    width = hi - lo
    edges = np.linspace(0.0, 1.0, init_panels + 1)
    todo_a, todo_b = edges[:-1], edges[1:]
    done_a, done_b, done_k, done_e = [], [], [], []
    while True:
        half = 0.5 * (todo_b - todo_a)
        mid = 0.5 * (todo_b + todo_a)
        s = mid[:, None] + half[:, None] * GK_NODES[None, :]  # (P, 21)
        x = lo[:, None] + width[:, None] * s.reshape(1, -1)
        fx = np.asarray(f(x), dtype=float)
        m = lo.shape[0]
        fx = fx.reshape((m, len(todo_a), 21) + fx.shape[2:])
        scale = (width[:, None] * half[None, :]).reshape((m, len(todo_a)) + (1,) * (fx.ndim - 3))
        k = np.einsum("mpn...,n->mp...", fx, GK_WK) * scale
        g = np.einsum("mpn...,n->mp...", fx, GK_WG) * scale
        e = np.abs(k - g)
        # panel axis first for bookkeeping
        done_a.extend(todo_a)
        done_b.extend(todo_b)
        done_k.extend(np.moveaxis(k, 1, 0))
        done_e.extend(np.moveaxis(e, 1, 0))
        ks = np.array(done_k)
        es = np.array(done_e)
        total = ks.sum(axis=0)
        err = es.sum(axis=0)
        if not np.all(np.isfinite(total)):
            if raise_on_fail:
                raise NumericalError("non-finite integrand in batch quadrature")
            return total, err
        tol = np.maximum(abs_tol, rel_tol * np.abs(total))
        if np.all(err <= tol):
            return total, err
        widths = np.array(done_b) - np.array(done_a)
        ratio = (es / tol).reshape(len(done_a), -1).max(axis=1)
        split = ratio > widths
        if not split.any():
            split[np.argmax(ratio)] = True
        if len(done_a) + split.sum() > max_panels:
            if raise_on_fail:
                raise NumericalError("batch quadrature exceeded panel budget",
                                     float(np.max(np.abs(total))), float(np.max(err)))
            return total, err
        keep = ~split
        da, db = np.array(done_a), np.array(done_b)
        sa, sb = da[split], db[split]
        mids = 0.5 * (sa + sb)
        todo_a = np.concatenate([sa, mids])
        todo_b = np.concatenate([mids, sb])
        done_a = list(da[keep])
        done_b = list(db[keep])
        done_k = list(ks[keep])
        done_e = list(es[keep])


# -- exponential integrals ----------------------------------------------------------


def exp_integral_Ei(x: float) -> float:
    """Principal-value Ei(x) for x < 0 (where Ei(x) = -E1(-x))."""
    if not x < 0:
        raise ValueError("exp_integral_Ei is only defined here for x < 0")
    return float(special.expi(x))


def _phi1_pos(u: float, v: int, mu: float) -> float:
    # e^{-mu u} sum_k v!/k! u^k / mu^(v-k+1), all terms positive
    if u == 0.0:
        return math.exp(math.lgamma(v + 1) - (v + 1) * math.log(mu))
    lu = math.log(u)
    s = 0.0
    for k in range(v + 1):
        s += math.exp(math.lgamma(v + 1) - math.lgamma(k + 1) + k * lu - mu * u - (v - k + 1) * math.log(mu))
    return s


def phi1_ei_branch(u: float, v: int, mu: float):
    """Negative-order Phi1 through Ei plus a finite sum. Returns (value, abs_sum)."""
    n = -v
    z = mu * u
    lead = (-1) ** n * mu ** (n - 1) * special.expi(-z) / math.factorial(n - 1)
    s = 0.0
    sa = 0.0
    for k in range(n - 1):
        t = math.factorial(n - k - 2) * (-z) ** k
        s += t
        sa += abs(t)
    pref = math.exp(-z) * u ** (1 - n) / math.factorial(n - 1)
    return lead + pref * s, abs(lead) + pref * sa


def phi1(u: float, v: int, mu: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """int_u^inf x^v e^{-mu x} dx for integer v."""
    v = int(v)
    if not mu > 0:
        raise ValueError("phi1 needs mu > 0")
    if u < 0:
        raise ValueError("phi1 needs u >= 0")
    if v >= 0:
        return _phi1_pos(u, v, mu)
    if u == 0:
        raise ValueError("phi1 diverges for v < 0 at u = 0")
    try:
        val, sa = phi1_ei_branch(u, v, mu)
        _check_cancellation(val, sa, ctl)
        if val > 0:
            return float(val)
    except (_SeriesFailure, OverflowError):
        pass
    return float(u ** (v + 1) * special.expn(-v, mu * u))


def phi1_ladder(w, rmin: int, rmax: int, mu: float) -> np.ndarray:
    """Phi1(w; r, mu) for r = rmin..rmax, vectorised over w (w > 0 if rmin < 0).

    Returns shape (rmax - rmin + 1, *w.shape).
    """
    w = np.asarray(w, dtype=float)
    out = np.empty((rmax - rmin + 1,) + w.shape)
    z = mu * w
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        if rmin < 0:
            n = np.arange(1, -rmin + 1)
            en = special.expn(n.reshape((-1,) + (1,) * w.ndim), z[None, ...])
            for i, nn in enumerate(n):
                r = -nn
                if r > rmax:
                    continue
                out[r - rmin] = w ** (1 - nn) * en[i]
        if rmax >= 0:
            ez = np.exp(-z)
            prev = ez / mu
            if 0 >= rmin:
                out[0 - rmin] = prev
            for r in range(1, rmax + 1):
                prev = (w**r * ez + r * prev) / mu
                if r >= rmin:
                    out[r - rmin] = prev
    return out


def phi2(gamma: int, mu: float, beta: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """int_0^inf e^{-mu x} / (x + beta)^gamma dx for integer gamma >= 1."""
    gamma = int(gamma)
    if gamma < 1:
        raise ValueError("phi2 needs gamma >= 1")
    if not (mu > 0 and beta > 0):
        raise ValueError("phi2 needs mu > 0 and beta > 0")
    z = beta * mu
    try:
        if z > LADDER_EXP_LIMIT:
            raise _SeriesFailure("Ei would underflow")
        with np.errstate(over="raise"):
            lead = -math.exp(z) * special.expi(-z)
        s = 0.0
        sa = 0.0
        for g in range(1, gamma):
            t = math.factorial(g - 1) / (-z) ** g
            s += t
            sa += abs(t)
        pref = (-mu) ** (gamma - 1) / math.factorial(gamma - 1)
        val = pref * (s + lead)
        _check_cancellation(val, abs(pref) * (sa + abs(lead)), ctl)
        if val > 0:
            return float(val)
    except (_SeriesFailure, OverflowError, FloatingPointError):
        pass
    return quad_1d(lambda x: math.exp(-mu * x) / (x + beta) ** gamma, 0.0, np.inf)


def _phi2_or_pos(k: int, c: float, mu: float, ctl: SeriesControl) -> float:
    """int_0^inf (x + c)^k e^{-mu x} dx for any integer k (c > 0)."""
    if k < 0:
        return phi2(-k, mu, c, ctl)
    # binomial in c keeps every term positive
    return sum(math.comb(k, i) * c ** (k - i) * math.factorial(i) / mu ** (i + 1) for i in range(k + 1))


# -- Theta integrands (used by the quadrature fallbacks and tests) -------------------


def theta1_integrand(v, gamma, mu, alpha, beta):
    return lambda x: x**v * ((x + alpha) / (x + beta)) ** gamma * math.exp(-mu * x)


def theta2_integrand(v, gamma, mu, rho, beta):
    def f(x):
        r = x / (x + beta)
        return x**v * r**gamma * math.exp(-mu * x - rho * r)
    return f


def theta3_integrand(v, gamma, lam, mu, rho, alpha, beta, xi, exp_pole=None):
    c = xi if exp_pole is None else exp_pole

    def f(x):
        return (x**v * ((x + alpha) / (x + beta)) ** gamma * (x / (x + xi)) ** lam
                * math.exp(-rho * x / (x + c) - mu * x))
    return f


def theta4_integrand(v, gamma, mu, rho, beta):
    def f(x):
        d = beta - x
        if d <= 0:
            return 0.0
        r = x / d
        return x**v * r**gamma * math.exp(-mu * x - rho * r)
    return f


def theta7_integrand(v, gamma, mu, rho, alpha):
    return lambda t: t**v * (t + alpha) ** gamma * math.exp(-mu * t - rho * (t + alpha))


def _semi_infinite(f, start, rate, power, quad: QuadControl) -> float:
    hi = quad.tail_cutoff(rate, power, start)
    return quad_1d(f, start, hi, quad)


# -- Theta closed forms -------------------------------------------------------------------


def _theta5_series(u, v, gamma, mu, alpha, beta, ctl):
    # substitute t = x + beta; expand x^v and ((t + alpha - beta)/t)^gamma
    w = u + beta
    if not w > 0:
        raise _SeriesFailure("u + beta must be positive")
    if mu * w > LADDER_EXP_LIMIT:
        raise _SeriesFailure("ladder would underflow")
    lad = phi1_ladder(np.array(w), -gamma, v, mu)
    s = 0.0
    sa = 0.0
    for m in range(v + 1):
        cm = math.comb(v, m) * (-beta) ** (v - m)
        for n in range(gamma + 1):
            t = cm * math.comb(gamma, n) * (alpha - beta) ** (gamma - n) * float(lad[m + n])
            s += t
            sa += abs(t)
    with np.errstate(over="raise"):
        try:
            pref = math.exp(mu * beta)
        except OverflowError:
            raise _SeriesFailure("overflow")
    val, sa = pref * s, pref * sa
    _check_cancellation(val, sa, ctl)
    return val


def theta1(v, gamma, mu, alpha, beta, ctl: SeriesControl = DEFAULT_SERIES, quad: QuadControl = DEFAULT_QUAD) -> float:
    """int_0^inf x^v ((x+alpha)/(x+beta))^gamma e^{-mu x} dx, beta > 0."""
    _check_common(mu)
    if not beta > 0:
        raise ValueError("theta1 needs beta > 0")
    try:
        return float(_theta5_series(0.0, int(v), int(gamma), mu, alpha, beta, ctl))
    except (_SeriesFailure, OverflowError, ZeroDivisionError):
        return _semi_infinite(theta1_integrand(v, gamma, mu, alpha, beta), 0.0, mu, v, quad)


def theta5(u, v, gamma, mu, alpha, beta, ctl: SeriesControl = DEFAULT_SERIES, quad: QuadControl = DEFAULT_QUAD) -> float:
    """int_u^inf x^v ((x+alpha)/(x+beta))^gamma e^{-mu x} dx, u + beta > 0."""
    _check_common(mu)
    if not (u >= 0 and u + beta > 0):
        raise ValueError("theta5 needs u >= 0 and u + beta > 0")
    try:
        return float(_theta5_series(float(u), int(v), int(gamma), mu, alpha, beta, ctl))
    except (_SeriesFailure, OverflowError, ZeroDivisionError):
        return _semi_infinite(theta1_integrand(v, gamma, mu, alpha, beta), float(u), mu, v, quad)


def theta6(u, v, gamma, mu, alpha, beta, ctl: SeriesControl = DEFAULT_SERIES, quad: QuadControl = DEFAULT_QUAD) -> float:
    """int_0^u x^v ((x+alpha)/(x+beta))^gamma e^{-mu x} dx.

    The closed form (difference of two Phi1 ladders) needs beta > 0; otherwise,
    or when it cancels badly, the integral is computed directly.
    """
    _check_common(mu)
    if u < 0:
        raise ValueError("theta6 needs u >= 0")
    if u == 0:
        return 0.0
    v, gamma = int(v), int(gamma)
    if beta > 0 and mu * (u + beta) <= LADDER_EXP_LIMIT:
        try:
            lo = phi1_ladder(np.array(beta), -gamma, v, mu)
            hi = phi1_ladder(np.array(u + beta), -gamma, v, mu)
            s = 0.0
            sa = 0.0
            for m in range(v + 1):
                cm = math.comb(v, m) * (-beta) ** (v - m)
                for n in range(gamma + 1):
                    d = float(lo[m + n]) - float(hi[m + n])
                    t = cm * math.comb(gamma, n) * (alpha - beta) ** (gamma - n) * d
                    s += t
                    sa += abs(cm * math.comb(gamma, n) * (alpha - beta) ** (gamma - n)) * float(lo[m + n])
            pref = math.exp(mu * beta)
            val = pref * s
            _check_cancellation(val, pref * sa, ctl)
            return float(val)
        except (_SeriesFailure, OverflowError):
            pass
    if beta <= 0 and -beta <= u:
        raise ValueError("theta6 integrand has a pole inside [0, u]")
    hi = min(float(u), quad.tail_cutoff(mu, v))
    return quad_1d(theta1_integrand(v, gamma, mu, alpha, beta), 0.0, hi, quad)


def _theta2_series(v, gamma, mu, rho, beta, ctl):
    # e^{-rho x/(x+b)} = e^{-rho} sum_n (rho b)^n / n! (x+b)^{-n}; then t = x + b
    if rho * beta > SERIES_EXP_LIMIT:
        raise _SeriesFailure("exponential series needs too many terms")
    if mu * beta > LADDER_EXP_LIMIT:
        raise _SeriesFailure("ladder would underflow")
    N = v + gamma
    pref = math.exp(mu * beta - rho)
    if not math.isfinite(pref):
        raise _SeriesFailure("overflow")
    total = 0.0
    abs_total = 0.0
    small = 0
    # Phi1(b; m - gamma - n) for m = 0..N, n up to max_terms
    lad = None
    lad_depth = 0
    coef = [math.comb(N, m) * (-beta) ** (N - m) for m in range(N + 1)]
    for n in range(ctl.max_terms):
        if n + gamma + 1 > lad_depth:
            lad_depth = max(2 * lad_depth, n + gamma + 32)
            lad = phi1_ladder(np.array(beta), -lad_depth, N, mu)
        inner = 0.0
        inner_abs = 0.0
        for m in range(N + 1):
            ph = float(lad[m - gamma - n + lad_depth])
            inner += coef[m] * ph
            inner_abs += abs(coef[m]) * ph
        w = math.exp(n * math.log(rho * beta) - math.lgamma(n + 1)) if rho * beta > 0 else (1.0 if n == 0 else 0.0)
        term = w * inner
        total += term
        abs_total += w * inner_abs
        if abs(term) < ctl.rel_tol * abs(total):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
        if w == 0.0 and n > 0:
            break
    else:
        raise _SeriesFailure("series did not converge")
    val = pref * total
    _check_cancellation(val, pref * abs_total, ctl)
    return val


def theta2(v, gamma, mu, rho, beta, ctl: SeriesControl = DEFAULT_SERIES, quad: QuadControl = DEFAULT_QUAD) -> float:
    _check_common(mu)
    if not (beta > 0 and rho >= 0):
        raise ValueError("theta2 needs beta > 0 and rho >= 0")
    try:
        return float(_theta2_series(int(v), int(gamma), mu, rho, beta, ctl))
    except (_SeriesFailure, OverflowError, ZeroDivisionError):
        return _semi_infinite(theta2_integrand(v, gamma, mu, rho, beta), 0.0, mu, v, quad)


def partial_fractions(a: int, b: int, beta: float, xi: float):
    """Coefficients of 1/((x+beta)^a (x+xi)^b) = sum_k A[k]/(x+beta)^k + sum_k B[k]/(x+xi)^k.

    Returns (A, B) indexed by k = 1..a and k = 1..b (index 0 unused).
    """
    d = xi - beta
    A = np.zeros(a + 1)
    B = np.zeros(b + 1)
    for k in range(1, a + 1):
        A[k] = (-1) ** (a - k) * math.comb(a + b - k - 1, a - k) / d ** (a + b - k)
    for k in range(1, b + 1):
        B[k] = (-1) ** (b - k) * math.comb(a + b - k - 1, b - k) / (-d) ** (a + b - k)
    return A, B


def _theta3_series(v, gamma, lam, mu, rho, alpha, beta, xi, exp_pole, ctl):
    """Taylor series in the exponential, binomial expansion of the ratio and
    partial fractions of the two poles. exp_pole selects which pole carries
    the exponential argument (xi or beta)."""
    on_xi = exp_pole is None or exp_pole == xi
    c = xi if on_xi else beta
    if not (beta > 0 and xi > 0 and xi != beta):
        raise _SeriesFailure("poles must be distinct and positive")
    if rho * c > SERIES_EXP_LIMIT:
        raise _SeriesFailure("exponential series needs too many terms")
    N = v + lam
    # M[c][k] = int x^N (x+c)^(-k) e^{-mu x} dx, expanding x^N = ((x+c) - c)^N
    cache = {}

    def single(cc, k):
        key = (cc, k)
        if key not in cache:
            s = 0.0
            sa = 0.0
            for i in range(N + 1):
                t = math.comb(N, i) * (-cc) ** (N - i) * _phi2_or_pos(i - k, cc, mu, ctl)
                s += t
                sa += abs(t)
            cache[key] = (s, sa)
        return cache[key]

    def two_pole(sb, sx):
        # int x^N (x+beta)^-sb (x+xi)^-sx e^{-mu x} dx
        if sb == 0 and sx == 0:
            return math.factorial(N) / mu ** (N + 1), math.factorial(N) / mu ** (N + 1)
        if sb == 0:
            return single(xi, sx)
        if sx == 0:
            return single(beta, sb)
        A, B = partial_fractions(sb, sx, beta, xi)
        s = 0.0
        sa = 0.0
        for k in range(1, sb + 1):
            val, ab = single(beta, k)
            s += A[k] * val
            sa += abs(A[k]) * ab
        for k in range(1, sx + 1):
            val, ab = single(xi, k)
            s += B[k] * val
            sa += abs(B[k]) * ab
        return s, sa

    pref = math.exp(-rho)
    total = 0.0
    abs_total = 0.0
    small = 0
    for p in range(ctl.max_terms):
        w = math.exp(p * math.log(rho * c) - math.lgamma(p + 1)) if rho * c > 0 else (1.0 if p == 0 else 0.0)
        g = 0.0
        ga = 0.0
        for n in range(gamma + 1):
            cn = math.comb(gamma, n) * (alpha - beta) ** n
            sb = n + (0 if on_xi else p)
            sx = lam + (p if on_xi else 0)
            val, ab = two_pole(sb, sx)
            g += cn * val
            ga += abs(cn) * ab
        term = w * g
        total += term
        abs_total += w * ga
        if w == 0.0 and p > 0:
            break
        if abs(term) < ctl.rel_tol * abs(total):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
    else:
        raise _SeriesFailure("series did not converge")
    val = pref * total
    _check_cancellation(val, pref * abs_total, ctl)
    return val


def theta3(v, gamma, lam, mu, rho, alpha, beta, xi, exp_pole=None,
           ctl: SeriesControl = DEFAULT_SERIES, quad: QuadControl = DEFAULT_QUAD) -> float:
    """Theta3 with the exponential argument x/(x + xi) (default) or x/(x + exp_pole)."""
    _check_common(mu)
    if not (beta > 0 and xi > 0 and rho >= 0):
        raise ValueError("theta3 needs beta > 0, xi > 0, rho >= 0")
    if exp_pole is not None and exp_pole not in (xi, beta):
        raise ValueError("exp_pole must equal xi or beta")
    try:
        return float(_theta3_series(int(v), int(gamma), int(lam), mu, rho, alpha, beta, xi, exp_pole, ctl))
    except (_SeriesFailure, OverflowError, ZeroDivisionError):
        f = theta3_integrand(v, gamma, lam, mu, rho, alpha, beta, xi, exp_pole)
        return _semi_infinite(f, 0.0, mu, v + lam, quad)


def _theta4_series(u, v, gamma, mu, rho, beta, ctl):
    # t = beta - x: x^(v+g) (beta-x)^(-g) = (beta - t)^(v+g) t^(-g);
    # e^{-mu x} = e^{-mu beta} sum mu^n t^n / n!; e^{-rho x/(beta-x)} = e^{rho} sum (-rho beta)^p t^-p / p!
    if not (0 <= u < beta):
        raise _SeriesFailure("series needs 0 <= u < beta")
    lo = beta - u
    if rho * beta / lo > 30 or mu * beta > 30:
        raise _SeriesFailure("series would cancel catastrophically")
    N = v + gamma
    total = 0.0
    abs_total = 0.0
    lb, llo = math.log(beta), math.log(lo)

    def seg(e):
        # int_lo^beta t^e dt
        if e == -1:
            return lb - llo
        return (beta ** (e + 1) - lo ** (e + 1)) / (e + 1)

    for m in range(N + 1):
        cm = math.comb(N, m) * (-1) ** m * beta ** (N - m)
        sub = 0.0
        sub_abs = 0.0
        small_n = 0
        for n in range(ctl.max_terms):
            wn = math.exp(n * math.log(mu) - math.lgamma(n + 1)) if mu > 0 else float(n == 0)
            inner = 0.0
            inner_abs = 0.0
            small_p = 0
            for p in range(ctl.max_terms):
                wp = (-1) ** p * math.exp(p * math.log(rho * beta) - math.lgamma(p + 1)) if rho > 0 else float(p == 0)
                t = wp * seg(m + n - p - gamma)
                inner += t
                inner_abs += abs(t)
                if rho == 0:
                    break
                if abs(t) < ctl.rel_tol * abs(inner):
                    small_p += 1
                    if small_p >= 3:
                        break
                else:
                    small_p = 0
            else:
                raise _SeriesFailure("inner series did not converge")
            term = wn * inner
            sub += term
            sub_abs += wn * inner_abs
            if abs(term) < ctl.rel_tol * abs(sub):
                small_n += 1
                if small_n >= 3:
                    break
            else:
                small_n = 0
        else:
            raise _SeriesFailure("series did not converge")
        total += cm * sub
        abs_total += abs(cm) * sub_abs
    pref = math.exp(rho - mu * beta)
    val = pref * total
    _check_cancellation(val, pref * abs_total, ctl)
    return val


def theta4(u, v, gamma, mu, rho, beta, ctl: SeriesControl = DEFAULT_SERIES, quad: QuadControl = DEFAULT_QUAD) -> float:
    """int_0^u x^v (x/(beta-x))^gamma e^{-mu x} e^{-rho x/(beta-x)} dx for 0 <= u <= beta.

    At u = beta the series diverges term by term and quadrature is used.
    """
    _check_common(mu)
    if not (beta > 0 and 0 <= u <= beta and rho >= 0):
        raise ValueError("theta4 needs 0 <= u <= beta and rho >= 0")
    if u == 0:
        return 0.0
    try:
        return float(_theta4_series(float(u), int(v), int(gamma), mu, rho, beta, ctl))
    except (_SeriesFailure, OverflowError, ZeroDivisionError):
        hi = min(float(u), quad.tail_cutoff(mu, v + gamma))
        f = theta4_integrand(v, gamma, mu, rho, beta)
        return quad_1d(f, 0.0, hi, quad)


def theta7(v, gamma, mu, rho, alpha) -> float:
    """int_0^inf t^v (t+alpha)^gamma e^{-mu t} e^{-rho (t+alpha)} dt (finite binomial sum)."""
    _check_common(mu)
    if not (rho >= 0 and alpha >= 0):
        raise ValueError("theta7 needs rho >= 0 and alpha >= 0")
    v, gamma = int(v), int(gamma)
    rate = mu + rho
    s = 0.0
    for i in range(gamma + 1):
        s += math.comb(gamma, i) * alpha ** (gamma - i) * math.exp(
            math.lgamma(v + i + 1) - (v + i + 1) * math.log(rate))
    return math.exp(-rho * alpha) * s


def _check_common(mu):
    if not mu > 0:
        raise ValueError("mu must be > 0")


# -- vectorised families used by the SOP evaluators -------------------------------


def _ratio_ladders(lad, c, gmax, vmax):
    """S[g][m] = int t^m ((t + c)/t)^g e^{-mu t} over the ladder's range,
    built by S_g(m) = S_{g-1}(m) + c S_{g-1}(m-1). lad[r + gmax] = Phi(r).

    Also returns the magnitude-propagated ladders for the cancellation guard.
    """
    cur = lad
    cur_abs = np.abs(lad)
    out = [(cur[gmax:], cur_abs[gmax:])]
    ac = np.abs(c)
    for g in range(1, gmax + 1):
        cur = cur[1:] + c * cur[:-1]
        cur_abs = cur_abs[1:] + ac * cur_abs[:-1]
        out.append((cur[gmax - g:], cur_abs[gmax - g:]))
    return out  # out[g][0][m] for m = 0..vmax


def _ratio_sum(lad_hi, lad_lo, coef, gammas, vmax, mu, alpha, beta, shift):
    """sum_{v,g} coef[v, g] * e^{mu beta} sum_m C(v,m)(-beta)^(v-m) S_g(m).

    lad_lo is None for the semi-infinite (Theta5) case, else the integral is
    S(lo) - S(hi) (Theta6).
    """
    gmax = int(max(gammas))
    c = alpha - beta
    hi = _ratio_ladders(lad_hi, c, gmax, vmax)
    lo = _ratio_ladders(lad_lo, c, gmax, vmax) if lad_lo is not None else None
    # B[v, m] = C(v, m) (-beta)^(v - m), zero above the diagonal
    k = np.arange(vmax + 1)
    pw = (-np.asarray(beta, dtype=float))[None, ...] ** k.reshape((-1,) + (1,) * np.ndim(beta))
    comb = np.array([[math.comb(v, m) if m <= v else 0 for m in k] for v in k], dtype=float)
    diff = np.clip(k[:, None] - k[None, :], 0, None)
    B = comb.reshape(comb.shape + (1,) * np.ndim(beta)) * pw[diff]
    val = 0.0
    mag = 0.0
    for gi, g in enumerate(gammas):
        s_hi, a_hi = hi[g]
        if lo is not None:
            s_lo, a_lo = lo[g]
            s_g = s_lo - s_hi
            a_g = a_lo
        else:
            s_g, a_g = s_hi, a_hi
        cf = coef[:, gi]
        val = val + np.einsum("v...,vm...,m...->...", cf, B, s_g[: vmax + 1])
        mag = mag + np.einsum("v...,vm...,m...->...", np.abs(cf), np.abs(B), a_g[: vmax + 1])
    with np.errstate(over="ignore", invalid="ignore"):
        pref = np.exp(mu * beta - shift)
        return pref * val, pref * mag


def _family_integrand(vmax, gammas, coef, mu, alpha, beta):
    """x -> sum_{v,g} coef[v,g] x^v ((x+alpha)/(x+beta))^g e^{-mu x}; arrays shaped (M, n)."""
    gam = np.asarray(gammas)

    def f(x):
        r = (x + alpha[:, None]) / (x + beta[:, None])
        xp = x[None, ...] ** np.arange(vmax + 1).reshape(-1, 1, 1)      # (V, M, n)
        rp = r[None, ...] ** gam.reshape(-1, 1, 1)                       # (G, M, n)
        cf = coef.reshape(coef.shape[0], coef.shape[1], -1)              # (V, G, M)
        s = np.einsum("vgm,vmn,gmn->mn", cf, xp, rp)
        return s * np.exp(-mu * x)
    return f


def theta5_sum(u, coef, gammas, mu, alpha, beta, ctl: SeriesControl = DEFAULT_SERIES,
               quad: QuadControl = DEFAULT_QUAD):
    """Elementwise sum_{v,g} coef[v, g] * Theta5(u; v, g, mu; alpha, beta).

    ``u``, ``alpha`` and ``beta`` broadcast to a common element shape S;
    ``coef`` has shape (V, G) or (V, G, *S) and ``gammas`` lists the G values.
    Elements where the closed form cancels badly are integrated directly.
    Theta1 is the case u = 0.
    """
    u, alpha, beta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (u, alpha, beta)))
    shape = u.shape
    u, alpha, beta = u.ravel(), alpha.ravel(), beta.ravel()
    coef = np.asarray(coef, dtype=float)
    V = coef.shape[0] - 1
    coef = np.broadcast_to(coef.reshape(coef.shape[:2] + (-1,)), coef.shape[:2] + (u.size,))
    gmax = int(max(gammas))
    w = u + beta
    if np.any(w <= 0):
        raise ValueError("theta5 needs u + beta > 0")
    lad = phi1_ladder(w, -gmax, V, mu)
    val, mag = _ratio_sum(lad, None, coef, list(gammas), V, mu, alpha, beta, 0.0)
    bad = ~np.isfinite(val) | ~np.isfinite(mag) | (mag > ctl.max_cancellation * np.abs(val)) & (mag > 0)
    bad |= mu * w > LADDER_EXP_LIMIT
    if np.any(bad):
        idx = np.nonzero(bad)[0]
        val = np.array(val, dtype=float)
        val[idx] = _family_quad(idx, u, None, coef, gammas, V, mu, alpha, beta, quad)
    return val.reshape(shape)


def theta6_sum(u, coef, gammas, mu, alpha, beta, ctl: SeriesControl = DEFAULT_SERIES,
               quad: QuadControl = DEFAULT_QUAD):
    """Elementwise sum_{v,g} coef[v, g] * Theta6(u; v, g, mu; alpha, beta).

    The closed form is used where beta > 0 and it does not cancel badly;
    the remaining elements are integrated directly over [0, u].
    """
    u, alpha, beta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (u, alpha, beta)))
    shape = u.shape
    u, alpha, beta = u.ravel(), alpha.ravel(), beta.ravel()
    coef = np.asarray(coef, dtype=float)
    V = coef.shape[0] - 1
    coef = np.broadcast_to(coef.reshape(coef.shape[:2] + (-1,)), coef.shape[:2] + (u.size,))
    gmax = int(max(gammas))
    val = np.zeros(u.size)
    bad = np.ones(u.size, dtype=bool)
    pos = (beta > 0) & (mu * (u + beta) <= LADDER_EXP_LIMIT)
    if np.any(pos):
        i = np.nonzero(pos)[0]
        lad_lo = phi1_ladder(beta[i], -gmax, V, mu)
        lad_hi = phi1_ladder(u[i] + beta[i], -gmax, V, mu)
        v_i, m_i = _ratio_sum(lad_hi, lad_lo, coef[:, :, i], list(gammas), V, mu, alpha[i], beta[i], 0.0)
        ok = np.isfinite(v_i) & np.isfinite(m_i) & ((m_i <= ctl.max_cancellation * np.abs(v_i)) | (m_i == 0))
        val[i[ok]] = v_i[ok]
        bad[i[ok]] = False
    bad &= u > 0
    if np.any(bad):
        idx = np.nonzero(bad)[0]
        val[idx] = _family_quad(idx, np.zeros_like(u), u, coef, gammas, V, mu, alpha, beta, quad)
    return val.reshape(shape)


def _family_quad(idx, lo, hi, coef, gammas, V, mu, alpha, beta, quad: QuadControl):
    lo_i = lo[idx]
    tail = np.full(idx.size, special.gammainccinv(V + 1.0, quad.tail_eps) / mu)
    if hi is None:
        # semi-infinite: the ratio factor is bounded by its value at the start and 1
        hi_i = lo_i + tail + 10.0 / mu
    else:
        hi_i = np.minimum(hi[idx], tail + lo_i)
    f = _family_integrand(V, gammas, coef[:, :, idx], mu, alpha[idx], beta[idx])
    vals, _ = integrate_batch(f, lo_i, hi_i, rel_tol=quad.rel_tol, abs_tol=quad.abs_tol)
    return vals
