"""mpmath references for the special-function closed forms: each is the
defining integral evaluated at 30 digits, plus random parameter draws."""

from __future__ import annotations

import mpmath as mp
import numpy as np

mp.mp.dps = 30


def close(got, ref, rel=1e-8, abs_=1e-12) -> bool:
    return abs(float(got) - float(ref)) <= max(rel * abs(float(ref)), abs_)


def _q(f, a, b):
    pts = [a, b] if b != mp.inf else [a, a + 1, a + 10, a + 100, mp.inf]
    return mp.quad(f, pts)


def phi1(u, v, mu):
    return _q(lambda x: x**v * mp.exp(-mu * x), mp.mpf(u), mp.inf)


def phi2(g, mu, beta):
    return _q(lambda x: mp.exp(-mu * x) / (x + beta) ** g, mp.mpf(0), mp.inf)


def theta5(u, v, g, mu, a, b):
    return _q(lambda x: x**v * ((x + a) / (x + b)) ** g * mp.exp(-mu * x), mp.mpf(u), mp.inf)


def theta1(v, g, mu, a, b):
    return theta5(0, v, g, mu, a, b)


def theta6(u, v, g, mu, a, b):
    return _q(lambda x: x**v * ((x + a) / (x + b)) ** g * mp.exp(-mu * x), mp.mpf(0), mp.mpf(u))


def theta2(v, g, mu, rho, b):
    return _q(lambda x: x**v * (x / (x + b)) ** g * mp.exp(-mu * x - rho * x / (x + b)), mp.mpf(0), mp.inf)


def theta3(v, g, lam, mu, rho, a, b, xi, c=None):
    c = xi if c is None else c
    return _q(lambda x: x**v * ((x + a) / (x + b)) ** g * (x / (x + xi)) ** lam
              * mp.exp(-rho * x / (x + c) - mu * x), mp.mpf(0), mp.inf)


def theta4(u, v, g, mu, rho, b):
    def f(x):
        if x >= b:
            return mp.mpf(0)
        return x**v * (x / (b - x)) ** g * mp.exp(-mu * x - rho * x / (b - x))
    return mp.quad(f, [0, mp.mpf(u) / 2, mp.mpf(u)])


def theta7(v, g, mu, rho, a):
    return _q(lambda t: t**v * (t + a) ** g * mp.exp(-mu * t - rho * (t + a)), mp.mpf(0), mp.inf)


def draws(rng: np.random.Generator, n: int):
    """n parameter dictionaries spanning the ranges the SOP evaluators use."""
    out = []
    for _ in range(n):
        b = float(rng.uniform(0.05, 5.0))
        xi = float(rng.uniform(0.05, 5.0))
        while abs(xi - b) < 0.05:
            xi = float(rng.uniform(0.05, 5.0))
        out.append(dict(
            u=float(rng.uniform(0.0, 5.0)), v=int(rng.integers(0, 9)), g=int(rng.integers(0, 7)),
            lam=int(rng.integers(0, 5)), mu=float(rng.uniform(0.2, 5.0)), rho=float(rng.uniform(0.0, 10.0)),
            a=float(rng.uniform(0.0, 5.0)), b=b, xi=xi, frac=float(rng.uniform(0.01, 0.99)),
            nv=int(rng.integers(1, 6)), pole=bool(rng.integers(0, 2)),
        ))
    return out
