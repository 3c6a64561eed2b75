"""Singularity-aware Gauss-Legendre quadrature for dilated profiles.

[0, 1] is split at every breakpoint j/n_k, and each piece again at its
midpoint, so every half-piece has at most one singular end.  On a half-piece
ending at a singular point a the substitution x = a +/- h u^p turns an
integrand behaving like |x - a|^gamma into u^(p(gamma+1)-1) times a smooth
factor, which Gauss-Legendre integrates accurately.

Points are generated from the exact rational a plus a floating offset, so
f(n x) is evaluated from the pair (y, 1 - y) with y = {n x} computed without
cancellation; this is what keeps the endpoint behaviour accurate.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .numtheory import ParameterError

DEFAULT_NODES = 48
MAX_POWER = 40.0


@lru_cache(maxsize=16)
def gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def substitution_power(gamma: float) -> float:
    """p with p (gamma + 1) = 5, capped; gamma > -1 is the endpoint exponent."""
    if not gamma > -1:
        raise ParameterError("endpoint exponent must exceed -1")
    return min(MAX_POWER, max(1.0, 5.0 / (gamma + 1)))


def breakpoints(dilations) -> list[Fraction]:
    pts = {Fraction(j, n) for n in dilations for j in range(n + 1)}
    return sorted(pts)


def fractional_pairs(dilations, a: Fraction, t: np.ndarray, side: int):
    """y = {n (a + side t)} and 1 - y for each n, accurate near 0 and 1.

    Valid while n t stays below the distance from n a to the next integer in
    the direction ``side``, which holds inside a half-piece.
    """
    K = len(dilations)
    Y = np.empty((K, t.size))
    Ybar = np.empty((K, t.size))
    for i, n in enumerate(dilations):
        c = (n * a) % 1
        nt = n * t
        if c == 0:
            if side > 0:
                Y[i], Ybar[i] = nt, 1 - nt
            else:
                Y[i], Ybar[i] = 1 - nt, nt
        else:
            Y[i] = float(c) + side * nt
            Ybar[i] = float(1 - c) - side * nt
    return Y, Ybar


def profile_from_pairs(profile, Y, Ybar):
    """Point values f(y) given y and 1 - y separately."""
    from .special import f_alpha_from_pair

    if profile.kind == "sine_extremal":
        return f_alpha_from_pair(profile.alpha, Y, Ybar, "sine")
    if profile.kind == "cosine_extremal":
        return f_alpha_from_pair(profile.alpha, Y, Ybar, "cosine")
    if profile.kind == "bernoulli":
        return np.pi * (Ybar - Y) / 2
    return profile.evaluate(Y)


def integrate_dilated(integrand, profile, dilations, gamma: float,
                      nodes: int = DEFAULT_NODES, power: float | None = None,
                      interval=(Fraction(0), Fraction(1))) -> float:
    """int over ``interval`` of integrand(F) where F[k] = f(n_k x).

    ``integrand`` maps the (K, n) array of profile values to n values.
    ``gamma`` is the worst endpoint exponent of the integrand.
    """
    dilations = [int(n) for n in dilations]
    lo, hi = Fraction(interval[0]), Fraction(interval[1])
    pts = [lo] + [b for b in breakpoints(dilations) if lo < b < hi] + [hi]
    u, w = gauss_legendre_unit(nodes)
    p = substitution_power(gamma) if power is None else power
    up, jac = u**p, p * u ** (p - 1) * w
    total = []
    for a, b in zip(pts, pts[1:]):
        h = float(b - a) / 2
        t = h * up
        for end, side in ((a, 1), (b, -1)):
            Y, Ybar = fractional_pairs(dilations, end, t, side)
            F = profile_from_pairs(profile, Y, Ybar)
            total.append(float(np.dot(integrand(F), jac)) * h)
    return math.fsum(total)
