"""Hurwitz zeta, the extremal functions f_alpha / bar f_alpha / f_1, and
dyadic coarsening of dilated profiles.

f_alpha is never summed from its Fourier series (the sine series is only
conditionally convergent); it is the odd part of zeta(1 - alpha, x):

    f_alpha(x)     = A_s (zeta(1-a, x) - zeta(1-a, 1-x)),  A_s = (2pi)^a / (4 Gamma(a) sin(pi a/2))
    bar f_alpha(x) = A_c (zeta(1-a, x) + zeta(1-a, 1-x)),  A_c = (2pi)^a / (4 Gamma(a) cos(pi a/2))

Antiderivatives come from d/dx zeta(-a, x) = a zeta(1-a, x), which gives
exact cell integrals for the coarsening operator.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .numtheory import DomainError, ParameterError

# B_2 .. B_18
_BERNOULLI = [Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
              Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6),
              Fraction(-3617, 510), Fraction(43867, 798)]
EM_TERMS = 8
_EPS = np.finfo(float).eps


class AccuracyError(ArithmeticError):
    """Requested tolerance is below what double precision can deliver."""


def _em_coefficients(s: float, order: int) -> tuple[list[float], float]:
    """Correction coefficients B_2k/(2k)! * s(s+1)...(s+2k-2) and the
    remainder coefficient for the first omitted term."""
    coeffs = []
    poch = s  # s(s+1)...(s+2k-2) for k = 1
    fact = 2.0
    for k in range(1, order + 2):
        if k > 1:
            poch *= (s + 2 * k - 3) * (s + 2 * k - 2)
            fact *= (2 * k - 1) * (2 * k)
        coeffs.append(float(_BERNOULLI[k - 1]) * poch / fact)
    rem = abs(coeffs.pop())
    return coeffs, rem


def _em_cutoff(s: float, xmin: float, tol: float, order: int = EM_TERMS) -> int:
    coeffs, rem = _em_coefficients(s, order)
    expo = s + 2 * order + 1
    M = 4
    # first omitted term bounds the remainder for real s > -(2 order + 1)
    while rem * (M + xmin) ** (-expo) > tol and M < 10_000:
        M += 2
    return M


def hurwitz_zeta_em(s: float, x, tol: float = 1e-13, order: int = EM_TERMS):
    """Euler-Maclaurin evaluation of zeta(s, x) for real s != 1 and x >= 0.

    Vectorised over ``x``.  ``x = 0`` is allowed for s < 0, where the n = 0
    term vanishes.  The cut-off M is chosen so the first omitted Bernoulli
    term is below ``tol``.
    """
    if s == 1:
        raise DomainError("pole at s = 1")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or (s >= 0 and np.any(x == 0)):
        raise DomainError("x out of range for Hurwitz zeta")
    M = _em_cutoff(s, float(np.min(x)) if x.size else 0.0, tol, order)
    coeffs, _ = _em_coefficients(s, order)
    n = np.arange(M, dtype=float)
    shifted = x[..., None] + n
    with np.errstate(divide="ignore"):
        head = np.where(shifted > 0, shifted, np.inf if s > 0 else 0.0) ** (-s)
    total = head.sum(axis=-1)
    xm = x + M
    total = total + xm ** (1 - s) / (s - 1) + 0.5 * xm ** (-s)
    for k, c in enumerate(coeffs, start=1):
        total = total + c * xm ** (-s - 2 * k + 1)
    return total if total.ndim else float(total)


def hurwitz_zeta(s: float, x, tol: float = 1e-12):
    """zeta(s, x) for s in (0, 1) and x strictly inside (0, 1)."""
    if not 0 < s < 1:
        raise DomainError("hurwitz_zeta needs s in (0, 1)")
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0) or np.any(xa >= 1):
        raise DomainError("hurwitz_zeta needs x in (0, 1)")
    # partial sum magnitude is ~ x^-s; rounding alone costs a few ulps of it
    floor = 8 * _EPS * float(np.max(xa ** (-s)) + 2)
    if tol < floor:
        raise AccuracyError(f"tolerance {tol:g} below attainable {floor:g}")
    return hurwitz_zeta_em(s, x, tol=tol / 4)


def _check_alpha(alpha: float):
    if not 0.5 < alpha < 1:
        raise DomainError("alpha must lie in (1/2, 1)")


def f_alpha_constant(alpha: float, parity: str = "sine") -> float:
    trig = math.sin if parity == "sine" else math.cos
    return (2 * math.pi) ** alpha / (4 * math.gamma(alpha) * trig(math.pi * alpha / 2))


def eval_f_alpha(alpha: float, x, parity: str = "sine"):
    """f_alpha (parity='sine') or bar f_alpha (parity='cosine') on (0, 1)."""
    _check_alpha(alpha)
    if parity not in ("sine", "cosine"):
        raise ParameterError(f"unknown parity {parity!r}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0) or np.any(xa >= 1):
        raise DomainError("f_alpha is unbounded at 0 and 1; need x in (0, 1)")
    s = 1 - alpha
    z = hurwitz_zeta_em(s, np.stack([xa, 1 - xa]))
    sign = -1.0 if parity == "sine" else 1.0
    out = f_alpha_constant(alpha, parity) * (z[0] + sign * z[1])
    return out if np.ndim(out) else float(out)


def f_alpha_from_pair(alpha: float, y, ybar, parity: str = "sine"):
    """f_alpha at y given y and 1 - y as separate, accurately rounded inputs."""
    y, ybar = np.asarray(y, dtype=float), np.asarray(ybar, dtype=float)
    z = hurwitz_zeta_em(1 - alpha, np.stack([y, ybar]))
    sign = -1.0 if parity == "sine" else 1.0
    return f_alpha_constant(alpha, parity) * (z[0] + sign * z[1])


def f_alpha_singular_split(alpha: float, t, parity: str = "sine"):
    """f_alpha(t) = A t^(alpha-1) + R(t) with R analytic near t = 0.

    Returns ``(A, R(t))`` for small t in [0, 1); used where the singular
    power must be integrated in closed form.
    """
    s = 1 - alpha
    t = np.asarray(t, dtype=float)
    A = f_alpha_constant(alpha, parity)
    sign = -1.0 if parity == "sine" else 1.0
    # zeta(s, t) = t^-s + zeta(s, t + 1)
    rest = hurwitz_zeta_em(s, np.stack([t + 1, 1 - t]))
    return A, A * (rest[0] + sign * rest[1])


def eval_f1(x):
    """f_1(x) = pi (1/2 - {x}); periodic, defined on all of R."""
    x = np.asarray(x, dtype=float)
    out = math.pi * (0.5 - (x - np.floor(x)))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# antiderivatives and coarsening
# ---------------------------------------------------------------------------

def antiderivative(profile, y):
    """A periodic antiderivative of the profile, evaluated on [0, 1]."""
    y = np.asarray(y, dtype=float)
    if profile.kind == "bernoulli":
        return math.pi * (y / 2 - y * y / 2)
    if profile.kind in ("sine_extremal", "cosine_extremal"):
        a = profile.alpha
        parity = "sine" if profile.kind == "sine_extremal" else "cosine"
        z = hurwitz_zeta_em(-a, np.stack([y, 1 - y]))
        sign = 1.0 if parity == "sine" else -1.0
        return f_alpha_constant(a, parity) * (z[0] + sign * z[1]) / a
    raise NotImplementedError(f"no closed antiderivative for {profile.kind!r}")


class PiecewiseConstant:
    """Step function on the uniform m-cell partition of [0, 1)."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)
        self.m = self.values.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.floor((x - np.floor(x)) * self.m).astype(np.int64)
        return self.values[np.minimum(idx, self.m - 1)]

    def norm_sq(self) -> float:
        return float(np.mean(self.values**2))

    def mean(self) -> float:
        return float(np.mean(self.values))


class DilatedProfile:
    """The analytic function x -> f(k x) for a profile f and integer k."""

    def __init__(self, profile, k: int = 1):
        self.profile, self.k = profile, int(k)

    def __call__(self, x):
        return self.profile.evaluate(self.k * np.asarray(x, dtype=float))

    def cell_integrals(self, m: int) -> np.ndarray:
        """int over [j/m, (j+1)/m) of f(k x) dx for j = 0..m-1 (exact)."""
        k = self.k
        # k x runs over [kj/m, k(j+1)/m]; split at integers, periodicity of F
        j = np.arange(m + 1)
        whole, rem = np.divmod(k * j, m)
        F = antiderivative(self.profile, rem / m)
        # mean zero => F(1) == F(0), so integer crossings contribute nothing
        return np.diff(F) / k


def dyadic_coarsen(g, m: int):
    """[g]_m: replace g by its averages over the cells [j/m, (j+1)/m).

    ``g`` may be a :class:`DilatedProfile` (exact cell integrals from the
    closed antiderivative), a :class:`PiecewiseConstant`, or a 1-D array of
    equally spaced samples whose length is a multiple of ``m``.
    """
    if m < 1:
        raise ParameterError("m must be >= 1")
    if isinstance(g, DilatedProfile):
        return PiecewiseConstant(m * g.cell_integrals(m))
    if isinstance(g, PiecewiseConstant):
        if g.m % m == 0:
            return PiecewiseConstant(g.values.reshape(m, -1).mean(axis=1))
        # general m: exact overlap weights between the two partitions
        edges = np.union1d(np.arange(g.m + 1) / g.m, np.arange(m + 1) / m)
        mids = (edges[:-1] + edges[1:]) / 2
        w = np.diff(edges)
        cell = np.minimum((mids * m).astype(np.int64), m - 1)
        vals = np.bincount(cell, weights=w * g(mids), minlength=m) * m
        return PiecewiseConstant(vals)
    arr = np.asarray(g, dtype=float)
    if arr.ndim != 1 or arr.size % m:
        raise ParameterError("sample count must be a multiple of m")
    return PiecewiseConstant(arr.reshape(m, -1).mean(axis=1))


def coarsening_error(profile, k: int, m: int) -> float:
    """|| f(k.) - [f(k.)]_m ||_2 via ||g||^2 - ||[g]_m||^2 (projection)."""
    cells = dyadic_coarsen(DilatedProfile(profile, k), m)
    gg = l2_norm_sq(profile)
    return math.sqrt(max(gg - cells.norm_sq(), 0.0))


def l2_norm_sq(profile) -> float:
    """||f||^2 = (1/2) sum_j (a_j^2 + b_j^2), closed form where known."""
    if profile.kind in ("sine_extremal", "cosine_extremal"):
        from scipy.special import zeta
        return float(zeta(2 * profile.alpha)) / 2
    if profile.kind == "bernoulli":
        return math.pi**2 / 12
    raise NotImplementedError(profile.kind)
