"""L2 inner products and norms of dilated sums  sum_k c_k f(n_k x).

For f_alpha the norm is a GCD quadratic form (closed form).  For any other
profile the series is truncated and every truncation carries a certified
tail, so results are enclosures ``[lower, upper]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import zeta

from .gcd_spectra import GcdMatrixSpec, quadratic_form
from .numtheory import DomainError, ParameterError, sigma_table
from .profiles import tail_power_sum

EXACT_KINDS = ("sine_extremal", "cosine_extremal", "bernoulli")


class InvariantError(AssertionError):
    """Two independent computations that must agree did not."""


@dataclass(frozen=True)
class CoefficientSequence:
    values: tuple[float, ...]
    start_index: int = 1

    def __post_init__(self):
        if self.start_index < 1:
            raise ParameterError("start_index must be >= 1")
        if not all(math.isfinite(v) for v in self.values):
            raise ParameterError("coefficients must be finite")

    def __len__(self):
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _coeffs(c) -> np.ndarray:
    if isinstance(c, CoefficientSequence):
        return c.array()
    return np.asarray(c, dtype=float)


def _indexed(c) -> np.ndarray:
    """Coefficients as c_1, c_2, ... (zero-padded below start_index)."""
    if isinstance(c, CoefficientSequence):
        return np.concatenate([np.zeros(c.start_index - 1), c.array()])
    return np.asarray(c, dtype=float)


@dataclass(frozen=True)
class NormEnclosure:
    lower: float
    upper: float
    method: str

    def __post_init__(self):
        if self.lower > self.upper:
            raise InvariantError(f"empty enclosure [{self.lower}, {self.upper}]")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def as_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "method": self.method}


def _exact_scale(profile) -> tuple[float, float]:
    """(constant, exponent) with <f(m.), f(n.)> = constant (g^2/(mn))^exponent."""
    if profile.kind in ("sine_extremal", "cosine_extremal"):
        return float(zeta(2 * profile.alpha)) / 2, profile.alpha
    if profile.kind == "bernoulli":
        return math.pi**2 / 12, 1.0
    raise NotImplementedError(profile.kind)


def _point(value: float, method: str = "exact_gcd") -> NormEnclosure:
    # closed forms: widen by a few ulps so rounding cannot empty comparisons
    pad = 4 * np.finfo(float).eps * abs(value)
    return NormEnclosure(value - pad, value + pad, method)


def inner_product(profile, m: int, n: int, truncation: int = 4096) -> NormEnclosure:
    """<f(m.), f(n.)> over [0, 1].

    Only frequencies common to both dilates survive orthogonality; with
    g = gcd(m, n) these are t*lcm(m, n), giving
    1/2 sum_t (a_{tn/g} a_{tm/g} + b_{tn/g} b_{tm/g}).
    """
    if m < 1 or n < 1:
        raise DomainError("dilations must be >= 1")
    if truncation < 1:
        raise ParameterError("truncation must be >= 1")
    g = math.gcd(m, n)
    u, v = m // g, n // g
    if profile.kind in EXACT_KINDS:
        const, a = _exact_scale(profile)
        return _point(const * (g * g / (m * n)) ** a)
    t = np.arange(1, truncation + 1)
    a1, b1 = profile.coefficients(t * v)
    a2, b2 = profile.coefficients(t * u)
    head = 0.5 * math.fsum((a1 * a2 + b1 * b2).tolist())
    # Cauchy-Schwarz on the dropped tail
    tail = 0.5 * math.sqrt(profile.tail_sq(v, truncation) * profile.tail_sq(u, truncation))
    return NormEnclosure(head - tail, head + tail, "parseval_truncated")


def franel_closed(k: int, l: int) -> Fraction:
    g = math.gcd(k, l)
    return Fraction(g * g, 12 * k * l)


def franel_piecewise(k: int, l: int) -> Fraction:
    """int_0^1 ({kx} - 1/2)({lx} - 1/2) dx by exact integration of each
    quadratic piece between consecutive breakpoints (Simpson is exact)."""
    pts = sorted({Fraction(j, k) for j in range(k + 1)} | {Fraction(j, l) for j in range(l + 1)})
    half = Fraction(1, 2)
    total = Fraction(0)
    for a, b in zip(pts, pts[1:]):
        mid = (a + b) / 2
        fk, fl = math.floor(k * mid), math.floor(l * mid)

        def val(x):
            return (k * x - fk - half) * (l * x - fl - half)

        total += (b - a) * (val(a) + 4 * val(mid) + val(b)) / 6
    return total


def franel_exact(k: int, l: int) -> Fraction:
    """gcd(k,l)^2/(12kl), checked against exact piecewise integration."""
    if k < 1 or l < 1:
        raise DomainError("franel_exact needs k, l >= 1")
    if k > 10_000 or l > 10_000:
        raise ParameterError("franel_exact is limited to k, l <= 10^4")
    closed = franel_closed(k, l)
    direct = franel_piecewise(k, l)
    if closed != direct:
        raise InvariantError(f"franel mismatch at ({k}, {l}): {closed} != {direct}")
    return closed


def koksma_constant(profile) -> float:
    """C' with ||sum c_k f(n_k .)||^2 <= C' sum |c_k c_l| gcd^2a/(n_k n_l)^a.

    Each product a_{tu} a_{tv} + b_{tu} b_{tv} is at most 2 C^2 (tu tv)^-a,
    and sum_t t^-2a = zeta(2a).
    """
    return profile.bound_constant**2 * float(zeta(2 * profile.alpha))


def norm_squared(profile, dilations, c, J: int | None = None) -> NormEnclosure:
    """||sum_k c_k f(n_k .)||^2.

    Closed-form profiles go through the GCD quadratic form; others combine
    the Parseval enclosure with the GCD-form majorant.
    """
    c = _coeffs(c)
    dilations = tuple(int(n) for n in dilations)
    if len(dilations) != c.size:
        raise ParameterError("coefficient and dilation lengths differ")
    if not np.any(c):
        return NormEnclosure(0.0, 0.0, "exact_gcd")
    if profile.kind in EXACT_KINDS:
        const, a = _exact_scale(profile)
        order = np.argsort(dilations)
        spec = GcdMatrixSpec(a, tuple(dilations[i] for i in order))
        return _point(const * quadratic_form(spec, c[order]))
    J = J or max(2**14, max(dilations))
    enc = parseval_norm(profile, dilations, c, J)
    order = np.argsort(dilations)
    spec = GcdMatrixSpec(profile.alpha, tuple(dilations[i] for i in order))
    upper = koksma_constant(profile) * quadratic_form(spec, np.abs(c[order]))
    return NormEnclosure(enc.lower, min(enc.upper, upper), "parseval_truncated")


def _has_parts(profile) -> tuple[bool, bool]:
    if profile.kind in ("sine_extremal", "bernoulli"):
        return True, False
    if profile.kind == "cosine_extremal":
        return False, True
    return True, True


def parseval_norm(profile, dilations, c, J: int) -> NormEnclosure:
    """Parseval evaluation through aggregated coefficients.

    A_j = sum_{n_k | j} c_k a_{j/n_k} (B_j likewise) for j <= J; the norm is
    1/2 sum (A_j^2 + B_j^2) plus a tail.  With S = sum_k C |c_k| n_k^a we
    have |A_j|, |B_j| <= S j^-a, so the tail is at most
    1/2 (S_a^2 + S_b^2) J^(1-2a)/(2a-1), S_b = 0 for pure sine profiles.
    """
    c = _coeffs(c)
    dilations = [int(n) for n in dilations]
    if len(dilations) != c.size:
        raise ParameterError("coefficient and dilation lengths differ")
    if J < max(dilations):
        raise ParameterError("J must be at least the largest dilation")
    A = np.zeros(J + 1)
    B = np.zeros(J + 1)
    for ck, n in zip(c, dilations):
        t = np.arange(1, J // n + 1)
        a, b = profile.coefficients(t)
        A[n::n] += ck * a
        B[n::n] += ck * b
    head = 0.5 * math.fsum((A * A + B * B).tolist())
    alpha = profile.alpha
    S = profile.bound_constant * math.fsum(abs(ck) * n**alpha for ck, n in zip(c, dilations))
    has_a, has_b = _has_parts(profile)
    tail = 0.5 * (has_a + has_b) * S * S * tail_power_sum(2 * alpha, J)
    slack = 8 * np.finfo(float).eps * (head + tail) * math.log2(J + 1)
    return NormEnclosure(max(head - slack, 0.0), head + tail + slack, "parseval_truncated")


def quadrature_norm(profile, dilations, c, nodes: int = 48) -> float:
    """Singularity-aware quadrature of (sum c_k f(n_k x))^2."""
    from .quadrature import integrate_dilated
    c = _coeffs(c)
    gamma = 2 * (profile.alpha - 1) if profile.kind != "bernoulli" else 0.0
    return integrate_dilated(lambda F: (c @ F) ** 2, profile, dilations, gamma, nodes)


def sigma_weighted_bound(c, alpha: float, eps: float, M: int, N: int) -> tuple[float, float]:
    """(lhs, rhs) with lhs the GCD form of |c| over indices M..N and
    rhs = sum_{k=M}^{N^2} c_k^2 sigma_{1-2a+eps}(k); c_k = 0 beyond len(c)."""
    s = 1 - 2 * alpha + eps
    if not s < 0:
        raise ParameterError("need 1 - 2 alpha + eps < 0")
    if eps <= 0:
        raise ParameterError("eps must be positive")
    c = np.abs(_indexed(c))
    if not 1 <= M <= N <= c.size:
        raise ParameterError("need 1 <= M <= N <= len(c)")
    spec = GcdMatrixSpec(alpha, tuple(range(M, N + 1)))
    lhs = quadratic_form(spec, c[M - 1:N])
    top = min(N * N, c.size)
    sig = sigma_table(s, top)
    rhs = math.fsum((c[M - 1:top] ** 2 * sig[M:top + 1]).tolist())
    return lhs, rhs
