"""Integer and divisor-sum primitives.

Everything here works on Python integers, so primorials and other large
arguments are exact.  Logarithms follow the clamped convention used
throughout the package: ``log x`` is read as ``max(1, log x)``, which keeps
iterated logarithms defined and non-zero.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SIEVE_LIMIT = 10**7
CACHE_ENV = "GCDLAB_CACHE_DIR"


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ParameterError(ValueError):
    """Invalid algorithm parameter (truncation, cell count, ...)."""


# ---------------------------------------------------------------------------
# primes
# ---------------------------------------------------------------------------

def _sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p::2 * p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


@lru_cache(maxsize=1)
def _cached_primes() -> np.ndarray:
    """Primes up to SIEVE_LIMIT, optionally persisted under $GCDLAB_CACHE_DIR."""
    cache_dir = os.environ.get(CACHE_ENV)
    path = None
    if cache_dir:
        path = os.path.join(cache_dir, f"primes_{SIEVE_LIMIT}.npy")
        if os.path.exists(path):
            arr = np.load(path)
            arr.setflags(write=False)
            return arr
    arr = _sieve(SIEVE_LIMIT)
    if path is not None:
        os.makedirs(cache_dir, exist_ok=True)
        tmp = f"{path[:-4]}.{os.getpid()}.tmp.npy"
        np.save(tmp, arr)
        os.replace(tmp, path)
    arr.setflags(write=False)
    return arr


def primes_up_to(limit: int) -> list[int]:
    """All primes ``<= limit`` in ascending order (empty for limit < 2)."""
    if limit < 2:
        return []
    if limit <= SIEVE_LIMIT:
        primes = _cached_primes()
        return primes[: np.searchsorted(primes, limit, side="right")].tolist()
    return _sieve(limit).tolist()


def first_primes(r: int) -> list[int]:
    """The first ``r`` primes p_1 < p_2 < ... < p_r."""
    if r < 0:
        raise ParameterError("r must be non-negative")
    if r == 0:
        return []
    # p_r < r (log r + log log r) for r >= 6
    bound = 15 if r < 6 else int(r * (math.log(r) + math.log(math.log(r)))) + 1
    return primes_up_to(bound)[:r]


def primorial(r: int) -> int:
    """Product of the first ``r`` primes (exact)."""
    if r < 1:
        raise ParameterError("primorial needs r >= 1")
    return math.prod(first_primes(r))


# ---------------------------------------------------------------------------
# factorisation
# ---------------------------------------------------------------------------

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin; deterministic below 3.3e24 with the fixed bases."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int, rng: random.Random) -> int:
    if n % 2 == 0:
        return 2
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation ``{p: e}`` of a positive integer.

    Trial division against the cached sieve handles every factor below
    ``SIEVE_LIMIT``; a leftover cofactor is split with Pollard-rho (Brent).
    """
    if n < 1:
        raise DomainError("factorize needs n >= 1")
    out: dict[int, int] = {}
    if n == 1:
        return out
    limit = math.isqrt(n)
    for p in _cached_primes():
        p = int(p)
        if p > limit:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = e
            limit = math.isqrt(n)
    if n > 1:
        rng = random.Random(n)
        stack = [n]
        while stack:
            m = stack.pop()
            if m == 1:
                continue
            if is_probable_prime(m):
                out[m] = out.get(m, 0) + 1
                continue
            d = _pollard_brent(m, rng)
            stack.extend((d, m // d))
    return dict(sorted(out.items()))


def divisors(n: int) -> list[int]:
    """Sorted divisors of ``n`` built from its factorisation."""
    divs = [1]
    for p, e in factorize(n).items():
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


# ---------------------------------------------------------------------------
# divisor sums
# ---------------------------------------------------------------------------

def sigma(s: float, k: int) -> float:
    """Divisor sum sigma_s(k) = sum of d**s over the divisors d of k."""
    if k < 1:
        raise DomainError("sigma needs k >= 1")
    if s == 0:
        return float(len(divisors(k)))
    return math.fsum(float(d) ** s for d in divisors(k))


def divisor_count(k: int) -> int:
    return math.prod(e + 1 for e in factorize(k).values())


def sigma_table(s: float, n: int) -> np.ndarray:
    """``out[k] = sigma_s(k)`` for 1 <= k <= n (index 0 unused), by sieving."""
    out = np.zeros(n + 1)
    for d in range(1, n + 1):
        out[d::d] += float(d) ** s
    return out


def clog(x: float) -> float:
    """Clamped logarithm max(1, log x); accepts Python ints of any size."""
    if x <= 0:
        raise DomainError("log of a non-positive number")
    return max(1.0, math.log(x))


def cloglog(x: float) -> float:
    return clog(clog(x))


def clog2(x: float) -> float:
    """Clamped dyadic logarithm max(1, log2 x)."""
    if x <= 0:
        raise DomainError("log of a non-positive number")
    return max(1.0, math.log2(x))


def gronwall_bound(s: float, k: float) -> float:
    """Envelope exp((log k)^(1-s) / ((1-s) log log k)) without the o(1) term."""
    if not 0 < s < 1:
        raise DomainError("gronwall_bound needs s in (0, 1)")
    if k < 1:
        raise DomainError("gronwall_bound needs k >= 1")
    return math.exp(clog(k) ** (1 - s) / ((1 - s) * cloglog(k)))


@dataclass(frozen=True)
class WeylFactorParams:
    alpha: float
    K: float

    def __post_init__(self):
        if not 0.5 < self.alpha < 1:
            raise DomainError("alpha must lie in (1/2, 1)")
        if not self.K > 0:
            raise DomainError("K must be positive")

    @classmethod
    def single(cls, alpha: float) -> "WeylFactorParams":
        return cls(alpha, single_dilation_constant(alpha))

    @classmethod
    def general(cls, alpha: float) -> "WeylFactorParams":
        return cls(alpha, general_dilation_constant(alpha))


def single_dilation_constant(alpha: float) -> float:
    """3/(1-alpha) + 4/sqrt(2 alpha - 1)."""
    return 3 / (1 - alpha) + 4 / math.sqrt(2 * alpha - 1)


def general_dilation_constant(alpha: float) -> float:
    """6/(1-alpha) + 7 (|log(2 alpha - 1)|^(1/2) + 1)."""
    return 6 / (1 - alpha) + 7 * (math.sqrt(abs(math.log(2 * alpha - 1))) + 1)


def weyl_factor(params: WeylFactorParams, k: float, variant: str = "th1") -> float:
    """Weyl multiplier for the single (th1) or general (th2) dilation problem."""
    L = clog(k) ** (1 - params.alpha)
    if variant == "th1":
        return math.exp(params.K * L / cloglog(k))
    if variant == "th2":
        return math.exp(params.K * L / cloglog(k) ** params.alpha)
    raise ParameterError(f"unknown variant {variant!r}")


# ---------------------------------------------------------------------------
# the psi arithmetic function of a profile
# ---------------------------------------------------------------------------

def _g_enclosure(profile, r: int, truncation: int) -> tuple[float, float]:
    """Enclosure for g(r) = sum_j (a_{jr}^2 + b_{jr}^2)."""
    j = np.arange(1, truncation + 1)
    a, b = profile.coefficients(j * r)
    head = math.fsum((a * a + b * b).tolist())
    return head, head + profile.tail_sq(r, truncation)


def bewe_psi(profile, k: int, truncation: int) -> tuple[float, float]:
    """Certified enclosure of psi(k) = sum_{d|k} (d g(d) + G(d)).

    ``g(r)`` is summed over ``j <= truncation``; the dropped tail is bounded
    through the profile's coefficient bound, so the returned pair satisfies
    ``lower <= psi(k) <= upper``.
    """
    if truncation < 1:
        raise ParameterError("truncation must be >= 1")
    if k < 1:
        raise DomainError("psi needs k >= 1")
    divs = divisors(k)
    need = 2 * divs[-1]
    g = [_g_enclosure(profile, r, truncation) for r in range(1, need + 1)]
    g_lo = np.array([0.0] + [t[0] for t in g])
    g_hi = np.array([0.0] + [t[1] for t in g])
    cum_lo, cum_hi = np.cumsum(g_lo), np.cumsum(g_hi)
    lo = math.fsum(d * g_lo[d] + cum_lo[2 * d] for d in divs)
    hi = math.fsum(d * g_hi[d] + cum_hi[2 * d] for d in divs)
    return lo, hi


def bewe_psi_table(profile, n: int, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Enclosures of psi(k) for all k <= n at once.

    ``g(r)`` is accumulated over multiples ``jr <= horizon`` (a sieve), with
    the tail beyond the horizon bounded through ``profile.tail_sq``.
    """
    idx = np.arange(1, horizon + 1)
    a, b = profile.coefficients(idx)
    sq = np.concatenate([[0.0], a * a + b * b])
    m = 2 * n
    g_lo = np.zeros(m + 1)
    g_hi = np.zeros(m + 1)
    for r in range(1, m + 1):
        g_lo[r] = sq[r::r].sum()
        g_hi[r] = g_lo[r] + profile.tail_sq(r, horizon // r)
    cum_lo, cum_hi = np.cumsum(g_lo), np.cumsum(g_hi)
    d = np.arange(1, n + 1)
    term_lo = d * g_lo[1:n + 1] + cum_lo[2 * d]
    term_hi = d * g_hi[1:n + 1] + cum_hi[2 * d]
    psi_lo = np.zeros(n + 1)
    psi_hi = np.zeros(n + 1)
    for dd in range(1, n + 1):
        psi_lo[dd::dd] += term_lo[dd - 1]
        psi_hi[dd::dd] += term_hi[dd - 1]
    return psi_lo, psi_hi
