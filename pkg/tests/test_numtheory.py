import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import zeta

from gcdlab.numtheory import (
    DomainError, ParameterError, WeylFactorParams, bewe_psi, bewe_psi_table,
    clog, cloglog, divisor_count, divisors, factorize, first_primes,
    gronwall_bound, primes_up_to, primorial, sigma, sigma_table,
    single_dilation_constant, weyl_factor,
)
from gcdlab.profiles import log_damped_profile, sine_extremal


def _is_prime(n):
    return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))


def test_primes_small():
    assert primes_up_to(10) == [2, 3, 5, 7]
    assert primes_up_to(2) == [2]
    assert primes_up_to(1) == []
    assert primes_up_to(-5) == []


def test_primes_count_matches_trial_division():
    assert len(primes_up_to(100)) == 25
    assert primes_up_to(1000) == [n for n in range(1000) if _is_prime(n)]


def test_first_primes():
    assert first_primes(6) == [2, 3, 5, 7, 11, 13]
    assert first_primes(0) == []


def test_primorial():
    assert primorial(1) == 2
    assert primorial(4) == 210
    assert primorial(10) == 6469693230
    assert primorial(20) == math.prod(primes_up_to(71))
    with pytest.raises(ParameterError):
        primorial(0)


def test_factorize_roundtrip():
    rng = random.Random(3)
    for n in [1, 2, 97, 2**40, 600851475143, 10**18 + 9, primorial(15)] + \
            [rng.randrange(1, 10**12) for _ in range(50)]:
        f = factorize(n)
        assert math.prod(p**e for p, e in f.items()) == n
        assert all(_is_prime(p) for p in f if p < 10**6)


def test_factorize_large_semiprime():
    p, q = 1000000007, 998244353
    assert factorize(p * q) == {q: 1, p: 1}


def test_divisors():
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    assert divisors(1) == [1]


def test_sigma_examples():
    assert sigma(-1, 6) == pytest.approx(2.0, rel=1e-15)
    assert sigma(0.3, 1) == 1.0
    assert sigma(-0.75, 4) == pytest.approx(1 + 2**-0.75 + 4**-0.75, rel=1e-15)
    assert sigma(-0.75, 4) == pytest.approx(1.948157, abs=1e-6)


def test_sigma_zero_is_divisor_count():
    for k in range(1, 500):
        assert sigma(0, k) == divisor_count(k) == sum(1 for d in range(1, k + 1) if k % d == 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10**6), st.integers(1, 10**6), st.floats(-1.5, 1.5))
def test_sigma_multiplicative(m, n, s):
    if math.gcd(m, n) != 1:
        return
    assert sigma(s, m * n) == pytest.approx(sigma(s, m) * sigma(s, n), rel=1e-12)


def test_sigma_submultiplicative_exhaustive():
    tab = sigma_table(-0.5, 200 * 200)
    for j in range(1, 201):
        for d in range(1, 201):
            assert tab[j * d] <= tab[j] * tab[d] * (1 + 1e-12)


def test_sigma_table_matches_pointwise():
    tab = sigma_table(-0.3, 300)
    for k in range(1, 301):
        assert tab[k] == pytest.approx(sigma(-0.3, k), rel=1e-13)


def test_sigma_average_value():
    n = 10**6
    avg = sigma_table(-0.5, n)[1:].mean()
    assert abs(avg / zeta(1.5) - 1) <= 0.01


def test_clamped_logs():
    assert clog(1.0) == 1.0
    assert clog(math.e**3) == pytest.approx(3.0)
    assert cloglog(10.0) == 1.0
    with pytest.raises(DomainError):
        clog(0.0)


def test_gronwall_examples():
    assert gronwall_bound(0.5, 1) == pytest.approx(math.e**2, rel=1e-14)
    assert gronwall_bound(0.5, math.exp(math.e)) == pytest.approx(math.exp(2 * math.sqrt(math.e)),
                                                                   rel=1e-12)
    with pytest.raises(DomainError):
        gronwall_bound(1.0, 10)
    with pytest.raises(DomainError):
        gronwall_bound(0.0, 10)


def test_gronwall_primorial_ratio():
    for r in range(1, 13):
        k = primorial(r)
        assert sigma(-0.5, k) / gronwall_bound(0.5, k) <= 1.5


def test_weyl_factor_examples():
    assert single_dilation_constant(0.75) == pytest.approx(12 + 4 / math.sqrt(0.5), rel=1e-15)
    assert single_dilation_constant(0.75) == pytest.approx(17.656854, abs=1e-6)
    assert weyl_factor(WeylFactorParams(0.75, 1.0), 1, "th1") == pytest.approx(math.e)
    with pytest.raises(DomainError):
        WeylFactorParams(0.4, 1.0)
    with pytest.raises(ParameterError):
        weyl_factor(WeylFactorParams(0.75, 1.0), 10, "th3")


@given(st.floats(math.exp(math.e), 1e300), st.floats(0.51, 0.99), st.floats(0.1, 30))
def test_weyl_th2_dominates_th1(k, alpha, K):
    # (log log k)^alpha <= log log k there, so the th2 exponent is the larger
    p = WeylFactorParams(alpha, K)
    assert weyl_factor(p, k, "th2") >= weyl_factor(p, k, "th1") * (1 - 1e-12)


def test_bewe_psi_at_one():
    a = 0.75
    prof = sine_extremal(a)
    lo, hi = bewe_psi(prof, 1, 4096)
    # psi(1) = g(1) + g(1) + g(2), g(r) = zeta(2a) r^-2a
    exact = zeta(2 * a) * (2 + 2 ** (-2 * a))
    assert lo <= exact <= hi
    assert hi - lo < 0.1


def test_bewe_psi_prime():
    prof = sine_extremal(0.75)
    for p in (2, 3, 5, 7):
        lo1, hi1 = bewe_psi(prof, 1, 4096)
        lo, hi = bewe_psi(prof, p, 4096)
        # psi(p) = psi(1) + p g(p) + G(p)
        g_exact = zeta(1.5) * np.arange(1, 2 * p + 1) ** -1.5
        extra = p * g_exact[p - 1] + g_exact.sum()
        exact1 = zeta(1.5) * 2.0 + zeta(1.5) * 2**-1.5
        assert lo <= exact1 + extra <= hi
        assert lo1 <= exact1 <= hi1


def test_bewe_psi_errors():
    with pytest.raises(ParameterError):
        bewe_psi(sine_extremal(0.75), 3, 0)


def test_bewe_psi_table_agrees():
    prof = sine_extremal(0.75)
    lo, hi = bewe_psi_table(prof, 30, 2**15)
    for k in (1, 6, 17, 30):
        plo, phi = bewe_psi(prof, k, 2**12)
        assert max(lo[k], plo) <= min(hi[k], phi)


def test_bewe_psi_log_damped_shape():
    # |a_j| = j^-1/2 (log j)^-gamma: psi(k) tracks sum_{d|k} (log d)^-(2gamma-1)
    gamma = 1.5
    prof = log_damped_profile(gamma)
    n = 10_000
    lo, hi = bewe_psi_table(prof, n, 2**21)
    shape = np.array([math.fsum(clog(d) ** (1 - 2 * gamma) for d in divisors(k))
                      for k in range(1, n + 1)])
    ratio_lo, ratio_hi = lo[1:] / shape, hi[1:] / shape
    assert ratio_lo.min() > 0
    assert ratio_hi.max() / ratio_lo.min() < 100
