import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcdlab.gcd_spectra import (
    CapabilityError, GcdMatrixSpec, dense_matrix, export_csv, gcd_entry,
    growth_exponent, hilberdink_majorant, jacobi_eigenvalues, largest_eigenvalue,
    matvec, min_eigenvalue, quadratic_form, tail_quadratic_form,
)
from gcdlab.numtheory import DomainError, ParameterError, single_dilation_constant

ALPHAS = (0.6, 0.75, 0.9)


def _naive_matrix(alpha, n):
    return np.array([[math.gcd(a, b) ** (2 * alpha) / (a * b) ** alpha for b in n] for a in n])


def test_spec_validation():
    with pytest.raises(DomainError):
        GcdMatrixSpec(0.5, (1, 2))
    with pytest.raises(ParameterError):
        GcdMatrixSpec(0.75, (2, 2))
    with pytest.raises(ParameterError):
        GcdMatrixSpec(0.75, (0, 3))
    with pytest.raises(CapabilityError):
        GcdMatrixSpec(0.75, (1, 2**63))


def test_entry_examples():
    spec = GcdMatrixSpec.identity(0.75, 10)
    for k in range(1, 11):
        assert gcd_entry(spec, k, k) == pytest.approx(1.0, rel=1e-15)
    assert gcd_entry(spec, 4, 8) == pytest.approx(2**-0.75, rel=1e-14)
    assert gcd_entry(spec, 4, 8) == pytest.approx(0.594604, abs=1e-6)
    cop = GcdMatrixSpec(0.6, (7, 9, 10))
    assert gcd_entry(cop, 2, 3) == pytest.approx((90) ** -0.6, rel=1e-14)
    with pytest.raises(IndexError):
        gcd_entry(spec, 0, 3)
    with pytest.raises(IndexError):
        gcd_entry(spec, 1, 11)


def test_entry_large_dilations_log_space():
    big = 2**62 + 1
    spec = GcdMatrixSpec(0.75, (3, 2**61, big))
    assert gcd_entry(spec, 2, 3) == pytest.approx((2**61 * big) ** -0.75, rel=1e-12)
    assert math.isfinite(gcd_entry(spec, 1, 3))


def test_entry_symmetry():
    spec = GcdMatrixSpec.identity(0.75, 100)
    for k in range(1, 101):
        for l in range(k, 101):
            assert gcd_entry(spec, k, l) == gcd_entry(spec, l, k)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_dense_matches_naive(alpha):
    n = (1, 2, 3, 6, 10, 15, 97, 1000)
    assert np.allclose(dense_matrix(GcdMatrixSpec(alpha, n)), _naive_matrix(alpha, n),
                       rtol=1e-14, atol=0)


def test_quadratic_form_examples():
    assert quadratic_form(GcdMatrixSpec.identity(0.75, 1), [1.0]) == 1.0
    a = 0.7
    c = np.zeros(8)
    c[[3, 7]] = 1.0
    assert quadratic_form(GcdMatrixSpec.identity(a, 8), c) == pytest.approx(2 * (1 + 2**-a),
                                                                            rel=1e-15)
    with pytest.raises(ParameterError):
        quadratic_form(GcdMatrixSpec.identity(a, 3), [1.0, 2.0])


def test_quadratic_form_dense_oracle():
    rng = np.random.default_rng(11)
    spec = GcdMatrixSpec.identity(0.75, 50)
    G = _naive_matrix(0.75, range(1, 51))
    for _ in range(20):
        c = rng.normal(size=50)
        assert quadratic_form(spec, c) == pytest.approx(c @ G @ c, rel=1e-12)


def test_matvec_thread_independent():
    rng = np.random.default_rng(5)
    spec = GcdMatrixSpec.identity(0.75, 3000)
    v = rng.normal(size=3000)
    one = matvec(spec, v, threads=1)
    assert np.array_equal(one, matvec(spec, v, threads=4))
    assert np.array_equal(one, matvec(spec, v, threads=1, dense=dense_matrix(spec)))


def test_largest_eigenvalue_small():
    r1 = largest_eigenvalue(GcdMatrixSpec.identity(0.75, 1))
    assert r1.lam == pytest.approx(1.0, rel=1e-15)
    for a in ALPHAS:
        r = largest_eigenvalue(GcdMatrixSpec.identity(a, 2))
        assert r.lam == pytest.approx(1 + 2**-a, abs=1e-10)
        lo, hi = r.certified_interval
        assert lo <= 1 + 2**-a <= hi
    assert largest_eigenvalue(GcdMatrixSpec.identity(0.75, 2)).lam == pytest.approx(1.594604,
                                                                                   abs=1e-6)


def test_largest_eigenvalue_jacobi_oracle():
    spec = GcdMatrixSpec.identity(0.75, 64)
    r = largest_eigenvalue(spec)
    jac = jacobi_eigenvalues(dense_matrix(spec))
    assert abs(r.lam - jac[-1]) <= 1e-8
    lo, hi = r.certified_interval
    assert lo <= jac[-1] + 1e-12 and jac[-1] <= hi + 1e-12
    assert r.converged and r.residual < 1e-10


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(2)
    B = rng.normal(size=(30, 30))
    A = B + B.T
    assert np.allclose(jacobi_eigenvalues(A), np.linalg.eigvalsh(A), atol=1e-11)


def test_largest_eigenvalue_nonconvergence_flag():
    r = largest_eigenvalue(GcdMatrixSpec.identity(0.75, 200), max_iter=1)
    assert not r.converged
    lo, hi = r.certified_interval
    exact = np.linalg.eigvalsh(dense_matrix(GcdMatrixSpec.identity(0.75, 200)))[-1]
    assert lo <= exact <= hi


def test_certified_interval_sparse_dilations():
    spec = GcdMatrixSpec(0.8, (2, 3, 4, 9, 12, 36, 100, 1001))
    r = largest_eigenvalue(spec)
    exact = np.linalg.eigvalsh(_naive_matrix(0.8, spec.dilations))[-1]
    lo, hi = r.certified_interval
    assert lo <= exact <= hi
    assert lo <= r.lam <= hi


def test_min_eigenvalue_examples():
    assert min_eigenvalue(GcdMatrixSpec.identity(0.75, 1)).lam == pytest.approx(1.0)
    for a in ALPHAS:
        r = min_eigenvalue(GcdMatrixSpec.identity(a, 2))
        assert r.lam == pytest.approx(1 - 2**-a, abs=1e-14)
        assert min_eigenvalue(GcdMatrixSpec.identity(a, 300)).certified_interval[0] > 0
    with pytest.raises(CapabilityError):
        min_eigenvalue(GcdMatrixSpec.identity(0.75, 513))


def test_min_eigenvalue_jacobi_oracle():
    spec = GcdMatrixSpec.identity(0.6, 64)
    lo, hi = min_eigenvalue(spec).certified_interval
    assert lo <= jacobi_eigenvalues(dense_matrix(spec))[0] <= hi


def test_rayleigh_between_extremes():
    spec = GcdMatrixSpec.identity(0.75, 100)
    lmin = min_eigenvalue(spec).certified_interval[0]
    lmax = largest_eigenvalue(spec).certified_interval[1]
    rng = np.random.default_rng(8)
    for _ in range(1000):
        c = rng.normal(size=100)
        q = quadratic_form(spec, c) / (c @ c)
        assert lmin - 1e-12 <= q <= lmax + 1e-12


def test_lambda_monotone_in_n():
    lams = [largest_eigenvalue(GcdMatrixSpec.identity(0.75, N)).lam for N in range(1, 257)]
    assert all(y >= x for x, y in zip(lams, lams[1:]))


def test_hilberdink_examples():
    a = 0.75
    assert hilberdink_majorant([1.0], a) == pytest.approx(1.0)
    rng = np.random.default_rng(4)
    N = 30
    c = np.abs(rng.normal(size=N))
    assert hilberdink_majorant(c, a) >= quadratic_form(GcdMatrixSpec.identity(a, N), c)
    # M = N: only d = N contributes
    expect = c[-1] ** 2 * sum(j ** (-2 * a) for j in range(1, N + 1))
    assert hilberdink_majorant(c, a, M=N) == pytest.approx(expect, rel=1e-13)
    with pytest.raises(ParameterError):
        hilberdink_majorant(c, a, M=N + 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2**32 - 1), st.sampled_from(ALPHAS), st.data())
def test_hilberdink_domination(N, seed, alpha, data):
    M = data.draw(st.integers(1, N))
    c = np.random.default_rng(seed).normal(size=N)
    lhs = tail_quadratic_form(c, alpha, M)
    assert hilberdink_majorant(c, alpha, M) >= lhs * (1 - 1e-12)


def test_growth_window():
    a = 0.75
    vals = [growth_exponent(largest_eigenvalue(GcdMatrixSpec.identity(a, 2**e)).lam, 2**e, a)
            for e in range(4, 10)]
    assert all(v > 0 for v in vals)
    assert max(vals) <= single_dilation_constant(a)
    assert growth_exponent(1.0, 16, a) == 0.0


def test_export_csv(tmp_path):
    spec = GcdMatrixSpec.identity(0.75, 6)
    path = tmp_path / "g.csv"
    export_csv(spec, path)
    back = np.loadtxt(path, delimiter=",")
    assert np.array_equal(back, dense_matrix(spec))


def test_dense_matrix_bitwise_symmetric():
    A = dense_matrix(GcdMatrixSpec.identity(0.75, 400))
    assert np.array_equal(A, A.T)
