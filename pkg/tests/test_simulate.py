import math
from dataclasses import replace

import mpmath as mp
import numpy as np
import pytest
from scipy.special import zeta

from gcdlab.dilated import norm_squared
from gcdlab.extremal import th1_blocks, th2_construction
from gcdlab.numtheory import ParameterError
from gcdlab.profiles import bernoulli, sine_extremal, zero_profile
from gcdlab.simulate import (
    DiagnosticError, SamplingError, SimulationConfig, _exact_coarsening_sq,
    block_values, cell_means, cesaro_average, clt_diagnostics, couple_independent,
    frac_pair, poincare_tail_bound, run_simulation, sample_bits, sample_blocks,
    sample_partial_sums, singular_integral, structural_independence, sup_tracker,
    trajectory,
)


@pytest.fixture(scope="module")
def th2():
    return th2_construction(0.75, i_max=16)


@pytest.fixture(scope="module")
def coupling(th2):
    return couple_independent(th2, SimulationConfig(i_max=16))


@pytest.fixture(scope="module")
def blocks(th2):
    return sample_blocks(th2, SimulationConfig(seed=777, samples=10_000, i_max=16))


def test_config_validation():
    with pytest.raises(ParameterError):
        SimulationConfig(samples=0)
    with pytest.raises(ParameterError):
        SimulationConfig(seed=-1)
    with pytest.raises(ParameterError):
        SimulationConfig(threads=0)
    assert "threads" not in SimulationConfig(threads=3).echo()


def test_sample_bits_deterministic():
    a = sample_bits(5, 17, 200)
    assert a == sample_bits(5, 17, 200)
    assert a != sample_bits(5, 18, 200) and a != sample_bits(6, 17, 200)
    assert 0 <= a < 2**200
    assert sample_bits(5, 17, 200, draw=1) != a


def test_frac_pair():
    assert frac_pair(3, 1, 2) == (0.75, 0.25)
    assert frac_pair(4, 1, 2) is None


def test_trajectory_examples():
    assert trajectory(sine_extremal(0.75), [1, 2, 3], [0.0, 0.0, 0.0], 0.3) == [0.0, 0.0, 0.0]
    assert trajectory(bernoulli(), [1], [1.0], 0.25) == pytest.approx([math.pi / 4])
    t = trajectory(sine_extremal(0.75), [1, 3], [1.0, 2.0], 0.1)
    f = lambda x: float(mp.polylog(0.75, mp.exp(2j * mp.pi * x)).imag)
    assert t == pytest.approx([f(0.1), f(0.1) + 2 * f(0.3)], rel=1e-12)
    with pytest.raises(SamplingError):
        trajectory(sine_extremal(0.75), [1, 2], [1.0, 1.0], 0.5)
    with pytest.raises(ParameterError):
        trajectory(sine_extremal(0.75), [1], [1.0], 0.3, upto=2)


def test_monte_carlo_second_moment():
    # alpha = 0.9 keeps E S^4 finite, so the standard error is meaningful
    prof = sine_extremal(0.9)
    n = [1, 2, 3, 5, 6, 10, 12, 15]
    c = np.random.default_rng(1).normal(size=8)
    S = sample_partial_sums(prof, n, c, SimulationConfig(seed=99, samples=100_000))
    v = S[:, -1] ** 2
    exact = norm_squared(prof, n, c).lower
    assert abs(v.mean() - exact) <= 3 * v.std() / math.sqrt(v.size)


def test_partial_sums_thread_independent():
    prof = sine_extremal(0.75)
    n, c = [1, 4, 9], [1.0, -0.5, 0.25]
    a = sample_partial_sums(prof, n, c, SimulationConfig(seed=3, samples=200, threads=1))
    b = sample_partial_sums(prof, n, c, SimulationConfig(seed=3, samples=200, threads=4))
    assert np.array_equal(a, b)


def test_sup_tracker():
    prof = sine_extremal(0.75)
    cfg = SimulationConfig(seed=4, samples=500)
    one = sup_tracker(prof, [3], [2.0], cfg)
    S = sample_partial_sums(prof, [3], [2.0], cfg)
    assert np.array_equal(one.sup, np.abs(S[:, 0]))
    con = th1_blocks(0.75, 0.1, 5)
    n = sorted(k for b in con.blocks for k in b.elements())
    cmap = {k: ck for b, c in zip(con.blocks, con.coeffs) for k, ck in zip(b.elements(), c)}
    c = [cmap[k] for k in n]
    summ = sup_tracker(prof, n, c, cfg)
    assert summ.sup_norm_sq >= summ.final_norm_sq
    assert summ.ratio <= 1
    assert set(summ.as_dict()["quantiles"]) == {"q50", "q90", "q99"}


def test_cesaro_examples():
    avg, mx = cesaro_average(bernoulli(), [0.5], 4)
    assert avg[0] == pytest.approx(math.pi / 4)
    avg, mx = cesaro_average(zero_profile(), [0.1, 0.7], 50)
    assert mx == 0.0
    rng = np.random.default_rng(6)
    xs = rng.random(5)
    _, mx = cesaro_average(sine_extremal(0.75), xs, 10_000)
    assert mx < 0.1
    with pytest.raises(SamplingError):
        cesaro_average(sine_extremal(0.75), [0.5], 4)


def test_singular_integral_mpmath():
    a = 0.75
    f = lambda t: mp.polylog(a, mp.exp(2j * mp.pi * t)).imag
    with mp.workdps(20):
        for h in (1e-6, 0.01, 0.3):
            assert singular_integral(a, h) == pytest.approx(float(mp.quad(f, [0, h])), rel=1e-12)


def test_cell_means_mpmath():
    a, g = 0.75, 6
    f = lambda t: mp.polylog(a, mp.exp(2j * mp.pi * t)).imag
    top = 1 << g
    with mp.workdps(20):
        for m, q in [(1, 0), (2, 62), (3, 62), (1, 17), (5, 30)]:
            lo, hi = mp.mpf(q) / top, mp.mpf(q + m) / top
            pts = [lo, hi] if hi <= 1 else [lo, 1, hi]
            ref = mp.quad(f, pts) * top / m
            assert cell_means(a, m, [q], g)[0] == pytest.approx(float(ref), abs=1e-12)
    with pytest.raises(ParameterError):
        cell_means(a, 40, [0], g)


def test_poincare_bound_dominates_exact():
    for ms, g in [((1,), 10), ((1, 2), 12), ((3, 5), 14)]:
        exact = math.sqrt(_exact_coarsening_sq(0.75, ms, g))
        assert math.fsum(poincare_tail_bound(0.75, m, g) for m in ms) >= exact


def test_exact_coarsening_matches_cell_means():
    # ||h||^2 - ||[h]||^2 with [h] from the quadrature cell means
    a, g, ms = 0.75, 10, (1, 2)
    n = 1 << g
    Y = sum(cell_means(a, m, [(m * c) % n for c in range(n)], g) for m in ms)
    full = zeta(1.5) / 2 * (2 + 2 * 2**-0.75)
    assert _exact_coarsening_sq(a, ms, g) == pytest.approx(full - np.mean(Y**2), rel=1e-10)


def test_coupling_mean_zero(coupling):
    assert all(abs(cb.mean_y) <= 1e-8 for cb in coupling)


def test_coupling_decay(coupling):
    C = coupling[1].diff * 4 / coupling[1].size
    for cb in coupling:
        assert cb.diff <= C * cb.size / cb.index**2 * (1 + 1e-12)
        assert cb.diff_exact is None or cb.diff_exact <= cb.diff_upper
    # summable: the tail beyond i = 8 is a small fraction of the total
    diffs = [cb.diff for cb in coupling]
    assert sum(diffs[8:]) < 0.1 * sum(diffs)


def test_coupling_dominates_samples(coupling, blocks):
    # most of ||X - Y||^2 sits in the cells next to the singularity, which
    # a sample hits with probability ~2^-g, so only the upper side is testable
    X, Y = blocks
    for cb in coupling:
        d2 = (X[:, cb.index - 1] - Y[:, cb.index - 1]) ** 2
        se = d2.std() / math.sqrt(d2.size)
        assert d2.mean() <= cb.diff**2 + 4 * se


def test_coupling_grid_depth_error(th2):
    with pytest.raises(ParameterError):
        couple_independent(th2, SimulationConfig(i_max=4, grid_depth=100))


def test_independence_proxy(blocks):
    _, Y = blocks
    corr = np.corrcoef(Y.T)
    off = corr[~np.eye(16, dtype=bool)]
    assert np.max(np.abs(off)) <= 4 / math.sqrt(Y.shape[0])


def test_structural_independence(th2):
    L = th2.S[8] + 64
    for i in range(1, 8):
        X = sample_bits(11, i, L)
        assert structural_independence(th2, i, X, L)


def test_block_values_y_depends_only_on_cell(th2):
    L = th2.S[3] + 64
    X = sample_bits(1, 0, L)
    # bits below position S_3 do not change Y_1, Y_2
    X2 = X ^ ((1 << (L - th2.S[2])) - 1)
    _, y1 = block_values(th2, [X], L, 2)
    _, y2 = block_values(th2, [X2], L, 2)
    assert np.array_equal(y1, y2)


def test_sample_blocks_thread_independent(th2):
    cfg = SimulationConfig(seed=5, samples=1500, i_max=6)
    a = sample_blocks(th2, cfg)
    b = sample_blocks(th2, replace(cfg, threads=4))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_clt_diagnostics_trends():
    con = th2_construction(0.75, i_max=32)
    cfg = SimulationConfig(samples=64, i_max=32)
    cp = couple_independent(con, cfg)
    _, Y = sample_blocks(con, cfg)
    diags = clt_diagnostics(con, cfg, (4, 8, 16, 32), cp, Y)
    L = [d.L_M for d in diags]
    assert all(y < x for x, y in zip(L, L[1:]))
    B = [d.B_M for d in diags]
    assert all(y > x for x, y in zip(B, B[1:]))
    assert all(d.B_M <= d.B_M_upper for d in diags)
    # D_M increments against i^((beta/2 - 1/2)(2 + delta))
    p = 2 + con.delta
    inc = [con.d[i] ** p * cp[i].lp_moment_x for i in range(32)]
    rate = [(i + 1) ** ((con.beta / 2 - 0.5) * p) for i in range(32)]
    C = inc[0] / rate[0]
    assert all(x <= C * r * (1 + 1e-12) for x, r in zip(inc, rate))


def test_clt_diagnostic_error(th2, coupling):
    zero = replace(th2, d=np.zeros(16))
    with pytest.raises(DiagnosticError):
        clt_diagnostics(zero, SimulationConfig(samples=4), (4,), coupling, np.zeros((4, 16)))
    with pytest.raises(ParameterError):
        clt_diagnostics(th2, SimulationConfig(samples=4), (40,), coupling, np.zeros((4, 16)))


def test_run_simulation_layout(th2):
    con = th2_construction(0.75, i_max=4)
    out = run_simulation(con, SimulationConfig(samples=50, i_max=4), (2, 4))
    assert list(out) == ["config", "construction", "blocks", "clt", "max_abs_correlation"]
    assert len(out["blocks"]) == 4 and len(out["clt"]) == 2
    assert out["config"]["samples"] == 50
