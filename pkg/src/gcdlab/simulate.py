"""Monte-Carlo probes of pointwise behaviour.

Sample points are dyadic rationals x = X / 2^L with X an L-bit integer
drawn from a Philox stream keyed by (seed, sample index); every sample is
reproducible on its own, so results do not depend on evaluation order or
worker count.  Dilates are reduced exactly in integer arithmetic, which is
what makes dilations of a thousand bits usable.

For a general-dilation construction the block variables are

    X_i(x) = sum_{k in Delta_i} f_alpha(k x),  Y_i = E(X_i | dyadic cells of level S_{i+1}).

With k = 2^{S_i} m and g = S_{i+1} - S_i, Y_i(x) is the mean of f_alpha(m y)
over the level-g cell of y = {2^{S_i} x}, i.e. it only reads bits
S_i .. S_{i+1} of x.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats
from scipy.special import zeta

from .extremal import Th2Construction, block_gcd_closed
from .numtheory import ParameterError, clog, cloglog, single_dilation_constant
from .quadrature import gauss_legendre_unit, integrate_dilated, profile_from_pairs
from .special import antiderivative, f_alpha_singular_split, f_alpha_from_pair

DEFAULT_SEED = 12345
RESAMPLE_BUDGET = 100
EXACT_GRID_BITS = 25
CELL_NODES = 16
COARSE_BITS = 12


class SamplingError(RuntimeError):
    pass


class DiagnosticError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    seed: int = DEFAULT_SEED
    samples: int = 10_000
    i_max: int = 16
    grid_depth: int | None = None
    quad_cells: int = CELL_NODES
    threads: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ParameterError("samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ParameterError("threads must be >= 1")
        if self.quad_cells < 2:
            raise ParameterError("quad_cells must be >= 2")

    def echo(self) -> dict:
        # thread count is deliberately absent: it never changes results
        return {"seed": self.seed, "samples": self.samples, "i_max": self.i_max,
                "grid_depth": self.grid_depth, "quad_cells": self.quad_cells}


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed + (index << 64)))


def sample_bits(seed: int, index: int, L: int, draw: int = 0) -> int:
    """The ``draw``-th L-bit integer of sample ``index``'s stream."""
    words = -(-L // 64)
    raw = _stream(seed, index).integers(0, 2**64, size=words * (draw + 1),
                                        dtype=np.uint64, endpoint=False)
    v = 0
    for w in raw[words * draw:]:
        v = (v << 64) | int(w)
    return v >> (64 * words - L)


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def frac_pair(n: int, X: int, L: int) -> tuple[float, float] | None:
    """({n X / 2^L}, 1 - {n X / 2^L}) or None when n X / 2^L is an integer."""
    r = (n * X) % (1 << L)
    if r == 0:
        return None
    return r / (1 << L), ((1 << L) - r) / (1 << L)


def _as_dyadic(x) -> tuple[int, int]:
    fr = Fraction(x)
    L = fr.denominator.bit_length() - 1
    if fr.denominator != 1 << L:
        raise ParameterError("x must be a dyadic rational (any float is)")
    return fr.numerator, L


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def _profile_values(profile, dilations, X: int, L: int) -> np.ndarray | None:
    pairs = [frac_pair(int(n), X, L) for n in dilations]
    if any(p is None for p in pairs):
        return None
    Y = np.array([[p[0]] for p in pairs])
    Ybar = np.array([[p[1]] for p in pairs])
    return profile_from_pairs(profile, Y, Ybar)[:, 0]


def trajectory(profile, dilations, c, x, upto: int | None = None) -> list[float]:
    """Partial sums S_M(x) = sum_{k<=M} c_k f(n_k x), M = 1..upto."""
    c = np.asarray(c, dtype=float)
    upto = len(c) if upto is None else upto
    if not 1 <= upto <= len(c) or len(dilations) < upto:
        raise ParameterError("upto exceeds the coefficient or dilation count")
    X, L = _as_dyadic(x)
    F = _profile_values(profile, dilations[:upto], X, L)
    if F is None:
        raise SamplingError("x hits a singularity of a dilate")
    return np.cumsum(c[:upto] * F).tolist()


def _draw_point(profile, dilations, seed: int, index: int, L: int):
    for draw in range(RESAMPLE_BUDGET):
        X = sample_bits(seed, index, L, draw)
        F = _profile_values(profile, dilations, X, L)
        if F is not None:
            return F
    raise SamplingError(f"sample {index}: resample budget exhausted")


def sample_partial_sums(profile, dilations, c, config: SimulationConfig, L: int = 64) -> np.ndarray:
    """(samples, N) matrix of partial sums at sampled x."""
    c = np.asarray(c, dtype=float)
    rows = _map(lambda i: np.cumsum(c * _draw_point(profile, dilations, config.seed, i, L)),
                range(config.samples), config.threads)
    return np.array(rows)


@dataclass
class SupSummary:
    sup: np.ndarray = field(repr=False)
    quantiles: dict
    sup_norm_sq: float
    final_norm_sq: float
    weyl_bound: float
    ratio: float

    def as_dict(self) -> dict:
        return {"quantiles": self.quantiles, "sup_norm_sq": self.sup_norm_sq,
                "final_norm_sq": self.final_norm_sq, "weyl_bound": self.weyl_bound,
                "ratio": self.ratio}


def sup_tracker(profile, dilations, c, config: SimulationConfig) -> SupSummary:
    """Running max_{M<=N} |S_M(x)| per sampled x.

    ``weyl_bound`` is exp(K (log N)^(1-a)/log log N) sum c_k^2 with the
    single-dilation constant K; ``ratio`` is the empirical ||max||^2 over it.
    """
    S = sample_partial_sums(profile, dilations, c, config)
    sup = np.max(np.abs(S), axis=1)
    N = len(c)
    q = np.quantile(sup, [0.5, 0.9, 0.99])
    a = profile.alpha
    bound = math.exp(single_dilation_constant(a) * clog(N) ** (1 - a) / cloglog(N)) * \
        math.fsum(float(v) ** 2 for v in c)
    sup_sq = float(np.mean(sup**2))
    return SupSummary(sup, {"q50": float(q[0]), "q90": float(q[1]), "q99": float(q[2])},
                      sup_sq, float(np.mean(S[:, -1] ** 2)), bound,
                      sup_sq / bound if bound > 0 else 0.0)


def cesaro_average(profile, x_samples, N: int) -> tuple[np.ndarray, float]:
    """(1/N) sum_{k<=N} f(k x) for each x; also max |average|."""
    out = []
    for x in x_samples:
        X, L = _as_dyadic(x)
        vals = []
        for k in range(1, N + 1):
            p = frac_pair(k, X, L)
            if p is None:
                # f at an integer point: only the periodic sawtooth is defined
                if profile.kind != "bernoulli" and profile.kind != "custom":
                    raise SamplingError("x hits a singularity of a dilate")
                vals.append(float(profile.evaluate(0.0)))
            else:
                vals.append(float(profile_from_pairs(
                    profile, np.array([[p[0]]]), np.array([[p[1]]]))[0, 0]))
        out.append(math.fsum(vals) / N)
    arr = np.array(out)
    return arr, float(np.max(np.abs(arr))) if arr.size else 0.0


# ---------------------------------------------------------------------------
# dyadic cell means of f_alpha(m y)
# ---------------------------------------------------------------------------

def _parity_sign(parity: str) -> float:
    return -1.0 if parity == "sine" else 1.0


def singular_integral(alpha: float, h: float, parity: str = "sine", nodes: int = CELL_NODES) -> float:
    """int_0^h f(t) dt for 0 < h < 1/2: the t^(alpha-1) part in closed form,
    the analytic remainder by Gauss-Legendre."""
    u, w = gauss_legendre_unit(nodes)
    A, R = f_alpha_singular_split(alpha, h * u, parity)
    return A * h**alpha / alpha + h * float(np.dot(R, w))


def cell_means(alpha: float, m: int, q, g: int, parity: str = "sine",
               nodes: int = CELL_NODES) -> np.ndarray:
    """Mean of f(y) over y in [q/2^g, (q+m)/2^g] (mod 1) for each integer q.

    ``q`` entries are Python integers in [0, 2^g); the cell length m/2^g
    must be below 1/2.  Cells touching an integer use the singular split.
    """
    top = 1 << g
    if not 2 * m < top:
        raise ParameterError("cell longer than half a period")
    q = [int(v) for v in q]
    w = m / top
    out = np.empty(len(q))
    reg = [i for i, v in enumerate(q) if v != 0 and top - v > m]
    if reg:
        u, wt = gauss_legendre_unit(nodes)
        yq = np.array([q[i] / top for i in reg])
        yr = np.array([(top - q[i]) / top for i in reg])
        F = f_alpha_from_pair(alpha, yq[:, None] + w * u, yr[:, None] - w * u, parity)
        # row-wise sum: BLAS gemv results can depend on the row position
        out[reg] = np.sum(F * wt, axis=1)
    sgn = _parity_sign(parity)
    for i, v in enumerate(q):
        R = top - v
        if v == 0:
            out[i] = singular_integral(alpha, w, parity, nodes) / w
        elif R == m:
            out[i] = sgn * singular_integral(alpha, w, parity, nodes) / w
        elif R < m:
            left = sgn * singular_integral(alpha, R / top, parity, nodes)
            right = singular_integral(alpha, (m - R) / top, parity, nodes)
            out[i] = (left + right) / w
    return out


# ---------------------------------------------------------------------------
# coupling
# ---------------------------------------------------------------------------

def _sine_profile(alpha):
    from .profiles import sine_extremal
    return sine_extremal(alpha)


def poincare_tail_bound(alpha: float, m: int, g: int) -> float:
    """Certified bound on ||f(m .) - E(f(m .) | level-g cells)||.

    Split at frequency J: the low part deviates from its cell means by at
    most (1/(pi 2^g)) ||derivative|| (Poincare on each cell), the high part
    by at most its own norm.  Minimised over J on a geometric grid.
    """
    M = 2.0**g
    best = math.inf
    for e in range(0, 8 * (g + 8)):
        J = math.floor(2 ** (e / 8))
        low_sq = 0.5 * (J + 1) ** (3 - 2 * alpha) / (3 - 2 * alpha)
        low = 2 * m / M * math.sqrt(low_sq)
        high = math.sqrt(0.5 * J ** (1 - 2 * alpha) / (2 * alpha - 1))
        best = min(best, low + high)
    return best


def _exact_coarsening_sq(alpha: float, ms, g: int, chunk: int = 1 << 18) -> float:
    """||h - [h]_{2^g}||^2 for h(y) = sum_m f(m y), via ||h||^2 - ||[h]||^2
    with exact cell integrals from the periodic antiderivative."""
    prof = _sine_profile(alpha)
    M = 1 << g
    grid = np.empty(M + 1)
    for s in range(0, M + 1, chunk):
        r = np.arange(s, min(s + chunk, M + 1))
        y = r / M
        y[r == M] = 0.0  # F is periodic
        grid[s:s + r.size] = antiderivative(prof, y)
    acc = []
    for s in range(0, M, chunk):
        c = np.arange(s, min(s + chunk, M), dtype=np.int64)
        cell = np.zeros(c.size)
        for m in ms:
            lo = (m * c) % M
            hi = (m * (c + 1)) % M
            hi_val = np.where(hi == 0, grid[M], grid[hi])
            cell += (hi_val - grid[lo]) / m
        acc.append(math.fsum((cell * cell).tolist()))
    coarse_sq = M * math.fsum(acc)
    gcd_sum = math.fsum(
        (math.gcd(a, b) ** 2 / (a * b)) ** alpha for a in ms for b in ms)
    full_sq = float(zeta(2 * alpha)) / 2 * gcd_sum
    return full_sq - coarse_sq


@dataclass
class BlockCoupling:
    index: int
    size: int
    multipliers: list[int]
    gap_bits: int
    norm_x: float
    mean_y: float
    diff_upper: float
    diff_exact: float | None
    lp_moment_x: float

    @property
    def diff(self) -> float:
        """Best available value of ||X_i - Y_i|| (exact when computable)."""
        return self.diff_exact if self.diff_exact is not None else self.diff_upper

    def as_dict(self) -> dict:
        return {"index": self.index, "size": self.size, "gap_bits": self.gap_bits,
                "norm_x": self.norm_x, "mean_y": self.mean_y,
                "diff_upper": self.diff_upper, "diff_exact": self.diff_exact,
                "lp_moment_x": self.lp_moment_x}


def block_multipliers(block) -> list[int]:
    """m = k / 2^{S_i} for each k in the block."""
    return sorted(e >> block.two_power for e in block.elements())


def coarse_mean(alpha: float, ms, bits: int = COARSE_BITS, nodes: int = CELL_NODES) -> float:
    """E Y_i through the tower property: the mean of the level-``bits`` cell
    means of h(y) = sum_m f(m y), computed with the same cell integrator."""
    n = 1 << bits
    total = []
    for m in ms:
        if 2 * m >= n:
            raise ParameterError("coarse level too shallow for this multiplier")
        q = [(m * c) % n for c in range(n)]
        total.append(math.fsum(cell_means(alpha, m, q, bits, nodes=nodes).tolist()))
    return math.fsum(total) / n


def couple_independent(con: Th2Construction, config: SimulationConfig | None = None) -> list[BlockCoupling]:
    """Per-block coupling summaries for blocks 1..i_max."""
    config = config or SimulationConfig(i_max=con.i_max)
    i_max = min(config.i_max, con.i_max)
    need = con.S[i_max]
    if config.grid_depth is not None and config.grid_depth < need:
        raise ParameterError(f"grid_depth must be >= S_(i_max+1) = {need}")
    a = con.alpha
    p = 2 + con.delta
    cache: dict = {}
    out = []
    for i in range(1, i_max + 1):
        b = con.blocks[i - 1]
        ms = block_multipliers(b)
        g = con.S[i] - con.S[i - 1]
        key = (tuple(ms), g)
        if key not in cache:
            exact = None
            if g <= EXACT_GRID_BITS:
                exact = math.sqrt(max(_exact_coarsening_sq(a, ms, g), 0.0))
            upper = math.fsum(poincare_tail_bound(a, m, g) for m in ms)
            cache[key] = (exact, upper)
        exact, upper = cache[key]
        mkey = ("moments", tuple(ms))
        if mkey not in cache:
            prof = _sine_profile(a)
            lp = integrate_dilated(lambda F: np.abs(F.sum(axis=0)) ** p, prof, ms, p * (a - 1))
            cache[mkey] = (coarse_mean(a, ms), lp)
        mean_y, lp = cache[mkey]
        norm_x = math.sqrt(float(zeta(2 * a)) / 2 * block_gcd_closed(b, a))
        out.append(BlockCoupling(i, b.size, ms, g, norm_x, mean_y, upper, exact, lp))
    return out


def block_values(con: Th2Construction, Xs, L: int, i_max: int,
                 nodes: int = CELL_NODES) -> tuple[np.ndarray, np.ndarray]:
    """(X_i(x), Y_i(x)) for i = 1..i_max at each x = X / 2^L, X in ``Xs``."""
    a = con.alpha
    Xs = [int(v) for v in Xs]
    n = len(Xs)
    xs, ys = np.zeros((n, i_max)), np.zeros((n, i_max))
    mod = (1 << L) - 1
    for i in range(1, i_max + 1):
        S0, S1 = con.S[i - 1], con.S[i]
        g = S1 - S0
        # bits S0..S1 of x select the level-g cell of y = {2^S0 x}
        cells = [(X >> (L - S1)) & ((1 << g) - 1) for X in Xs]
        for m in block_multipliers(con.blocks[i - 1]):
            ys[:, i - 1] += cell_means(a, m, [(m * c) % (1 << g) for c in cells], g, nodes=nodes)
            r = [((m << S0) * X) & mod for X in Xs]
            y = np.array([v / (1 << L) for v in r])
            ybar = np.array([((1 << L) - v) / (1 << L) for v in r])
            ok = np.array([v != 0 for v in r])
            vals = np.full(n, np.nan)  # x on a singularity of this dilate
            vals[ok] = f_alpha_from_pair(a, y[ok], ybar[ok])
            xs[:, i - 1] += vals
    return xs, ys


SAMPLE_CHUNK = 1024


def sample_blocks(con: Th2Construction, config: SimulationConfig) -> tuple[np.ndarray, np.ndarray]:
    """(samples, i_max) arrays of X_i and Y_i at Philox-drawn points.

    Work is cut into fixed chunks whatever the thread count, so every
    floating-point operation is the same in serial and parallel runs.
    """
    i_max = min(config.i_max, con.i_max)
    L = max(con.S[i_max], config.grid_depth or 0) + 64
    starts = range(0, config.samples, SAMPLE_CHUNK)

    def chunk(s):
        idx = range(s, min(s + SAMPLE_CHUNK, config.samples))
        Xs = [sample_bits(config.seed, j, L) for j in idx]
        return block_values(con, Xs, L, i_max, config.quad_cells)

    parts = _map(chunk, starts, config.threads)
    return np.vstack([p[0] for p in parts]), np.vstack([p[1] for p in parts])


def structural_independence(con: Th2Construction, i: int, X: int, L: int,
                            flip_bits: int = 8) -> bool:
    """Y_{i+1} ignores the bits of x that fix its level-S_{i+1} cell."""
    hi = con.S[i]
    variants = [X] + [X ^ (1 << (L - 1 - (t * hi) // flip_bits)) for t in range(flip_bits)]
    _, y = block_values(con, variants, L, i + 1)
    return bool(np.all(y[:, i] == y[0, i]))


# ---------------------------------------------------------------------------
# CLT diagnostics
# ---------------------------------------------------------------------------

@dataclass
class CltDiagnostics:
    M: int
    B_M: float
    B_M_upper: float
    D_M: float
    L_M: float
    ks_statistic: float
    ks_pvalue: float
    sample_count: int
    tail_probability: float

    def as_dict(self) -> dict:
        return {"M": self.M, "B_M": self.B_M, "B_M_upper": self.B_M_upper,
                "D_M": self.D_M, "L_M": self.L_M, "ks_statistic": self.ks_statistic,
                "ks_pvalue": self.ks_pvalue, "sample_count": self.sample_count,
                "tail_probability": self.tail_probability}


def clt_diagnostics(con: Th2Construction, config: SimulationConfig, Ms=(4, 8, 16),
                    coupling=None, Y=None) -> list[CltDiagnostics]:
    """Lyapunov quantities and a KS test of sum_{i<=M} d_i Y_i / sqrt(B_M).

    B_M uses E Y_i^2 = ||X_i||^2 - ||X_i - Y_i||^2 with the coupling error
    exact where the grid is enumerable and at its upper bound elsewhere, so
    it is a lower bound; D_M uses E|Y_i|^p <= E|X_i|^p (conditional
    expectation contracts L^p).  L_M = D_M / B_M^(1 + delta/2) is therefore
    an upper bound.
    """
    coupling = coupling or couple_independent(con, config)
    if Y is None:
        _, Y = sample_blocks(con, config)
    d = con.d
    p = 2 + con.delta
    out = []
    for M in Ms:
        if M > len(coupling):
            raise ParameterError(f"M = {M} exceeds i_max")
        var = [cb.norm_x**2 - cb.diff**2 for cb in coupling[:M]]
        B = math.fsum(d[i] ** 2 * var[i] for i in range(M))
        B_up = math.fsum(d[i] ** 2 * coupling[i].norm_x**2 for i in range(M))
        if not B > 0:
            raise DiagnosticError("B_M is not positive")
        D = math.fsum(d[i] ** p * coupling[i].lp_moment_x for i in range(M))
        L = D / B ** (p / 2)
        S = Y[:, :M] @ d[:M]
        ks = stats.kstest(S / math.sqrt(B), "norm")
        tail = float(np.mean(np.abs(S) >= math.sqrt(B) / clog(M)))
        out.append(CltDiagnostics(M, B, B_up, D, L, float(ks.statistic),
                                  float(ks.pvalue), int(Y.shape[0]), tail))
    return out


def _empirical(con, X, Y, i: int) -> dict:
    x, y = X[:, i - 1], Y[:, i - 1]
    return {"d": float(con.d[i - 1]),
            "empirical_diff": float(np.sqrt(np.mean((x - y) ** 2))),
            "empirical_mean_y": float(np.mean(y))}


def run_simulation(con: Th2Construction, config: SimulationConfig, Ms=(4, 8, 16)) -> dict:
    """Everything the CLI reports for one simulation run."""
    coupling = couple_independent(con, config)
    X, Y = sample_blocks(con, config)
    diags = clt_diagnostics(con, config, Ms, coupling, Y)
    n = Y.shape[0]
    corr = np.corrcoef(Y.T) if n > 1 else np.eye(Y.shape[1])
    off = corr[~np.eye(corr.shape[0], dtype=bool)]
    return {
        "config": config.echo(),
        "construction": {"alpha": con.alpha, "beta": con.beta, "delta": con.delta,
                         "K1": con.K1, "eta": con.eta, "S": con.S, "T": con.T, "A": con.A},
        "blocks": [cb.as_dict() | _empirical(con, X, Y, cb.index) for cb in coupling],
        "clt": [dg.as_dict() for dg in diags],
        "max_abs_correlation": float(np.max(np.abs(off))) if off.size else 0.0,
    }
