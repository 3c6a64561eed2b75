"""The acceptance suite: one function per criterion, shared by the test
suite and ``gcdlab verify``.  Each returns a :class:`CriterionResult`; none
of them raise on failure."""

from __future__ import annotations

import json
import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

ALPHAS = (0.6, 0.75, 0.9)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float = 0.0
    budget: float = math.inf
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.number:2d} {self.name}: "
                f"{self.seconds:.1f}s (budget {self.budget:g}s)")

    def as_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "details": self.details}


def _timed(number, name, budget):
    def wrap(fn):
        def run(**kw) -> CriterionResult:
            t0 = time.perf_counter()
            passed, details = fn(**kw)
            dt = time.perf_counter() - t0
            details["within_budget"] = dt < budget
            return CriterionResult(number, name, bool(passed and dt < budget), dt, budget, details)
        run.__name__ = fn.__name__
        run.number = number
        return run
    return wrap


@_timed(1, "franel-landau exactness", 5)
def criterion_franel():
    from .dilated import franel_closed, franel_piecewise
    bad = [(k, l) for k in range(1, 31) for l in range(1, 31)
           if franel_piecewise(k, l) != franel_closed(k, l)]
    return not bad, {"pairs": 900, "mismatches": bad}


@_timed(2, "gcd-norm identity", 120)
def criterion_gcd_norm(seed: int = 2024):
    from .dilated import norm_squared, parseval_norm, quadrature_norm
    from .profiles import sine_extremal
    rng = np.random.default_rng(seed)
    outside, worst_quad, quad_checked = [], 0.0, 0
    for trial in range(200):
        a = ALPHAS[trial % 3]
        N = int(rng.integers(1, 17))
        n = sorted(rng.choice(np.arange(1, 101), N, replace=False).tolist())
        c = rng.normal(size=N)
        prof = sine_extremal(a)
        exact = norm_squared(prof, n, c)
        value = (exact.lower + exact.upper) / 2
        enc = parseval_norm(prof, n, c, 2**14)
        if not enc.contains(value):
            outside.append(trial)
        if N <= 8:
            q = quadrature_norm(prof, n, c)
            worst_quad = max(worst_quad, abs(q - value) / value)
            quad_checked += 1
    ok = not outside and worst_quad <= 1e-4
    return ok, {"outside_enclosure": outside, "quadrature_checked": quad_checked,
                "worst_quadrature_rel_error": worst_quad}


@_timed(3, "block identity", 30)
def criterion_block_identity():
    from .extremal import th1_blocks, block_gcd_identity
    worst = 0.0
    for a in ALPHAS:
        for b in th1_blocks(a, 0.1, 12).blocks:
            direct, closed = block_gcd_identity(b, a)
            worst = max(worst, abs(direct - closed) / closed)
    return worst <= 1e-12, {"worst_rel_diff": worst}


@_timed(4, "spectral sanity", 120)
def criterion_spectral():
    from .gcd_spectra import (GcdMatrixSpec, dense_matrix, jacobi_eigenvalues,
                              largest_eigenvalue, min_eigenvalue)
    details = {}
    ok = True
    for a in ALPHAS:
        mins = [min_eigenvalue(GcdMatrixSpec.identity(a, N)).lam for N in range(1, 301)]
        lam2 = largest_eigenvalue(GcdMatrixSpec.identity(a, 2)).lam
        lams = [largest_eigenvalue(GcdMatrixSpec.identity(a, N)).lam for N in range(2, 257)]
        drops = [N + 2 for N, (x, y) in enumerate(zip(lams, lams[1:])) if y < x]
        spec = GcdMatrixSpec.identity(a, 64)
        pi = largest_eigenvalue(spec).lam
        jac = float(jacobi_eigenvalues(dense_matrix(spec))[-1])
        d = {"min_eig_min": min(mins), "lam2_error": abs(lam2 - 1 - 2**-a),
             "monotone_violations": drops, "n64_power_vs_jacobi": abs(pi - jac)}
        details[str(a)] = d
        ok &= (d["min_eig_min"] > 0 and d["lam2_error"] <= 1e-10 and not drops
               and d["n64_power_vs_jacobi"] <= 1e-8)
    return ok, details


@_timed(5, "hilberdink majorant", 60)
def criterion_hilberdink(seed: int = 7):
    from .gcd_spectra import GcdMatrixSpec, hilberdink_majorant, quadratic_form
    rng = np.random.default_rng(seed)
    violations, min_slack = 0, math.inf
    for a in ALPHAS:
        spec = GcdMatrixSpec.identity(a, 200)
        for _ in range(100):
            c = np.abs(rng.normal(size=200))
            lhs = quadratic_form(spec, c)
            rhs = hilberdink_majorant(c, a)
            violations += rhs < lhs
            min_slack = min(min_slack, rhs / lhs)
    return violations == 0, {"violations": int(violations), "min_ratio": min_slack}


@_timed(6, "growth window", 300)
def criterion_growth(threads: int = 1):
    from .gcd_spectra import GcdMatrixSpec, growth_exponent, largest_eigenvalue
    from .numtheory import single_dilation_constant
    a = 0.75
    cap = single_dilation_constant(a)
    vals, intervals = [], []
    for e in range(4, 13):
        N = 2**e
        r = largest_eigenvalue(GcdMatrixSpec.identity(a, N), threads=threads)
        vals.append(growth_exponent(r.lam, N, a))
        intervals.append(r.certified_interval)
    noise = 1e-9
    ok = (all(v > 0 for v in vals) and all(y >= x - noise for x, y in zip(vals, vals[1:]))
          and max(vals) <= round(cap, 3))
    return ok, {"exponents": vals, "cap": cap, "slack": round(cap, 3) - max(vals),
                "certified_intervals": [list(iv) for iv in intervals]}


@_timed(7, "gronwall envelope", 1)
def criterion_gronwall():
    from .numtheory import gronwall_bound, primorial, sigma
    worst = {}
    for s in (0.25, 0.5, 0.75):
        worst[str(s)] = max(sigma(-s, primorial(r)) / gronwall_bound(s, primorial(r))
                            for r in range(1, 13))
    return max(worst.values()) <= 1.5, {"worst_ratio": worst}


@_timed(8, "coarsening decay", 60)
def criterion_coarsening():
    from .profiles import sine_extremal
    from .special import coarsening_error
    ok = True
    details = {}
    for a in ALPHAS:
        prof = sine_extremal(a)
        rate = (2 * a - 1) / 6
        C = coarsening_error(prof, 2, 16) / (2 / 16) ** rate
        worst, where = 0.0, None
        for k in range(1, 9):
            for e in range(4, 11):
                m = 2**e
                r = coarsening_error(prof, k, m) / (C * (k / m) ** rate)
                if r > worst:
                    worst, where = r, (k, m)
        details[str(a)] = {"C": C, "worst_ratio": worst, "at": where}
        ok &= worst <= 1.0
    return ok, details


@_timed(9, "coupling and clt", 600)
def criterion_coupling(seed: int | None = None, threads: int = 1):
    from .extremal import th2_construction
    from .simulate import (DEFAULT_SEED, SimulationConfig, clt_diagnostics,
                           couple_independent, sample_blocks)
    con = th2_construction(0.75, i_max=16)
    cfg = SimulationConfig(seed=DEFAULT_SEED if seed is None else seed,
                           samples=10_000, i_max=16, threads=threads)
    cp = couple_independent(con, cfg)
    mean_ok = all(abs(cb.mean_y) <= 1e-8 for cb in cp)
    b2 = cp[1]
    C = b2.diff * 4 / b2.size
    ratios = [cb.diff / (C * cb.size / cb.index**2) for cb in cp]
    coupling_ok = all(r <= 1.0 for r in ratios)
    _, Y = sample_blocks(con, cfg)
    diags = clt_diagnostics(con, cfg, (4, 8, 16), cp, Y)
    L = [d.L_M for d in diags]
    lyap_ok = all(y < x for x, y in zip(L, L[1:]))
    ks_ok = diags[-1].ks_pvalue >= 0.01
    details = {
        "mean_y_max": max(abs(cb.mean_y) for cb in cp),
        "C_fit": C,
        "coupling_ratios": ratios,
        "L_M": L,
        "ks_statistic": diags[-1].ks_statistic,
        "ks_pvalue": diags[-1].ks_pvalue,
        "parts": {"mean": mean_ok, "coupling": coupling_ok, "lyapunov": lyap_ok, "ks": ks_ok},
    }
    return mean_ok and coupling_ok and lyap_ok and ks_ok, details


@_timed(10, "divergence trend", 60)
def criterion_divergence():
    from .extremal import divergence_partial_sums, th1_blocks
    con = th1_blocks(0.75, 0.1, 20)
    ps = divergence_partial_sums(con, 20)
    inc = np.diff([0.0] + ps)
    scaled = inc * np.arange(1, 21) ** 2
    strictly = all(y > x for x, y in zip(ps, ps[1:]))
    trend = all(y > x for x, y in zip(scaled[10:], scaled[11:]))
    target = math.fsum(1 / i**2 for i in range(1, 21))
    rel = abs(con.weyl_mass(20) - target) / target
    return strictly and trend and rel <= 1e-10, {
        "partial_sums": ps, "scaled_increments": scaled.tolist(), "weyl_mass_rel_error": rel}


@_timed(11, "reproducibility", 120)
def criterion_reproducibility(samples: int = 2000):
    outs = []
    with tempfile.TemporaryDirectory() as tmp:
        for threads in (1, 4):
            path = os.path.join(tmp, f"run{threads}.json")
            cmd = [sys.executable, "-m", "gcdlab.cli", "simulate", "--samples", str(samples),
                   "--threads", str(threads), "--output", path]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode != 0:
                return False, {"error": proc.stderr[-2000:]}
            with open(path, "rb") as fh:
                outs.append(fh.read())
    return outs[0] == outs[1], {"bytes": len(outs[0])}


CRITERIA = [criterion_franel, criterion_gcd_norm, criterion_block_identity,
            criterion_spectral, criterion_hilberdink, criterion_growth,
            criterion_gronwall, criterion_coarsening, criterion_coupling,
            criterion_divergence, criterion_reproducibility]


def run_suite(only=None, stream=None) -> list[CriterionResult]:
    results = []
    for fn in CRITERIA:
        if only and fn.number not in only:
            continue
        res = fn()
        results.append(res)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
    return results


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def summary_json(results) -> str:
    return json.dumps(_jsonable([r.as_dict() for r in results]), indent=2)


__all__ = ["CRITERIA", "CriterionResult", "run_suite", "summary_json"]
