"""GCD matrices with entries gcd(n_k, n_l)^(2a) / (n_k n_l)^a.

Identity dilations (1..N) give G_N; any other strictly increasing sequence
gives H_N.  Entries are produced on the fly in log space, so the largest
eigenvalue is available matrix-free well beyond the dense threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .numtheory import DomainError, ParameterError

DENSE_THRESHOLD = 512
CACHE_THRESHOLD = 2048  # below this the matrix is kept (<= 32 MB) across iterations
MAX_DILATION = 2**63 - 1
ROW_BLOCK = 256
EPS = float(np.finfo(float).eps)


class CapabilityError(RuntimeError):
    """Requested size exceeds what the chosen method supports."""


@dataclass(frozen=True)
class GcdMatrixSpec:
    alpha: float
    dilations: tuple[int, ...]

    def __post_init__(self):
        if not 0.5 < self.alpha <= 1:
            raise DomainError("alpha must lie in (1/2, 1]")
        d = self.dilations
        if len(d) == 0:
            raise ParameterError("empty dilation sequence")
        if d[0] < 1 or any(b <= a for a, b in zip(d, d[1:])):
            raise ParameterError("dilations must be strictly increasing and >= 1")
        if d[-1] > MAX_DILATION:
            raise CapabilityError("dilations are capped at 2^63 - 1")

    @classmethod
    def identity(cls, alpha: float, N: int) -> "GcdMatrixSpec":
        return cls(alpha, tuple(range(1, N + 1)))

    @property
    def N(self) -> int:
        return len(self.dilations)

    @property
    def n(self) -> np.ndarray:
        return np.asarray(self.dilations, dtype=np.int64)


def gcd_entry(spec: GcdMatrixSpec, k: int, l: int) -> float:
    """Entry (k, l), 1-based."""
    N = spec.N
    if not (1 <= k <= N and 1 <= l <= N):
        raise IndexError(f"index out of range 1..{N}")
    a, b = spec.dilations[k - 1], spec.dilations[l - 1]
    g = math.gcd(a, b)
    # log a + log b commutes exactly, so the entry is bitwise symmetric
    return math.exp(spec.alpha * (2 * math.log(g) - (math.log(a) + math.log(b))))


def _block(n_rows: np.ndarray, n_cols: np.ndarray, alpha: float) -> np.ndarray:
    g = np.gcd(n_rows[:, None], n_cols[None, :])
    lr, lc = np.log(n_rows.astype(float)), np.log(n_cols.astype(float))
    return np.exp(alpha * (2 * np.log(g.astype(float)) - (lr[:, None] + lc[None, :])))


def dense_matrix(spec: GcdMatrixSpec) -> np.ndarray:
    n = spec.n
    return _block(n, n, spec.alpha)


def _kahan_rowdot(block: np.ndarray, v: np.ndarray) -> np.ndarray:
    # fixed-order compensated accumulation across columns (Neumaier)
    s = np.zeros(block.shape[0])
    c = np.zeros(block.shape[0])
    for j0 in range(0, block.shape[1], 64):
        t = block[:, j0:j0 + 64] @ v[j0:j0 + 64]
        u = s + t
        c += np.where(np.abs(s) >= np.abs(t), (s - u) + t, (t - u) + s)
        s = u
    return s + c


def matvec(spec: GcdMatrixSpec, v, threads: int = 1, dense: np.ndarray | None = None) -> np.ndarray:
    """G v without materialising G (unless ``dense`` is supplied); rows are
    processed in fixed blocks so the result does not depend on the worker
    count."""
    v = np.asarray(v, dtype=float)
    n = spec.n
    starts = range(0, spec.N, ROW_BLOCK)

    def rows(i0):
        if dense is not None:
            return _kahan_rowdot(dense[i0:i0 + ROW_BLOCK], v)
        return _kahan_rowdot(_block(n[i0:i0 + ROW_BLOCK], n, spec.alpha), v)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(rows, starts))
    else:
        parts = [rows(i0) for i0 in starts]
    return np.concatenate(parts)


def quadratic_form(spec: GcdMatrixSpec, c) -> float:
    """sum_{k,l} c_k c_l g_{kl}, O(N^2) with compensated summation."""
    c = np.asarray(c, dtype=float)
    if c.shape != (spec.N,):
        raise ParameterError(f"need {spec.N} coefficients, got {c.shape}")
    Gc = matvec(spec, c)
    return math.fsum((c * Gc).tolist())


@dataclass
class SpectralResult:
    lam: float
    residual: float
    iterations: int
    certified_interval: tuple[float, float]
    converged: bool = True
    vector: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "residual": self.residual,
            "iterations": self.iterations,
            "certified_interval": list(self.certified_interval),
            "converged": self.converged,
        }


def largest_eigenvalue(spec: GcdMatrixSpec, tol: float = 1e-10,
                       max_iter: int = 100_000, threads: int = 1,
                       v0=None) -> SpectralResult:
    """Power iteration with Rayleigh-quotient estimates.

    All entries are positive, so the Perron vector is positive and a positive
    start converges to it.  The certified interval is

        lower = max(Rayleigh quotient, min_k (Gv)_k / v_k)
        upper = max_k (Gv)_k / v_k          (Collatz-Wielandt)

    both valid for any positive v, then widened by the floating-point error
    of the entries and the matvec.  On hitting ``max_iter`` the best interval
    is returned with ``converged=False``.  The vector is one maximiser; when
    the top eigenvalue is (near-)multiple it need not be unique.
    """
    N = spec.N
    v = np.ones(N) if v0 is None else np.abs(np.asarray(v0, dtype=float)) + 1e-300
    v /= np.linalg.norm(v)
    it = 0
    rho = res = 0.0
    lo, hi = 0.0, math.inf
    dense = dense_matrix(spec) if N <= CACHE_THRESHOLD else None
    w = matvec(spec, v, threads, dense)
    while True:
        rho = float(v @ w)
        res = float(np.linalg.norm(w - rho * v))
        if np.all(v > 0):
            ratio = w / v
            lo, hi = max(lo, rho, float(ratio.min())), min(hi, float(ratio.max()))
        else:
            lo = max(lo, rho)
        if res < tol or it >= max_iter:
            break
        v = w / np.linalg.norm(w)
        w = matvec(spec, v, threads, dense)
        it += 1
    if not hi < math.inf:
        hi = rho + res
    # outward rounding: relative error of the entries and of each (Gv)_k
    pad = (N + 8 + 2 * max(math.log(n) for n in spec.dilations)) * EPS
    lo, hi = min(lo, rho) * (1 - pad), max(hi, rho) * (1 + pad)
    return SpectralResult(rho, res, it, (lo, hi), converged=res < tol, vector=v)


def jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-14, max_sweeps: int = 50) -> np.ndarray:
    """Cyclic Jacobi rotations for a symmetric matrix; sorted eigenvalues."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    scale = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-20 * (abs(A[p, p]) + abs(A[q, q])) or abs(apq) < 1e-300:
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * Ap - s * Aq, s * Ap + c * Aq
                Rp, Rq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * Rp - s * Rq, s * Rp + c * Rq
    return np.sort(np.diag(A))


def min_eigenvalue(spec: GcdMatrixSpec, threshold: int = DENSE_THRESHOLD) -> SpectralResult:
    """Smallest eigenvalue from a full dense symmetric eigensolve (LAPACK).

    The interval is [mu - r, mu + r] with r the eigenpair residual plus a
    rounding allowance.
    """
    if spec.N > threshold:
        raise CapabilityError(f"dense path limited to N <= {threshold}")
    A = dense_matrix(spec)
    vals, vecs = np.linalg.eigh(A)
    mu, v = float(vals[0]), vecs[:, 0]
    r = float(np.linalg.norm(A @ v - mu * v))
    # plus the rounding of the computed residual itself
    r += (spec.N + 8) * EPS * float(np.abs(vals).max())
    return SpectralResult(mu, r, 0, (mu - r, mu + r), vector=v)


def hilberdink_majorant(c, alpha: float, M: int = 1) -> float:
    """sum_{k <= N^2} b_k^2 with b_k = k^-a sum_{d | k, d >= M} d^a |c_d|.

    ``c`` holds c_1..c_N.  Built by running over d and its multiples.
    """
    c = np.abs(np.asarray(c, dtype=float))
    N = c.size
    if not 1 <= M <= N:
        raise ParameterError("need 1 <= M <= N")
    K = N * N
    acc = np.zeros(K + 1)
    for d in range(M, N + 1):
        if c[d - 1]:
            acc[d::d] += d**alpha * c[d - 1]
    k = np.arange(1, K + 1, dtype=float)
    b = acc[1:] * k ** (-alpha)
    return math.fsum((b * b).tolist())


def tail_quadratic_form(c, alpha: float, M: int = 1) -> float:
    """sum_{k,l >= M} |c_k c_l| g_{kl} over identity dilations."""
    c = np.abs(np.asarray(c, dtype=float))
    N = c.size
    sub = GcdMatrixSpec(alpha, tuple(range(M, N + 1)))
    return quadratic_form(sub, c[M - 1:])


def growth_exponent(lam: float, N: int, alpha: float) -> float:
    """log Lambda * log log N / (log N)^(1 - alpha), clamped logs."""
    from .numtheory import clog, cloglog
    return math.log(lam) * cloglog(N) / clog(N) ** (1 - alpha)


def export_csv(spec: GcdMatrixSpec, path) -> None:
    """Row-major CSV, 17 significant digits."""
    A = dense_matrix(spec)
    np.savetxt(path, A, delimiter=",", fmt="%.17g")
