"""Block constructions behind the divergence examples.

Every block element is 2^e times a squarefree product of the first primes,
so it is stored as an exponent vector: ``base`` (the fixed power of two)
plus a bitmask selecting primes.  GCDs and logarithms are computed from the
vectors, never from the integers, which exceed 64 bits quickly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .gcd_spectra import CapabilityError
from .numtheory import (DomainError, ParameterError, clog, clog2, cloglog,
                        first_primes)

TH1_MAX_BLOCK = 20
LN2 = math.log(2.0)


@dataclass(frozen=True)
class Block:
    """{2^two_power * prod_{r<=width} p_r^{w_r} : w in {0,1}^width}.

    Element j has exponent bits w_r = (j >> (r-1)) & 1, p_1 = 2 included.
    """
    two_power: int
    width: int

    @property
    def size(self) -> int:
        return 1 << self.width

    @property
    def primes(self) -> list[int]:
        return first_primes(self.width)

    def masks(self) -> np.ndarray:
        return np.arange(self.size, dtype=np.int64)

    def exponent_vectors(self) -> np.ndarray:
        """(size, max(width, 1)) exponents over p_1 = 2, p_2 = 3, ..."""
        bits = (self.masks()[:, None] >> np.arange(self.width)) & 1
        out = np.zeros((self.size, max(self.width, 1)), dtype=np.int64)
        out[:, :self.width] = bits
        out[:, 0] += self.two_power
        return out

    def logs(self) -> np.ndarray:
        """Natural log of each element, vectorised over the bitmasks."""
        lp = np.log(np.asarray(self.primes, dtype=float))
        bits = (self.masks()[:, None] >> np.arange(self.width)) & 1
        return self.two_power * LN2 + bits @ lp

    def elements(self) -> list[int]:
        ps = self.primes
        out = []
        for m in range(self.size):
            v = 1 << self.two_power
            for r, p in enumerate(ps):
                if m >> r & 1:
                    v *= p
            out.append(v)
        return out


def _kron_apply(factors, v: np.ndarray) -> np.ndarray:
    """(F_width x ... x F_1) v with F_r 2x2, bit r-1 of the index <-> F_r."""
    out = v.copy()
    n = out.size
    for r, F in enumerate(factors):
        step = 1 << r
        x = out.reshape(n // (2 * step), 2, step)
        y = np.empty_like(x)
        y[:, 0] = F[0, 0] * x[:, 0] + F[0, 1] * x[:, 1]
        y[:, 1] = F[1, 0] * x[:, 0] + F[1, 1] * x[:, 1]
        out = y.reshape(n)
    return out


def block_quadratic_form(block: Block, alpha: float, c=None) -> float:
    """sum_{k,l in block} c_k c_l gcd(k,l)^2a/(kl)^a in O(width 2^width).

    The common 2-power cancels and each prime contributes the factor
    [[1, p^-a], [p^-a, 1]], so the GCD matrix is a Kronecker product.
    """
    c = np.ones(block.size) if c is None else np.asarray(c, dtype=float)
    factors = [np.array([[1.0, p**-alpha], [p**-alpha, 1.0]]) for p in block.primes]
    return math.fsum((c * _kron_apply(factors, c)).tolist())


def block_gcd_direct(block: Block, alpha: float, c=None) -> float:
    """O(size^2) sum using gcds of exponent vectors."""
    c = np.ones(block.size) if c is None else np.asarray(c, dtype=float)
    m = block.masks()
    lp = np.log(np.asarray(block.primes, dtype=float))
    bits = ((m[:, None] >> np.arange(block.width)) & 1).astype(float)
    parts = []
    for r0 in range(0, block.size, 256):
        rows = bits[r0:r0 + 256]
        # log g^2/(kl) = -sum_r [w_r != w'_r] log p_r  (2-powers cancel)
        diff = np.abs(rows[:, None, :] - bits[None, :, :]) @ lp
        vals = np.outer(c[r0:r0 + 256], c) * np.exp(-alpha * diff)
        parts.append(math.fsum(vals.ravel().tolist()))
    return math.fsum(parts)


def block_gcd_closed(block: Block, alpha: float) -> float:
    return block.size * math.prod(1 + p**-alpha for p in block.primes)


def block_gcd_identity(block: Block, alpha: float) -> tuple[float, float]:
    """(direct, closed) GCD sums over the block."""
    if not 0.5 < alpha < 1:
        raise DomainError("alpha must lie in (1/2, 1)")
    return block_gcd_direct(block, alpha), block_gcd_closed(block, alpha)


def integer_gcd_sum(elements, alpha: float) -> float:
    """Reference sum straight from integer gcds (small blocks only)."""
    total = []
    for k in elements:
        for l in elements:
            g = math.gcd(k, l)
            total.append(math.exp(alpha * (2 * math.log(g) - math.log(k) - math.log(l))))
    return math.fsum(total)


# ---------------------------------------------------------------------------
# single-dilation construction
# ---------------------------------------------------------------------------

def _weyl_exponent(logk: np.ndarray, alpha: float) -> np.ndarray:
    """(log k)^(1-a) / log log k with clamped logs, from log k."""
    L = np.maximum(1.0, logk)
    return L ** (1 - alpha) / np.maximum(1.0, np.log(L))


@dataclass
class Th1Construction:
    alpha: float
    eps: float
    eta: float
    blocks: list[Block]
    coeffs: list[np.ndarray] = field(repr=False)

    def weyl_mass(self, M: int | None = None) -> float:
        """sum over blocks i <= M of sum_k c_k^2 exp(eta/(1-a) L(k))."""
        M = len(self.blocks) if M is None else M
        parts = []
        for b, c in zip(self.blocks[:M], self.coeffs[:M]):
            w = np.exp(self.eta / (1 - self.alpha) * _weyl_exponent(b.logs(), self.alpha))
            parts.append(math.fsum((c * c * w).tolist()))
        return math.fsum(parts)

    def to_json(self) -> dict:
        return {
            "kind": "th1",
            "alpha": self.alpha,
            "eps": self.eps,
            "eta": self.eta,
            "blocks": [_block_json(i + 1, b, c) for i, (b, c) in
                       enumerate(zip(self.blocks, self.coeffs))],
        }


def _block_json(i: int, b: Block, c) -> dict:
    return {
        "index": i,
        "two_power": b.two_power,
        "primes": first_primes(max(b.width, 1)),
        "exponents": b.exponent_vectors().tolist(),
        "coefficients": np.asarray(c, dtype=float).tolist(),
    }


def th1_blocks(alpha: float, eps: float, i_max: int) -> Th1Construction:
    """Blocks {2^(2i) prod_{r<=i} p_r^{w_r}} and their weights."""
    if not 0.5 < alpha < 1:
        raise DomainError("alpha must lie in (1/2, 1)")
    if not 0 < eps < 1:
        raise ParameterError("eps must lie in (0, 1)")
    if i_max < 1:
        raise ParameterError("i_max must be >= 1")
    if i_max > TH1_MAX_BLOCK:
        raise CapabilityError(f"Th1 blocks are materialised only for i <= {TH1_MAX_BLOCK}")
    eta = (1 - 2 * eps) / (1 + eps)
    blocks, coeffs = [], []
    for i in range(1, i_max + 1):
        b = Block(2 * i, i)
        L = _weyl_exponent(b.logs(), alpha)
        c = 2 ** (-i / 2) / i * np.exp(-eta / (2 * (1 - alpha)) * L)
        blocks.append(b)
        coeffs.append(c)
    # disjointness: elements of block i have 2-adic valuation 2i or 2i+1
    return Th1Construction(alpha, eps, eta, blocks, coeffs)


# ---------------------------------------------------------------------------
# general-dilation construction
# ---------------------------------------------------------------------------

def default_delta(alpha: float) -> float:
    """Midpoint of the admissible range 0 < delta < min(1, 1/(1-a) - 2)."""
    top = min(1.0, 1 / (1 - alpha) - 2)
    if not top > 0:
        raise DomainError("need 2 + delta < 1/(1-alpha); alpha too small")
    return top / 2


def default_beta(delta: float) -> float:
    return 0.9 * delta / (2 + delta)


def default_k1(alpha: float, eps: float = 0.1) -> float:
    return ((2 * alpha - 1) / (2 * alpha * LN2)) ** (1 - alpha) / (1 - alpha) - eps


@dataclass
class Th2Construction:
    alpha: float
    beta: float
    delta: float
    K1: float
    eta: float
    A: list[int]
    S: list[int]
    T: list[int]
    blocks: list[Block]
    d: np.ndarray
    gamma_index: list[list[int]] = field(repr=False)

    @property
    def i_max(self) -> int:
        return len(self.blocks)

    def dilations(self) -> list[int]:
        """Flattened (n_k), ascending (blocks occupy disjoint 2-power ranges)."""
        out = []
        for b in self.blocks:
            out.extend(sorted(b.elements()))
        return out

    def coefficients(self) -> np.ndarray:
        return np.concatenate([np.full(b.size, di) for b, di in zip(self.blocks, self.d)])

    def to_json(self) -> dict:
        return {
            "kind": "th2",
            "alpha": self.alpha,
            "beta": self.beta,
            "delta": self.delta,
            "K1": self.K1,
            "eta": self.eta,
            "A": self.A,
            "S": self.S,
            "T": self.T,
            "blocks": [_block_json(i + 1, b, np.full(b.size, di)) for i, (b, di) in
                       enumerate(zip(self.blocks, self.d))],
        }


def _ceil_log2_int(n: int) -> int:
    return (n - 1).bit_length()


def th2_construction(alpha: float, beta: float | None = None, K1: float | None = None,
                     i_max: int = 16, delta: float | None = None) -> Th2Construction:
    """Schedule S_i, T_i, A(i), blocks and block coefficients d_i.

    The schedule runs to S_{i_max + 1} so the last block has a coupling grid.
    """
    if not 0.5 < alpha < 1:
        raise DomainError("alpha must lie in (1/2, 1)")
    delta = default_delta(alpha) if delta is None else delta
    if not (0 < delta < 1 and 2 + delta < 1 / (1 - alpha)):
        raise ParameterError("delta must satisfy 0 < delta < 1 and 2 + delta < 1/(1-alpha)")
    beta = default_beta(delta) if beta is None else beta
    if not (0 < beta < 1 and beta < delta / (2 + delta)):
        raise ParameterError("beta must satisfy 0 < beta < delta/(2+delta)")
    K1 = default_k1(alpha) if K1 is None else K1
    if not K1 > 0:
        raise ParameterError("K1 must be positive")
    if i_max < 1:
        raise ParameterError("i_max must be >= 1")
    eta = 12 / (2 * alpha - 1)
    A, S, T, blocks, gamma = [], [2], [], [], []
    k = 1
    for i in range(1, i_max + 1):
        a_i = 1 if i == 1 else math.ceil(beta * math.log2(i))
        A.append(a_i)
        T.append(S[-1] + _ceil_log2_int(math.prod(first_primes(a_i))))
        S.append(T[-1] + math.ceil(eta * clog2(i)))
        blocks.append(Block(S[i - 1], a_i))
        gamma.append(list(range(k, k + (1 << a_i))))
        k += 1 << a_i
    i = np.arange(1, i_max + 1, dtype=float)
    L = np.array([clog(v) for v in i])
    LL = np.array([cloglog(v) for v in i])
    d = i ** (-beta / 2 - 0.5) / L * np.exp(-K1 * L ** (1 - alpha) / (2 * LL**alpha))
    return Th2Construction(alpha, beta, delta, K1, eta, A, S, T, blocks, d, gamma)


def th2_weyl_mass(con: Th2Construction, M: int | None = None) -> float:
    """sum_k c_k^2 exp(K1 (log i)^(1-a)/(log log i)^a), blockwise."""
    M = con.i_max if M is None else M
    parts = []
    for i in range(1, M + 1):
        w = math.exp(con.K1 * clog(i) ** (1 - con.alpha) / cloglog(i) ** con.alpha)
        parts.append(con.blocks[i - 1].size * con.d[i - 1] ** 2 * w)
    return math.fsum(parts)


# ---------------------------------------------------------------------------
# divergence partial sums
# ---------------------------------------------------------------------------

def block_increments(construction) -> np.ndarray:
    """Per-block norm contributions zeta(2a)/2 * sum c_k c_l gcd-entry."""
    a = construction.alpha
    z = float(zeta(2 * a)) / 2
    if isinstance(construction, Th1Construction):
        return np.array([z * block_quadratic_form(b, a, c)
                         for b, c in zip(construction.blocks, construction.coeffs)])
    return np.array([z * di * di * block_gcd_closed(b, a)
                     for b, di in zip(construction.blocks, construction.d)])


def divergence_partial_sums(construction, M: int) -> list[float]:
    """Cumulative sums of the block contributions for i = 1..M."""
    n = len(construction.blocks)
    if not 1 <= M <= n:
        raise ParameterError(f"need 1 <= M <= {n}")
    inc = block_increments(construction)[:M]
    out, acc = [], []
    for v in inc:
        acc.append(float(v))
        out.append(math.fsum(acc))
    return out


def save_json(construction, path) -> None:
    with open(path, "w") as fh:
        json.dump(construction.to_json(), fh, indent=2)


def load_th2(data: dict) -> Th2Construction:
    """Rebuild a general-dilation construction from its JSON layout."""
    if data.get("kind") != "th2":
        raise ParameterError("not a th2 construction")
    con = th2_construction(data["alpha"], data["beta"], data["K1"],
                           len(data["blocks"]), data["delta"])
    if con.S != data["S"] or con.T != data["T"]:
        raise ParameterError("schedule in file does not match its parameters")
    return con
