"""Fourier profiles of mean-zero 1-periodic functions in the class C_alpha."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .numtheory import DomainError

CoeffRule = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class FourierProfile:
    """Sine/cosine coefficients ``(a_j, b_j)`` of a function in C_alpha.

    ``coeff_rule`` maps an integer array ``j >= 1`` to the pair of coefficient
    arrays.  ``bound_constant`` is a constant C with |a_j|, |b_j| <= C j^-alpha.
    ``parity`` is +1 for even, -1 for odd functions and 0 when neither; it
    lets point evaluation near the right end of a period reuse the left end.
    """

    alpha: float
    kind: str
    coeff_rule: CoeffRule = field(repr=False, compare=False)
    bound_constant: float = 1.0
    parity: int = 0
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False, compare=False)
    tail: Optional[Callable[[int, int], float]] = field(
        default=None, repr=False, compare=False)

    def coefficients(self, j) -> tuple[np.ndarray, np.ndarray]:
        j = np.asarray(j, dtype=np.int64)
        if np.any(j < 1):
            raise DomainError("Fourier index must be >= 1")
        a, b = self.coeff_rule(j)
        return np.asarray(a, dtype=float), np.asarray(b, dtype=float)

    def tail_sq(self, r: int, T: int) -> float:
        """Upper bound for sum_{j > T} (a_{jr}^2 + b_{jr}^2)."""
        if self.tail is not None:
            return self.tail(r, T)
        a = self.alpha
        # both a and b obey the bound, so each contributes C^2 (jr)^{-2a}
        return 2 * self.bound_constant**2 * r ** (-2 * a) * tail_power_sum(2 * a, T)

    def evaluate(self, x) -> np.ndarray:
        """Point values on (0, 1); periodic extension elsewhere."""
        if self.func is None:
            raise NotImplementedError(f"profile {self.kind!r} has no point evaluator")
        x = np.asarray(x, dtype=float)
        return self.func(x - np.floor(x))

    def check_bound(self, horizon: int = 10_000) -> bool:
        j = np.arange(1, horizon + 1)
        a, b = self.coefficients(j)
        lim = self.bound_constant * j ** (-self.alpha) * (1 + 1e-12)
        return bool(np.all(np.abs(a) <= lim) and np.all(np.abs(b) <= lim))


def tail_power_sum(p: float, T: int) -> float:
    """Upper bound for sum_{j > T} j^-p (p > 1) by the integral from T."""
    if T < 1:
        raise DomainError("tail needs T >= 1")
    return T ** (1 - p) / (p - 1)


def sine_extremal(alpha: float) -> FourierProfile:
    """f_alpha: a_j = j^-alpha, b_j = 0."""
    from .special import eval_f_alpha

    def rule(j):
        return j.astype(float) ** (-alpha), np.zeros(j.shape)

    return FourierProfile(
        alpha, "sine_extremal", rule, 1.0, parity=-1,
        func=lambda x: eval_f_alpha(alpha, x, "sine"),
        tail=lambda r, T: r ** (-2 * alpha) * tail_power_sum(2 * alpha, T),
    )


def cosine_extremal(alpha: float) -> FourierProfile:
    """bar f_alpha: a_j = 0, b_j = j^-alpha."""
    from .special import eval_f_alpha

    def rule(j):
        return np.zeros(j.shape), j.astype(float) ** (-alpha)

    return FourierProfile(
        alpha, "cosine_extremal", rule, 1.0, parity=1,
        func=lambda x: eval_f_alpha(alpha, x, "cosine"),
        tail=lambda r, T: r ** (-2 * alpha) * tail_power_sum(2 * alpha, T),
    )


def bernoulli() -> FourierProfile:
    """f_1(x) = pi (1/2 - {x}) = sum_j sin(2 pi j x) / j."""
    from .special import eval_f1

    def rule(j):
        return 1.0 / j.astype(float), np.zeros(j.shape)

    return FourierProfile(
        1.0, "bernoulli", rule, 1.0, parity=-1, func=eval_f1,
        tail=lambda r, T: r ** -2.0 * tail_power_sum(2.0, T),
    )


def custom(alpha: float, coeff_rule: CoeffRule, bound_constant: float,
           parity: int = 0, func=None, tail=None) -> FourierProfile:
    if not bound_constant > 0:
        raise DomainError("bound constant must be positive")
    return FourierProfile(alpha, "custom", coeff_rule, bound_constant,
                          parity=parity, func=func, tail=tail)


def zero_profile(alpha: float = 0.75) -> FourierProfile:
    def rule(j):
        return np.zeros(j.shape), np.zeros(j.shape)

    return FourierProfile(alpha, "custom", rule, 1.0, parity=-1,
                          func=lambda x: np.zeros(np.shape(x)),
                          tail=lambda r, T: 0.0)


def log_damped_profile(gamma: float, K: float = 1.0) -> FourierProfile:
    """|a_j| = K j^{-1/2} (log j)^{-gamma}, the borderline example for psi."""
    if not gamma > 0.5:
        raise DomainError("gamma must exceed 1/2")

    def rule(j):
        jf = j.astype(float)
        return K * jf**-0.5 * np.maximum(1.0, np.log(jf)) ** -gamma, np.zeros(j.shape)

    def tail(r: int, T: int) -> float:
        # sum_{j>T} (jr)^-1 (log jr)^-2g <= (1/r) int_T^inf dt / (t (log rt)^2g)
        lo = max(math.log(r * T), 1.0)
        head = 0.0
        if math.log(r * T) < 1.0:
            # clamped region e/r > T: the integrand is 1/(rt) up to t = e/r
            t1 = math.e / r
            head = math.log(t1 / T) / r
            lo = 1.0
        return K**2 * (head + lo ** (1 - 2 * gamma) / ((2 * gamma - 1) * r))

    return FourierProfile(0.5, "custom", rule, K, parity=-1, tail=tail)
