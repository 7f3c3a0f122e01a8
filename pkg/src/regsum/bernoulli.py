"""Bernoulli numbers/polynomials in exact rationals and high-precision log-Gamma."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb

import mpmath

__all__ = [
    "BernoulliTable", "bernoulli_numbers", "bernoulli", "bernoulli_poly",
    "bernoulli_poly_coeffs", "log_gamma", "log_gamma_stirling", "DEFAULT_DPS",
]

DEFAULT_DPS = 50


class BernoulliTable(tuple):
    """B_0..B_N as Fractions (B_1 = -1/2)."""

    __slots__ = ()

    @property
    def N(self) -> int:
        return len(self) - 1


@lru_cache(maxsize=None)
def _table(N: int) -> BernoulliTable:
    B = [Fraction(1)]
    for n in range(1, N + 1):
        acc = sum(comb(n + 1, k) * B[k] for k in range(n))
        B.append(-acc / (n + 1))
    return BernoulliTable(B)


def bernoulli_numbers(N: int) -> BernoulliTable:
    """B_0..B_N from sum_{k=0}^{n} C(n+1, k) B_k = 0."""
    if N < 0:
        raise ValueError("N must be >= 0")
    # grow in blocks so repeated calls share work
    size = max(N, 16)
    size = 1 << (size - 1).bit_length()
    return BernoulliTable(_table(size)[: N + 1])


def bernoulli(n: int) -> Fraction:
    return bernoulli_numbers(n)[n]


@lru_cache(maxsize=None)
def bernoulli_poly_coeffs(n: int) -> tuple[Fraction, ...]:
    """Coefficients c_j of B_n(x) = sum_j c_j x^j, j = 0..n."""
    B = bernoulli_numbers(n)
    return tuple(comb(n, j) * B[n - j] for j in range(n + 1))


def bernoulli_poly(n: int, x) -> Fraction:
    x = Fraction(x)
    acc = Fraction(0)
    for c in reversed(bernoulli_poly_coeffs(n)):
        acc = acc * x + c
    return acc


def _as_fraction(x) -> Fraction:
    x = Fraction(x)
    if x <= 0:
        raise ValueError(f"log_gamma needs x > 0, got {x}")
    return x


def log_gamma(x, dps: int = DEFAULT_DPS) -> mpmath.mpf:
    """log Gamma(x) for rational x > 0, accurate to about 10**-dps.

    Backed by mpmath; :func:`log_gamma_stirling` is the independent route.
    """
    x = _as_fraction(x)
    if x == 1 or x == 2:
        return mpmath.mpf(0)
    with mpmath.workdps(dps + 10):
        return mpmath.loggamma(mpmath.mpf(x.numerator) / x.denominator)


def _stirling_terms(dps: int):
    # B_{2k} / (2k (2k-1)) for the asymptotic series
    N = 4 * dps + 8
    B = bernoulli_numbers(N)
    return [B[2 * k] / (2 * k * (2 * k - 1)) for k in range(1, N // 2 + 1)]


_stirling_cache: dict[int, list] = {}


def log_gamma_stirling(x, dps: int = DEFAULT_DPS, return_bound: bool = False):
    """log Gamma(x) by upward shift to z >= dps and the Stirling series.

    The series is truncated once a term drops below 10**-(dps+5); for real
    z > 0 the remainder is bounded by the first omitted term, which is
    returned as the error bound when ``return_bound`` is set.
    """
    x = _as_fraction(x)
    a, b = x.numerator, x.denominator
    shift = max(0, -(-(dps * b - a) // b))
    terms = _stirling_cache.get(dps)
    if terms is None:
        terms = _stirling_cache[dps] = _stirling_terms(dps)
    with mpmath.workdps(dps + 15):
        prod_int = 1
        for j in range(shift):
            prod_int *= a + j * b
        top = a + shift * b
        logb = mpmath.log(b)
        logz = mpmath.log(top) - logb
        z = mpmath.mpf(top) / b
        value = (z - mpmath.mpf(1) / 2) * logz - z + mpmath.log(2 * mpmath.pi) / 2
        inv = 1 / z
        inv2 = inv * inv
        power = inv
        eps = mpmath.mpf(10) ** -(dps + 5)
        bound = None
        for c in terms:
            term = (mpmath.mpf(c.numerator) / c.denominator) * power
            if abs(term) < eps:
                bound = abs(term)
                break
            value += term
            power *= inv2
        if bound is None:
            raise ArithmeticError("Stirling series did not reach the requested precision")
        value = value - mpmath.log(prod_int) + shift * logb
        value = +value
    return (value, bound) if return_bound else value
