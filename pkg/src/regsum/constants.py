"""Euler products, prime sums and zeta values with explicit error bounds.

Each constant is stored as an :class:`Entry` holding an mpmath value, an
error bound and a short description of how it was obtained.

Tail bounds for sums over primes p > B use the Rosser-Schoenfeld estimates
B/log B < pi(B) (B >= 17) and pi(t) < 1.25506 t/log t (t > 1).  Partial
summation then gives, for g(t) = t**-k,

    sum_{p > B} p**-k  <=  (1.25506 k/(k-1) - 1) / (B**(k-1) log B).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np

from .arith import dedekind_psi, mobius, primes_up_to, trial_factorize
from .bernoulli import bernoulli, bernoulli_numbers

__all__ = [
    "EulerProductSpec", "Entry", "ConstantStore", "euler_product", "prime_tail_bound",
    "prime_log_tail_bound", "zeta_em", "zeta_values", "euler_gamma", "euler_gamma_em",
    "k_constant", "k_constant_term", "lambda_phi_sum", "k2_series", "k2_series_term", "k2_from_prime_sum", "build_store",
    "spec_K1", "spec_C", "spec_D", "spec_D_printed", "spec_E", "spec_tau_product",
    "spec_F0", "spec_trivial", "DEFAULT_PRIME_BOUND",
]

DEFAULT_PRIME_BOUND = 10**7
RS_UPPER = 1.25506
HEAD = 1000  # primes up to here are accumulated exactly/in mpmath


def prime_tail_bound(B: int, k: int) -> float:
    """Upper bound for sum_{p > B} p**-k, k >= 2, B >= 17."""
    if B < 17 or k < 2:
        raise ValueError("needs B >= 17 and k >= 2")
    return (RS_UPPER * k / (k - 1) - 1) / (B ** (k - 1) * math.log(B))


def prime_log_tail_bound(B: int, k: int) -> float:
    """Upper bound for sum_{p > B} log(p) p**-k, k >= 2, B >= 17."""
    if B < 17 or k < 2:
        raise ValueError("needs B >= 17 and k >= 2")
    # -g' <= k log t / t**(k+1) for g = log t / t**k
    return (RS_UPPER * k / (k - 1) - 1) / B ** (k - 1)


@dataclass(frozen=True)
class EulerProductSpec:
    """prod_p local_factor(p), with |log local_factor(p)| <= tail_coeff / p**tail_decay for p > 100.

    ``deviation`` is the vectorised float rule for local_factor(p) - 1, used
    beyond the exact head of the product.
    """

    name: str
    local_factor: Callable[[int], Fraction]
    deviation: Callable[[np.ndarray], np.ndarray]
    tail_decay: int
    tail_coeff: float
    description: str = ""

    def __post_init__(self):
        if self.tail_decay < 2:
            raise ValueError(f"{self.name}: tail_decay must be >= 2 for a convergent product")


@dataclass
class Entry:
    value: mpmath.mpf
    error_bound: float
    method: str

    def as_json(self, name: str, digits: int = 30) -> dict:
        return {
            "name": name,
            "value": mpmath.nstr(self.value, digits, min_fixed=-mpmath.inf, max_fixed=mpmath.inf) if self.value else "0",
            "error_bound": float(self.error_bound),
            "method": self.method,
        }


@dataclass
class ConstantStore:
    entries: dict[str, Entry] = field(default_factory=dict)
    prime_bound: int = DEFAULT_PRIME_BOUND

    def __getitem__(self, name: str) -> mpmath.mpf:
        try:
            return self.entries[name].value
        except KeyError:
            raise KeyError(f"constant {name!r} is not in the store") from None

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def error(self, name: str) -> float:
        return self.entries[name].error_bound

    def add(self, name: str, value, error_bound, method: str) -> None:
        self.entries[name] = Entry(mpmath.mpf(value), float(error_bound), method)

    def to_json(self, digits: int = 30) -> str:
        rows = [self.entries[k].as_json(k, digits) for k in sorted(self.entries)]
        return json.dumps(rows, indent=2)


# --- Euler products -------------------------------------------------------------

@lru_cache(maxsize=4)
def _primes(bound: int) -> np.ndarray:
    pr = primes_up_to(bound)
    pr.setflags(write=False)
    return pr


def euler_product(spec: EulerProductSpec, prime_bound: int = DEFAULT_PRIME_BOUND,
                  dps: int = 30) -> tuple[mpmath.mpf, float]:
    """Truncated product over p <= prime_bound and a bound on |true - returned|."""
    if prime_bound < 100:
        raise ValueError("prime_bound must be >= 100")
    pr = _primes(prime_bound)
    head = pr[pr <= HEAD]
    tail = pr[pr > HEAD].astype(float)
    with mpmath.workdps(dps + 10):
        log_head = mpmath.mpf(0)
        for p in head.tolist():
            lf = spec.local_factor(p)
            if lf <= 0:
                raise ArithmeticError(f"{spec.name}: non-positive local factor at p={p}")
            log_head += mpmath.log(mpmath.mpf(lf.numerator) / lf.denominator)
        with np.errstate(invalid="ignore", divide="ignore"):
            logs = np.log1p(spec.deviation(tail)) if tail.size else np.zeros(0)
        if logs.size and not np.all(np.isfinite(logs)):
            raise ArithmeticError(f"{spec.name}: non-positive local factor beyond p={HEAD}")
        log_tail = math.fsum(logs.tolist())
        if log_head == 0 and not logs.any() and spec.tail_coeff == 0:
            return mpmath.mpf(1), 0.0
        rounding = 4 * np.finfo(float).eps * float(np.abs(logs).sum()) + 1e-300
        trunc = spec.tail_coeff * prime_tail_bound(prime_bound, spec.tail_decay)
        value = mpmath.exp(log_head + log_tail)
        delta = trunc + rounding + float(mpmath.mpf(10) ** -dps)
        err = float(value) * math.expm1(delta)
        return +value, err


def spec_trivial() -> EulerProductSpec:
    return EulerProductSpec("one", lambda p: Fraction(1), lambda p: np.zeros_like(p), 2, 0.0,
                            "prod 1")


def spec_K1() -> EulerProductSpec:
    return EulerProductSpec(
        "K1",
        lambda p: 1 - Fraction(1, p * (p + 1)),
        lambda p: -1.0 / (p * (p + 1.0)),
        2, 1.0, "prod_p (1 - 1/(p(p+1)))")


def spec_C(m: int) -> EulerProductSpec:
    """C_m = sum_d phi_{1-2m}(d) phi(d)/d^3."""
    def local(p):
        return 1 - Fraction((p - 1) * (p ** (2 * m - 1) - 1), p * (p ** (2 * m + 1) - 1))

    def dev(p):
        return -(p - 1.0) * (1.0 - p ** (1.0 - 2 * m)) / (p * p * (1.0 - p ** (-2.0 * m - 1)) * p)

    return EulerProductSpec(f"C_{m}", local, dev, 2, 1.01,
                            "prod_p (1 - (p-1)(p^(2m-1)-1)/(p(p^(2m+1)-1)))")


def spec_D(m: int) -> EulerProductSpec:
    """sum_d phi_{1-2m}(d) phi(d)/(d phi_2(d)); main-term constant of the phi-weighted Bernoulli sum."""
    def local(p):
        return 1 - Fraction(p * (p ** (2 * m - 1) - 1), (p + 1) * (p ** (2 * m + 1) - 1))

    def dev(p):
        return -(1.0 - p ** (1.0 - 2 * m)) / ((p + 1.0) * p * (1.0 - p ** (-2.0 * m - 1)))

    return EulerProductSpec(f"D_{m}", local, dev, 2, 1.01,
                            "prod_p (1 - p(p^(2m-1)-1)/((p+1)(p^(2m+1)-1)))")


def spec_D_printed(m: int) -> EulerProductSpec:
    """The variant with p^(2m)-1 in the denominator; its local factors are 1 - O(1/p)."""
    def local(p):
        return 1 - Fraction(p * (p ** (2 * m - 1) - 1), (p + 1) * (p ** (2 * m) - 1))

    def dev(p):
        return -(1.0 - p ** (1.0 - 2 * m)) / ((p + 1.0) * (1.0 - p ** (-2.0 * m)))

    return EulerProductSpec(f"D_{m}_printed", local, dev, 1, 1.0,
                            "prod_p (1 - p(p^(2m-1)-1)/((p+1)(p^(2m)-1)))")


def spec_E(m: int) -> EulerProductSpec:
    """sum_d phi_{1-2m}(d) phi(d)/(d^2 phi_2(d)); E_0 equals F0."""
    def local(p):
        return 1 - Fraction(p * (p ** (2 * m - 1) - 1), (p + 1) * (p ** (2 * m + 2) - 1))

    def dev(p):
        return -(1.0 - p ** (1.0 - 2 * m)) / ((p + 1.0) * p * p * (1.0 - p ** (-2.0 * m - 2)))

    decay = 3 if m >= 1 else 2
    return EulerProductSpec(f"E_{m}", local, dev, decay, 1.01,
                            "prod_p (1 - p(p^(2m-1)-1)/((p+1)(p^(2m+2)-1)))")


def spec_tau_product() -> EulerProductSpec:
    return EulerProductSpec(
        "T",
        lambda p: 1 + Fraction((2 * p * p - 1) * p, (p - 1) ** 2 * (p + 1) ** 3),
        lambda p: (2.0 * p * p - 1.0) * p / ((p - 1.0) ** 2 * (p + 1.0) ** 3),
        2, 2.05, "prod_p (1 + (2p^2-1)p/((p-1)^2(p+1)^3))")


def spec_F0() -> EulerProductSpec:
    return EulerProductSpec(
        "F0",
        lambda p: 1 + Fraction(1, (p + 1) ** 2),
        lambda p: 1.0 / (p + 1.0) ** 2,
        2, 1.0, "prod_p (1 + 1/(p+1)^2)")


# --- zeta, gamma and prime sums -----------------------------------------------------

def zeta_em(s: int, dps: int = 40, derivative: bool = False) -> tuple[mpmath.mpf, float]:
    """zeta(s) or zeta'(s), s > 1, by Euler-Maclaurin with N = dps terms summed directly.

    Returns (value, bound) where bound is twice the first omitted correction.
    """
    if s <= 1:
        raise ValueError("s must exceed 1")
    N = max(dps, 20)
    with mpmath.workdps(dps + 15):
        s_ = mpmath.mpf(s)
        logN = mpmath.log(N)
        Ns = mpmath.power(N, -s_)
        if derivative:
            total = -mpmath.fsum(mpmath.log(n) * mpmath.power(n, -s_) for n in range(2, N))
            total += -N * Ns * logN / (s_ - 1) - N * Ns / (s_ - 1) ** 2 - logN * Ns / 2
        else:
            total = mpmath.fsum(mpmath.power(n, -s_) for n in range(1, N))
            total += N * Ns / (s_ - 1) + Ns / 2
        eps = mpmath.mpf(10) ** -(dps + 5)
        B = bernoulli_numbers(4 * dps + 8)
        poch = s_  # (s)_{2k-1}
        dpoch = mpmath.mpf(1)  # d/ds of the Pochhammer symbol
        Npow = Ns / N  # N^(-s-1)
        bound = None
        for k in range(1, len(B) // 2):
            c = mpmath.mpf(B[2 * k].numerator) / B[2 * k].denominator / mpmath.factorial(2 * k)
            if derivative:
                term = c * (dpoch - poch * logN) * Npow
            else:
                term = c * poch * Npow
            if abs(term) < eps:
                bound = 2 * abs(term)
                break
            total += term
            # advance (s)_{2k-1} -> (s)_{2k+1}
            a, b = s_ + 2 * k - 1, s_ + 2 * k
            dpoch = dpoch * a * b + poch * (a + b)
            poch = poch * a * b
            Npow /= N * N
        if bound is None:
            raise ArithmeticError("Euler-Maclaurin expansion did not converge")
        return +total, float(bound)


def euler_gamma_em(dps: int = 40) -> tuple[mpmath.mpf, float]:
    """gamma = H_N - log N - 1/(2N) + sum_k B_2k/(2k N^2k)."""
    N = max(dps, 20)
    with mpmath.workdps(dps + 15):
        H = mpmath.fsum(mpmath.mpf(1) / n for n in range(1, N + 1))
        total = H - mpmath.log(N) - mpmath.mpf(1) / (2 * N)
        eps = mpmath.mpf(10) ** -(dps + 5)
        B = bernoulli_numbers(4 * dps + 8)
        bound = None
        for k in range(1, len(B) // 2):
            term = mpmath.mpf(B[2 * k].numerator) / B[2 * k].denominator / (2 * k * mpmath.mpf(N) ** (2 * k))
            if abs(term) < eps:
                bound = 2 * abs(term)
                break
            total += term
        return +total, float(bound)


def euler_gamma(dps: int = 40) -> tuple[mpmath.mpf, float, float]:
    """(value, bound, disagreement with mpmath.euler)."""
    value, bound = euler_gamma_em(dps)
    with mpmath.workdps(dps + 10):
        other = +mpmath.euler
    return value, bound, float(abs(value - other))


def zeta_values(store: ConstantStore, dps: int = 40, m_max: int = 4) -> None:
    with mpmath.workdps(dps + 10):
        store.add("zeta(2)", mpmath.pi**2 / 6, 10.0 ** -dps, "pi^2/6")
        for m in range(1, m_max + 1):
            s = 2 * m + 1
            v, b = zeta_em(s, dps)
            store.add(f"zeta({s})", v, b, "Euler-Maclaurin, N=dps")
        v, b = zeta_em(2, dps, derivative=True)
        store.add("zeta'(2)", v, b, "Euler-Maclaurin on -sum log n/n^2")
        g, gb, _ = euler_gamma(dps)
        store.add("gamma", g, gb, "Euler-Maclaurin on H_N - log N")
        store.add("log_sqrt_2pi", mpmath.log(2 * mpmath.pi) / 2, 10.0 ** -dps, "log(2 pi)/2")


def _prime_sum(pr: np.ndarray, head_term: Callable[[int], mpmath.mpf],
               tail_term: Callable[[np.ndarray], np.ndarray]) -> tuple[mpmath.mpf, float]:
    head = pr[pr <= HEAD].tolist()
    tail = pr[pr > HEAD].astype(float)
    total = mpmath.fsum(head_term(p) for p in head)
    vals = tail_term(tail)
    rounding = 4 * np.finfo(float).eps * float(np.abs(vals).sum()) + 1e-300
    return total + math.fsum(vals.tolist()), rounding


def log_derivative_zeta2_prime_sum(prime_bound: int, dps: int = 30) -> tuple[mpmath.mpf, float]:
    """-zeta'(2)/zeta(2) = sum_d Lambda(d)/d^2 = sum_p log p/(p^2-1), truncated at p <= prime_bound."""
    pr = _primes(prime_bound)
    with mpmath.workdps(dps + 10):
        v, rnd = _prime_sum(pr, lambda p: mpmath.log(p) / (p * p - 1),
                            lambda t: np.log(t) / (t * t - 1.0))
    return +v, rnd + 1.0001 * prime_log_tail_bound(prime_bound, 2)


def lambda_phi_sum(prime_bound: int, dps: int = 30) -> tuple[mpmath.mpf, float]:
    """L1 = sum_d Lambda(d) phi(d)/d^3 = sum_p log p/(p(p+1))."""
    pr = _primes(prime_bound)
    with mpmath.workdps(dps + 10):
        v, rnd = _prime_sum(pr, lambda p: mpmath.log(p) / (p * (p + 1)),
                            lambda t: np.log(t) / (t * (t + 1.0)))
    return +v, rnd + prime_log_tail_bound(prime_bound, 2)


def k_constant(bound: int, dps: int = 30, method: str = "prime") -> tuple[mpmath.mpf, float]:
    """K = sum_d Lambda(d)/(d^2 psi(d)).

    ``method='prime'`` uses sum_p log p * p/((p+1)(p^3-1)); ``method='direct'``
    sums Lambda(d)/(d^2 psi(d)) over prime powers d <= bound.
    """
    if bound < 100:
        raise ValueError("bound must be >= 100")
    pr = _primes(bound)
    with mpmath.workdps(dps + 10):
        if method == "prime":
            v, rnd = _prime_sum(
                pr, lambda p: mpmath.log(p) * p / ((p + 1) * (mpmath.mpf(p) ** 3 - 1)),
                lambda t: np.log(t) * t / ((t + 1.0) * (t**3 - 1.0)))
            return +v, rnd + 1.0001 * prime_log_tail_bound(bound, 3)
        if method == "direct":
            total = mpmath.mpf(0)
            for p in pr.tolist():
                lp = mpmath.log(p)
                d = p
                while d <= bound:
                    psi = d + d // p
                    total += lp / (mpmath.mpf(d) ** 2 * psi)
                    d *= p
            # every prime power above the bound: log d/d^3 summed over all integers d > bound
            lb = math.log(bound)
            tail = (2 * lb + 1) / (4 * bound**2) + lb / bound**3
            return +total, tail + 1e-25
    raise ValueError(f"unknown method {method!r}")


def k2_from_prime_sum(store: ConstantStore, prime_bound: int, dps: int = 30) -> tuple[mpmath.mpf, float]:
    """K2 = K1 (2 gamma - 1/2 - 2 zeta'(2)/zeta(2) + sum_p p log p/((p+1)(p^2+p-1)))."""
    pr = _primes(prime_bound)
    with mpmath.workdps(dps + 10):
        s, rnd = _prime_sum(
            pr, lambda p: p * mpmath.log(p) / ((p + 1) * (mpmath.mpf(p) ** 2 + p - 1)),
            lambda t: t * np.log(t) / ((t + 1.0) * (t * t + t - 1.0)))
        s_err = rnd + 1.0001 * prime_log_tail_bound(prime_bound, 2)
        K1, z2, dz2, g = store["K1"], store["zeta(2)"], store["zeta'(2)"], store["gamma"]
        inner = 2 * g - mpmath.mpf(1) / 2 - 2 * dz2 / z2 + s
        value = K1 * inner
        err = (store.error("K1") * abs(float(inner)) + float(K1) * (s_err + 2 * store.error("gamma")
               + 2 * store.error("zeta'(2)") / float(z2)))
        return +value, err


def k2_series_term(n: int, alpha_variant: str, dps: int = 30) -> mpmath.mpf:
    """The n-th summand mu(n)(log n - alpha(n) + 2 beta(n))/(n psi(n)) of the K2 series."""
    if alpha_variant not in ("paper_literal", "log_p"):
        raise ValueError(f"unknown alpha variant {alpha_variant!r}")
    fact = trial_factorize(n)
    mu = mobius(fact)
    if mu == 0:
        return mpmath.mpf(0)
    with mpmath.workdps(dps + 10):
        logn = mpmath.log(n)
        if alpha_variant == "paper_literal":
            alpha = mpmath.fsum(logn / (p - 1) for p, _ in fact)
        else:
            alpha = mpmath.fsum(mpmath.log(p) / (p - 1) for p, _ in fact)
        beta = mpmath.fsum(mpmath.log(p) / (p * p - 1) for p, _ in fact)
        return +(mu * (logn - alpha + 2 * beta) / (n * dedekind_psi(fact)))


def k_constant_term(d: int, dps: int = 30) -> mpmath.mpf:
    """Lambda(d)/(d^2 psi(d)), the d-th summand of K."""
    fact = trial_factorize(d)
    if len(fact) != 1:
        return mpmath.mpf(0)
    with mpmath.workdps(dps + 10):
        return +(mpmath.log(fact[0][0]) / (mpmath.mpf(d) ** 2 * dedekind_psi(fact)))


def k2_series(store: ConstantStore, truncation: int, alpha_variant: str) -> tuple[float, float]:
    """K1(2 gamma - 1/2 - 2 zeta'(2)/zeta(2)) - sum_{n<=N} mu(n)(log n - alpha(n) + 2 beta(n))/(n psi(n)).

    ``alpha_variant='paper_literal'`` uses alpha(n) = sum_{p|n} log(n)/(p-1);
    ``'log_p'`` uses sum_{p|n} log(p)/(p-1).  Returns (value, spread) where
    spread bounds the neglected terms n > N by A (log N + 1)/N, A being 1.5x
    the largest |term| n^2/log n seen below N.
    """
    if truncation < 10**4:
        raise ValueError("truncation must be >= 10^4")
    if alpha_variant not in ("paper_literal", "log_p"):
        raise ValueError(f"unknown alpha variant {alpha_variant!r}")
    N = int(truncation)
    n = np.arange(N + 1, dtype=float)
    mu = np.ones(N + 1)
    psi = n.copy()
    inv_pm1 = np.zeros(N + 1)
    logp_pm1 = np.zeros(N + 1)
    beta = np.zeros(N + 1)
    pr = primes_up_to(N)
    for p in pr.tolist():
        mu[p::p] *= -1.0
        mu[p * p :: p * p] = 0.0
        psi[p::p] *= 1.0 + 1.0 / p
        lp = math.log(p)
        inv_pm1[p::p] += 1.0 / (p - 1)
        logp_pm1[p::p] += lp / (p - 1)
        beta[p::p] += lp / (p * p - 1.0)
    idx = np.flatnonzero(mu[1:]) + 1
    logn = np.log(n[idx])
    alpha = logn * inv_pm1[idx] if alpha_variant == "paper_literal" else logp_pm1[idx]
    terms = mu[idx] * (logn - alpha + 2 * beta[idx]) / (n[idx] * psi[idx])
    total = math.fsum(terms.tolist())
    big = idx >= 3
    A = 1.5 * float(np.max(np.abs(terms[big]) * n[idx][big] ** 2 / logn[big]))
    spread = A * (math.log(N) + 1) / N
    K1, z2, dz2, g = (float(store[k]) for k in ("K1", "zeta(2)", "zeta'(2)", "gamma"))
    value = K1 * (2 * g - 0.5 - 2 * dz2 / z2) - total
    return value, spread + store.error("K1") * 4


def build_store(prime_bound: int = DEFAULT_PRIME_BOUND, dps: int = 30, m_max: int = 4,
                k2_alpha: str = "log_p") -> ConstantStore:
    """Evaluate every main-term constant.

    K2 is taken from the prime-sum form unless ``k2_alpha='paper_literal'``,
    in which case the literal n-series value is used instead.
    """
    store = ConstantStore(prime_bound=prime_bound)
    zeta_values(store, dps=max(dps, 30), m_max=m_max)
    for spec in (spec_K1(), spec_tau_product(), spec_F0()):
        v, e = euler_product(spec, prime_bound, dps)
        store.add(spec.name, v, e, spec.description + f", p <= {prime_bound}")
    for m in range(1, m_max + 1):
        for spec in (spec_C(m), spec_D(m), spec_E(m)):
            v, e = euler_product(spec, prime_bound, dps)
            store.add(spec.name, v, e, spec.description + f", p <= {prime_bound}")
    v, e = k_constant(prime_bound, dps)
    store.add("K", v, e, f"sum_p log p * p/((p+1)(p^3-1)), p <= {prime_bound}")
    v, e = log_derivative_zeta2_prime_sum(prime_bound, dps)
    store.add("-zeta'(2)/zeta(2) [prime sum]", v, e, f"sum_p log p/(p^2-1), p <= {prime_bound}")
    v, e = lambda_phi_sum(prime_bound, dps)
    store.add("L1", v, e, f"sum_p log p/(p(p+1)), p <= {prime_bound}")
    v, e = k2_from_prime_sum(store, prime_bound, dps)
    store.add("K2", v, e, "K1(2gamma - 1/2 - 2zeta'(2)/zeta(2) + sum_p p log p/((p+1)(p^2+p-1)))")
    trunc = min(10**6, max(10**4, prime_bound // 10))
    for variant in ("log_p", "paper_literal"):
        v, e = k2_series(store, trunc, variant)
        store.add(f"K2[{variant}]", v, e, f"n-series with alpha={variant}, n <= {trunc}")
    if k2_alpha == "paper_literal":
        store.entries["K2"] = store.entries["K2[paper_literal]"]
    elif k2_alpha != "log_p":
        raise ValueError(f"unknown K2 variant {k2_alpha!r}")
    return store
