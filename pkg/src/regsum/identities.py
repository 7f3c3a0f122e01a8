"""Finite identities over the regular integers mod n.

Each identity has a brute-force left side, summed over Reg_n, and a closed
right side over the unitary divisors of n.  Sides are exact Fractions except
the log-Gamma sums, whose right side is a :class:`LogLinear`.

For sweeps over many n, :func:`power_profile` groups Reg_n by g = gcd(k, n)
and stores sum k^e per group, so one pass over Reg_n serves every weight f
and every exponent at once.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, gcd

import mpmath
import numpy as np

from .arith import (ArithmeticalFunction, Factorization, LogLinear, SpfSieve, _fact,
                    euler_phi, jordan_phi, mobius, divisors, reg_iter, theta,
                    trial_factorize, unitary_divisors, von_mangoldt)
from .bernoulli import bernoulli, bernoulli_poly, bernoulli_poly_coeffs, log_gamma

__all__ = [
    "IDENTITY_KINDS", "VerifyReport", "power_sum_lhs", "power_sum_rhs",
    "bernoulli_sum_lhs", "bernoulli_sum_rhs", "gamma_sum_lhs", "gamma_sum_rhs",
    "coprime_count_check", "power_profile", "gamma_profile", "verify",
    "unitary_phi_sum", "GAMMA_TOLERANCE",
]

IDENTITY_KINDS = ("power_sum", "bernoulli_sum", "gamma_sum", "coprime_count")
GAMMA_TOLERANCE = mpmath.mpf(10) ** -30
MAX_PROFILE_EXPONENT = 8


def _f(f) -> ArithmeticalFunction:
    return ArithmeticalFunction.of(f)


def _nf(n, sieve: SpfSieve | None):
    """(n, Factorization(n)) from an int or a Factorization."""
    if isinstance(n, Factorization):
        return n.value, n
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    if sieve is not None and n <= sieve.limit:
        return n, sieve.factorize(n)
    return n, trial_factorize(n)


@lru_cache(maxsize=65536)
def _unitary_split(fact: Factorization) -> tuple[tuple[int, Factorization, Factorization], ...]:
    """(d, factorization of d, factorization of n/d) for every d || n."""
    return tuple((d, Factorization(pe for pe in fact if pe not in rest), rest)
                 for d, rest in unitary_divisors(fact))


_jordan_cached = lru_cache(maxsize=1 << 18)(jordan_phi)


def unitary_phi_sum(f, fact: Factorization, s: int) -> Fraction:
    """sum_{d||n} f(n/d) phi_s(d).

    For s = -t <= 0 this uses d^t phi_{-t}(d) = prod_{p|d} (1 - p^t), so the
    whole sum is an integer over n^t.
    """
    f = _f(f)
    if s <= 0:
        t = -s
        num = 0
        for d, dfact, rest in _unitary_split(fact):
            w = f(rest)
            if w:
                c = w * (fact.value // d) ** t
                for p, _ in dfact:
                    c *= 1 - p**t
                num += c
        return Fraction(num, fact.value**t)
    total = Fraction(0)
    for _, dfact, rest in _unitary_split(fact):
        w = f(rest)
        if w:
            total += w * _jordan_cached(s, dfact)
    return total


# --- power sums ---------------------------------------------------------------------

def power_sum_lhs(f, n, r: int, sieve: SpfSieve | None = None) -> Fraction:
    """(1/n^r) sum_{k in Reg_n} f(gcd(k, n)) k^r, straight from the definition."""
    f = _f(f)
    n, _ = _nf(n, sieve)
    weights: dict[int, int] = {}
    total = 0
    for k in reg_iter(n):
        g = gcd(k, n)
        w = weights.get(g)
        if w is None:
            w = weights[g] = f(trial_factorize(g))
        total += w * k**r
    return Fraction(total, n**r)


def power_sum_rhs(f, n, r: int, sieve: SpfSieve | None = None) -> Fraction:
    if r < 1:
        raise ValueError("r must be >= 1")
    f = _f(f)
    n, fact = _nf(n, sieve)
    acc = Fraction(0)
    for m in range(r // 2 + 1):
        acc += comb(r + 1, 2 * m) * bernoulli(2 * m) * unitary_phi_sum(f, fact, 1 - 2 * m)
    return Fraction(f(fact), 2) + acc / (r + 1)


# --- Bernoulli sums ---------------------------------------------------------------------

def bernoulli_sum_lhs(f, n, m: int, sieve: SpfSieve | None = None) -> Fraction:
    """sum_{k in Reg_n} f(gcd(k, n)) B_2m(k/n)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    f = _f(f)
    n, _ = _nf(n, sieve)
    total = Fraction(0)
    for k in reg_iter(n):
        total += f(trial_factorize(gcd(k, n))) * bernoulli_poly(2 * m, Fraction(k, n))
    return total


def bernoulli_sum_rhs(f, n, m: int, sieve: SpfSieve | None = None) -> Fraction:
    if m < 1:
        raise ValueError("m must be >= 1")
    n, fact = _nf(n, sieve)
    return bernoulli(2 * m) * unitary_phi_sum(f, fact, 1 - 2 * m)


# --- log-Gamma sums ---------------------------------------------------------------------

def gamma_sum_lhs(f, n, dps: int = 50, sieve: SpfSieve | None = None) -> mpmath.mpf:
    """sum_{k in Reg_n} f(gcd(k, n)) log Gamma(k/n); k = n adds log Gamma(1) = 0."""
    f = _f(f)
    n, _ = _nf(n, sieve)
    with mpmath.workdps(dps + 10):
        total = mpmath.mpf(0)
        for k in reg_iter(n):
            w = f(trial_factorize(gcd(k, n)))
            if w:
                total += w * log_gamma(Fraction(k, n), dps)
        return +total


def gamma_sum_rhs(f, n, sieve: SpfSieve | None = None) -> LogLinear:
    """log sqrt(2 pi)(sum_{d||n} f(n/d) phi(d) - f(n)) - 1/2 sum_{d||n} f(n/d) Lambda(d)."""
    f = _f(f)
    n, fact = _nf(n, sieve)
    phi_part = -f(fact)
    lam = LogLinear()
    for _, dfact, rest in _unitary_split(fact):
        w = f(rest)
        phi_part += w * euler_phi(dfact)
        if w:
            lam = lam + von_mangoldt(dfact) * w
    return LogLinear(coeff_log_sqrt_2pi=phi_part) - lam * Fraction(1, 2)


# --- coprime counting -----------------------------------------------------------------

def coprime_count_check(t: int, x) -> tuple[int, Fraction | float]:
    """#{n <= x : gcd(n, t) = 1} against (phi(t)/t) x - sum_{d|t} mu(d) theta(x/d).

    Exact when x is an int or Fraction (floats are converted exactly).
    """
    if t < 2:
        raise ValueError("t must be >= 2")
    x = Fraction(x)
    if x < 1:
        raise ValueError("x must be >= 1")
    N = x.numerator // x.denominator
    ns = np.arange(1, N + 1, dtype=np.int64)
    lhs = int(np.count_nonzero(np.gcd(ns, t) == 1))
    fact = trial_factorize(t)
    rhs = Fraction(euler_phi(fact), t) * x
    for d in divisors(fact):
        mu = mobius(trial_factorize(d))
        if mu:
            rhs -= mu * theta(x / d)
    return lhs, rhs


# --- batch profiles -----------------------------------------------------------------

@dataclass(frozen=True)
class PowerProfile:
    """Reg_n split by g = gcd(k, n): sums[g][e] = sum of k^e, e = 0..MAX_PROFILE_EXPONENT."""

    n: int
    fact: Factorization
    sums: dict

    def power_sum(self, f, r: int) -> Fraction:
        f = _f(f)
        total = sum(f(gf) * self.sums[g][r] for g, gf in self._groups())
        return Fraction(total, self.n**r)

    def bernoulli_sum(self, f, m: int) -> Fraction:
        f = _f(f)
        deg = 2 * m
        coeffs = bernoulli_poly_coeffs(deg)
        n = self.n
        total = Fraction(0)
        for g, gf in self._groups():
            w = f(gf)
            if w:
                s = self.sums[g]
                total += w * sum(c * (s[j] * n ** (deg - j)) for j, c in enumerate(coeffs) if c)
        return total / n**deg

    def _groups(self):
        for d, dfact, _ in _unitary_split(self.fact):
            yield d, dfact


@lru_cache(maxsize=8192)
def power_profile(n: int) -> PowerProfile:
    """One vectorised pass over 1..n; exact integer power sums per gcd class."""
    fact = trial_factorize(n)
    k = np.arange(1, n + 1, dtype=np.int64)
    g = np.gcd(k, n)
    sums = {}
    for d, _ in unitary_divisors(fact):
        ks = k[g == d].astype(object)
        row = [len(ks)]
        p = ks
        for _e in range(1, MAX_PROFILE_EXPONENT + 1):
            row.append(int(p.sum()) if len(p) else 0)
            p = p * ks
        sums[d] = tuple(row)
    return PowerProfile(n, fact, sums)


@lru_cache(maxsize=4096)
def gamma_profile(n: int, dps: int = 50) -> tuple[tuple[int, Factorization, mpmath.mpf], ...]:
    """Per unitary g: (g, factorization of g, sum of log Gamma(k/n) over k with gcd(k, n) = g)."""
    fact = trial_factorize(n)
    k = np.arange(1, n + 1, dtype=np.int64)
    g = np.gcd(k, n)
    out = []
    with mpmath.workdps(dps + 10):
        for d, rest in unitary_divisors(fact):
            gf = Factorization(pe for pe in fact if pe not in rest)
            total = mpmath.fsum(log_gamma(Fraction(int(kk), n), dps) for kk in k[g == d])
            out.append((d, gf, total))
    return tuple(out)


def gamma_sum_from_profile(f, n: int, dps: int = 50) -> mpmath.mpf:
    f = _f(f)
    with mpmath.workdps(dps + 10):
        return +mpmath.fsum(f(gf) * s for _, gf, s in gamma_profile(n, dps))


# --- sweeps ---------------------------------------------------------------------------

@dataclass
class VerifyReport:
    kind: str
    f: str
    range: tuple[int, int]
    params: dict
    mismatches: list = field(default_factory=list)
    max_numeric_residual: float = 0.0
    checked: int = 0
    complete: bool = True

    @property
    def ok(self) -> bool:
        if not self.complete or self.mismatches:
            return False
        if self.kind == "gamma_sum":
            return self.max_numeric_residual < float(GAMMA_TOLERANCE)
        return True

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "f": self.f, "range": list(self.range), "params": self.params,
            "checked": self.checked, "complete": self.complete, "ok": self.ok,
            "max_numeric_residual": self.max_numeric_residual,
            "mismatches": [
                {"n": n, "lhs": str(l), "rhs": str(r), "difference": str(d)}
                for n, l, r, d in self.mismatches
            ],
        }


def _check_n(kind: str, f: ArithmeticalFunction, n: int, params: dict, dps: int):
    """Returns (lhs, rhs, difference) for one n."""
    prof_ok = n <= 20000
    if kind == "power_sum":
        r = params["r"]
        lhs = power_profile(n).power_sum(f, r) if prof_ok else power_sum_lhs(f, n, r)
        rhs = power_sum_rhs(f, n, r)
        return lhs, rhs, lhs - rhs
    if kind == "bernoulli_sum":
        m = params["m"]
        lhs = power_profile(n).bernoulli_sum(f, m) if 2 * m <= MAX_PROFILE_EXPONENT and prof_ok \
            else bernoulli_sum_lhs(f, n, m)
        rhs = bernoulli_sum_rhs(f, n, m)
        return lhs, rhs, lhs - rhs
    if kind == "gamma_sum":
        lhs = gamma_sum_from_profile(f, n, dps)
        rhs = gamma_sum_rhs(f, n)
        with mpmath.workdps(dps + 10):
            return lhs, rhs, lhs - rhs.evaluate(dps)
    raise ValueError(f"unknown identity kind {kind!r}")


def verify(kind: str, f, n_range: tuple[int, int], params: dict | None = None,
           dps: int = 50, time_budget: float | None = None) -> VerifyReport:
    """Check one identity for every n in n_range (inclusive).

    Exact kinds record every nonzero discrepancy.  ``gamma_sum`` records the
    largest |lhs - rhs| and flags n whose residual reaches 1e-30.  With a
    ``time_budget`` in seconds the sweep stops early and is marked incomplete.
    ``coprime_count`` reads ``params['x']`` and runs t over n_range.
    """
    if kind not in IDENTITY_KINDS:
        raise ValueError(f"unknown identity kind {kind!r}; choose from {', '.join(IDENTITY_KINDS)}")
    params = dict(params or {})
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo < 1 or hi < lo:
        raise ValueError(f"empty or invalid range {n_range!r}")
    if kind == "power_sum" and params.get("r", 0) < 1:
        raise ValueError("power_sum needs r >= 1")
    if kind == "bernoulli_sum" and params.get("m", 0) < 1:
        raise ValueError("bernoulli_sum needs m >= 1")
    fn = _f(f)
    rep = VerifyReport(kind, fn.short, (lo, hi), params)
    start = time.monotonic()
    worst = mpmath.mpf(0)
    for n in range(lo, hi + 1):
        if time_budget is not None and time.monotonic() - start > time_budget:
            rep.complete = False
            break
        if kind == "coprime_count":
            if n < 2:
                continue
            lhs, rhs = coprime_count_check(n, params.get("x", 1000))
            if lhs != rhs:
                rep.mismatches.append((n, lhs, rhs, lhs - rhs))
        else:
            lhs, rhs, diff = _check_n(kind, fn, n, params, dps)
            if kind == "gamma_sum":
                if abs(diff) > worst:
                    worst = abs(diff)
                if abs(diff) >= GAMMA_TOLERANCE:
                    rep.mismatches.append((n, mpmath.nstr(lhs, 40), rhs, mpmath.nstr(diff, 5)))
            elif diff:
                rep.mismatches.append((n, lhs, rhs, diff))
        rep.checked += 1
    rep.max_numeric_residual = float(worst)
    return rep
