"""Partial sums over n <= x of the regular-integer weighted averages.

Left sides are accumulated two ways:

* ``brute``: sum over k in Reg_n for every n <= x (capped at x = 3000);
* ``convolution``: through the coprime double sums
  D[a, b](x) = sum_{d l <= x, gcd(d, l) = 1} a(d) b(l).

The convolution form runs in exact rationals for small x and in float64 for
sweeps up to 10^6-10^7, where coprimality is handled by Mobius inversion over
g = gcd(d, l):

    D[a, b](x) = sum_g mu(g) sum_{d', l' : g^2 d' l' <= x} a(g d') b(g l').
"""
from __future__ import annotations

import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from math import comb, gcd
from typing import Sequence

import mpmath
import numpy as np

from .arith import (ArithmeticalFunction, LogLinear, SpfSieve, jordan_phi,
                    multiplicative_table, primes_up_to, trial_factorize, von_mangoldt_table)
from .bernoulli import bernoulli
from .constants import ConstantStore
from .identities import gamma_profile, power_profile

__all__ = [
    "EQ_IDS", "BASE_EQS", "NONVANISHING_EQS", "TheoremEq", "SumSeries", "lhs_series",
    "main_term", "main_term_variants", "residual_report", "k2_fit", "k2_grid", "K2Fit",
    "pillai_regular_cumsum", "coprime_double_sum", "default_checkpoints", "BRUTE_CAP",
    "EXACT_CAP", "write_series", "format_decimal", "bound_shape",
]

BRUTE_CAP = 3000
EXACT_CAP = 20000

# derived equation -> (base equation, fixed f, parameter name or None)
_DERIVED = {
    "eqcor11": ("eq1", "id", "r"), "eqcor12": ("eq1", "mobius", "r"),
    "eqcor13": ("eq1", "tau", "r"), "eqcor14": ("eq2", "phi2", "r"),
    "eqthm21": ("eq3", "id", "m"), "eqthm22": ("eq3", "phi", "m"),
    "eqthm23": ("eq3", "tau", "m"), "eqthm24": ("eq3", "mobius", "m"),
    "eqthm25": ("eq4", "phi", "m"), "eqthm26": ("eq4", "phi2", "m"),
    "eqthm61": ("eq5", "id", None), "eqthm62": ("eq5", "tau", None),
    "eqthm63": ("eq5", "mobius", None), "eqthm64": ("eq6", "phi", None),
    "eqthm65": ("eq6", "phi2", None),
}
_BASE_PARAM = {"eq1": "r", "eq2": "r", "eq3": "m", "eq4": "m", "eq5": None, "eq6": None}
BASE_EQS = tuple(_BASE_PARAM)
EQ_IDS = BASE_EQS + tuple(_DERIVED)
NONVANISHING_EQS = frozenset({"eq2", "eq4", "eq6", "eqcor14", "eqthm25", "eqthm26",
                              "eqthm64", "eqthm65"})
GAMMA_EQS = frozenset({"eq5", "eq6", "eqthm61", "eqthm62", "eqthm63", "eqthm64", "eqthm65"})


@dataclass(frozen=True)
class TheoremEq:
    id: str
    f: ArithmeticalFunction
    param: int | None = None

    @classmethod
    def make(cls, eq_id: str, f=None, r: int | None = None, m: int | None = None) -> "TheoremEq":
        if eq_id not in EQ_IDS:
            raise ValueError(f"unknown equation {eq_id!r}; choose from {', '.join(EQ_IDS)}")
        if eq_id in _DERIVED:
            base, fixed, pname = _DERIVED[eq_id]
            if f is not None and ArithmeticalFunction.of(f).kind != fixed:
                raise ValueError(f"{eq_id} fixes f = {fixed}")
            fn = ArithmeticalFunction.of(fixed)
        else:
            if f is None:
                raise ValueError(f"{eq_id} needs an arithmetical function f")
            fn = ArithmeticalFunction.of(f)
            pname = _BASE_PARAM[eq_id]
        if eq_id in NONVANISHING_EQS and not fn.nonvanishing:
            raise ValueError(f"{eq_id} divides by f(n); f = {fn.short} vanishes")
        value = {"r": r, "m": m}.get(pname) if pname else None
        if pname and (value is None or value < 1):
            raise ValueError(f"{eq_id} needs {pname} >= 1")
        return cls(eq_id, fn, value)

    @property
    def base(self) -> str:
        return _DERIVED[self.id][0] if self.id in _DERIVED else self.id

    @property
    def param_name(self) -> str | None:
        return _BASE_PARAM[self.base]

    @property
    def is_gamma(self) -> bool:
        return self.base in ("eq5", "eq6")

    @property
    def tag(self) -> str:
        """File stem ``<eqid>_<f>_<params>``."""
        p = f"{self.param_name}{self.param}" if self.param_name else "none"
        return f"{self.id}_{self.f.short}_{p}"


def default_checkpoints(xmax: float = 10**6, xmin: float = 10**4) -> list[int]:
    """Half-decade geometric grid from xmin to xmax, floored to integers."""
    lo, hi = math.log10(xmin), math.log10(xmax)
    steps = max(1, round((hi - lo) * 2))
    return sorted({int(10 ** (lo + (hi - lo) * i / steps) + 1e-9) for i in range(steps + 1)})


# --- per-n brute terms -------------------------------------------------------------

def _brute_term(eq: TheoremEq, n: int, dps: int):
    f = eq.f
    fact = trial_factorize(n)
    base = eq.base
    if base in ("eq1", "eq2"):
        val = power_profile(n).power_sum(f, eq.param)
    elif base in ("eq3", "eq4"):
        val = power_profile(n).bernoulli_sum(f, eq.param)
    else:
        with mpmath.workdps(dps + 10):
            val = mpmath.fsum(f(gf) * s for _, gf, s in gamma_profile(n, dps))
    div = n if base in ("eq1", "eq3", "eq5") else f(fact)
    if base in ("eq5", "eq6"):
        with mpmath.workdps(dps + 10):
            return val / div
    return val / div


def _brute_series(eq: TheoremEq, checkpoints: Sequence[int], dps: int):
    out, total = [], (mpmath.mpf(0) if eq.is_gamma else Fraction(0))
    it = iter(checkpoints)
    nxt = next(it)
    with mpmath.workdps(dps + 10):
        for n in range(1, checkpoints[-1] + 1):
            total += _brute_term(eq, n, dps)
            while nxt is not None and n == nxt:
                out.append(+total if eq.is_gamma else total)
                nxt = next(it, None)
    return out


# --- exact coefficient functions ------------------------------------------------------

@lru_cache(maxsize=None)
def _exact_values(name: str, f_kind: str, s: int, X: int) -> tuple:
    """Exact list v[0..X] for the named arithmetic weight."""
    f = ArithmeticalFunction.of(f_kind)
    out = [Fraction(0)]
    for n in range(1, X + 1):
        fact = trial_factorize(n)
        if name == "f/id":
            out.append(Fraction(f(fact), n))
        elif name == "one":
            out.append(Fraction(1))
        elif name == "phi_s/id":
            out.append(jordan_phi(s, fact) / n)
        elif name == "phi_s/f":
            out.append(jordan_phi(s, fact) / f(fact))
        elif name == "1/id":
            out.append(Fraction(1, n))
        elif name == "1/f":
            out.append(Fraction(1, f(fact)))
        else:
            raise ValueError(name)
    return tuple(out)


def _exact_double_sum(a: Sequence[Fraction], b: Sequence[Fraction], checkpoints) -> list[Fraction]:
    """D[a, b] at each checkpoint by enumerating coprime pairs d l <= X."""
    X = checkpoints[-1]
    h = [Fraction(0)] * (X + 1)
    for d in range(1, X + 1):
        ad = a[d]
        if not ad:
            continue
        for l in range(1, X // d + 1):
            if b[l] and gcd(d, l) == 1:
                h[d * l] += ad * b[l]
    return _prefix(h, checkpoints)


def _prefix(h, checkpoints):
    out, acc, j = [], 0, 0
    for n in range(1, checkpoints[-1] + 1):
        acc += h[n]
        while j < len(checkpoints) and checkpoints[j] == n:
            out.append(acc)
            j += 1
    return out


def _exact_lambda_sum(weight: Sequence[Fraction], b: Sequence[Fraction], checkpoints) -> list[LogLinear]:
    """sum over coprime d l <= x of Lambda(d) weight(d) b(l), as exact log-linear forms."""
    X = checkpoints[-1]
    out = []
    per_n: list[dict] = [None] * (X + 1)
    for p in primes_up_to(X).tolist():
        d = p
        while d <= X:
            w = weight[d]
            for l in range(1, X // d + 1):
                if b[l] and l % p:
                    slot = per_n[d * l]
                    if slot is None:
                        slot = per_n[d * l] = {}
                    slot[p] = slot.get(p, 0) + w * b[l]
            d *= p
    acc: dict[int, Fraction] = {}
    j = 0
    for n in range(1, X + 1):
        if per_n[n]:
            for p, c in per_n[n].items():
                acc[p] = acc.get(p, 0) + c
        while j < len(checkpoints) and checkpoints[j] == n:
            out.append(LogLinear(prime_log_coeffs=dict(acc)))
            j += 1
    return out


# --- float coefficient tables ---------------------------------------------------------

class _Tables:
    """Float arrays over 0..X shared by every equation of one sweep."""

    def __init__(self, X: int, sieve: SpfSieve | None = None):
        self.X = X
        self.sieve = sieve if sieve is not None and sieve.limit >= X else SpfSieve(max(X, 2))
        self.n = np.arange(X + 1, dtype=float)
        self.n[0] = 1.0
        self._cache: dict = {}

    def f(self, f: ArithmeticalFunction) -> np.ndarray:
        key = ("f", f.kind)
        if key not in self._cache:
            if f.array_rule is None:
                arr = np.array([0.0] + [float(f(trial_factorize(n))) for n in range(1, self.X + 1)])
            else:
                arr = multiplicative_table(f.array_rule, self.X, self.sieve)
            self._cache[key] = arr
        return self._cache[key]

    def jordan(self, s: int) -> np.ndarray:
        key = ("phi", s)
        if key not in self._cache:
            def rule(p, e, s=s):
                p = p.astype(float)
                return p ** ((e - 1) * s) * (p**s - 1.0)
            self._cache[key] = multiplicative_table(rule, self.X, self.sieve)
        return self._cache[key]

    def lam(self) -> np.ndarray:
        if "lam" not in self._cache:
            self._cache["lam"] = von_mangoldt_table(self.X)
        return self._cache["lam"]

    def ratio(self, num: np.ndarray, den: np.ndarray) -> np.ndarray:
        out = np.zeros_like(num)
        np.divide(num, den, out=out, where=den != 0)
        out[0] = 0.0
        return out


def _squarefree_mu(limit: int) -> np.ndarray:
    mu = np.ones(limit + 1, dtype=np.int64)
    for p in primes_up_to(limit).tolist():
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    mu[0] = 0
    return mu


def coprime_double_sum(a: np.ndarray, b: np.ndarray, checkpoints: Sequence[int],
                       method: str = "mobius", workers: int = 1) -> list[float]:
    """Float D[a, b](x) at each integer checkpoint.

    ``method='mobius'`` uses the Mobius-over-gcd rearrangement (O(x) per
    checkpoint); ``method='direct'`` tests gcd(d, l) = 1 pair by pair
    (O(x log x)) and is kept as the cross-check.
    """
    X = int(checkpoints[-1])
    if len(a) <= X or len(b) <= X:
        raise ValueError("coefficient arrays shorter than the largest checkpoint")
    if method == "direct":
        h = np.zeros(X + 1)
        ls = np.arange(1, X + 1, dtype=np.int64)
        for d in np.flatnonzero(a[1 : X + 1]) + 1:
            d = int(d)
            l = ls[: X // d]
            l = l[np.gcd(l, d) == 1]
            h[d * l] += a[d] * b[l]
        c = np.cumsum(h)
        return [float(c[x]) for x in checkpoints]
    if method != "mobius":
        raise ValueError(f"unknown method {method!r}")
    G = math.isqrt(X)
    mu = _squarefree_mu(G)
    gs = [g for g in range(1, G + 1) if mu[g]]

    def block(g):
        Y = X // (g * g)
        idx = g * np.arange(1, Y + 1, dtype=np.int64)
        A = a[idx]
        Bc = np.concatenate(([0.0], np.cumsum(b[idx])))
        dprime = np.arange(1, Y + 1, dtype=np.int64)
        row = []
        for x in checkpoints:
            Yx = x // (g * g)
            q = x // (g * g * dprime[:Yx])
            row.append(int(mu[g]) * float(np.dot(A[:Yx], Bc[q])) if Yx else 0.0)
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(block, gs))
    else:
        rows = [block(g) for g in gs]
    # fsum is exactly rounded, so the result does not depend on the worker count
    return [math.fsum(row[j] for row in rows) for j in range(len(checkpoints))]


# --- the right-hand sides ------------------------------------------------------------

def _conv_exact(eq: TheoremEq, checkpoints: list[int]):
    X = checkpoints[-1]
    f = eq.f
    base = eq.base
    over_id = base in ("eq1", "eq3", "eq5")
    b = _exact_values("f/id", f.kind, 0, X) if over_id else _exact_values("one", f.kind, 0, X)
    if base in ("eq1", "eq2"):
        r = eq.param
        half = (_prefix(b, checkpoints) if over_id else [Fraction(x) for x in checkpoints])
        total = [h / 2 for h in half]
        for m in range(r // 2 + 1):
            a = _exact_values("phi_s/id" if over_id else "phi_s/f", f.kind, 1 - 2 * m, X)
            c = Fraction(comb(r + 1, 2 * m)) * bernoulli(2 * m) / (r + 1)
            for i, v in enumerate(_exact_double_sum(a, b, checkpoints)):
                total[i] += c * v
        return total
    if base in ("eq3", "eq4"):
        m = eq.param
        a = _exact_values("phi_s/id" if over_id else "phi_s/f", f.kind, 1 - 2 * m, X)
        return [bernoulli(2 * m) * v for v in _exact_double_sum(a, b, checkpoints)]
    # log-Gamma forms
    a = _exact_values("phi_s/id" if over_id else "phi_s/f", f.kind, 1, X)
    phi_part = _exact_double_sum(a, b, checkpoints)
    minus = _prefix(b, checkpoints) if over_id else [Fraction(x) for x in checkpoints]
    lam = _exact_lambda_sum(_exact_values("1/id" if over_id else "1/f", f.kind, 0, X), b, checkpoints)
    return [LogLinear(coeff_log_sqrt_2pi=p - s) - l * Fraction(1, 2)
            for p, s, l in zip(phi_part, minus, lam)]


def _conv_float(eq: TheoremEq, checkpoints: list[int], tables: _Tables, method: str, workers: int = 1):
    f = eq.f
    base = eq.base
    over_id = base in ("eq1", "eq3", "eq5")
    T = tables
    fa = T.f(f)
    b = T.ratio(fa, T.n) if over_id else np.ones(T.X + 1)
    b[0] = 0.0
    den = T.n if over_id else fa
    if over_id:
        cb = np.cumsum(b)
        half = [float(cb[x]) for x in checkpoints]
    else:
        half = [float(x) for x in checkpoints]
    if base in ("eq1", "eq2"):
        r = eq.param
        total = [h / 2 for h in half]
        for m in range(r // 2 + 1):
            a = T.ratio(T.jordan(1 - 2 * m), den)
            c = comb(r + 1, 2 * m) * float(bernoulli(2 * m)) / (r + 1)
            for i, v in enumerate(coprime_double_sum(a, b, checkpoints, method, workers)):
                total[i] += c * v
        return total
    if base in ("eq3", "eq4"):
        m = eq.param
        a = T.ratio(T.jordan(1 - 2 * m), den)
        B = float(bernoulli(2 * m))
        return [B * v for v in coprime_double_sum(a, b, checkpoints, method, workers)]
    ls2p = math.log(2 * math.pi) / 2
    phi_part = coprime_double_sum(T.ratio(T.jordan(1), den), b, checkpoints, method, workers)
    lam_part = coprime_double_sum(T.ratio(T.lam(), den), b, checkpoints, method, workers)
    return [ls2p * (p - h) - 0.5 * l for p, h, l in zip(phi_part, half, lam_part)]


# --- series ------------------------------------------------------------------------

@dataclass
class SumSeries:
    eq: TheoremEq
    checkpoints: list[int]
    lhs: list
    mode: str
    arithmetic: str
    main: list[float] = field(default_factory=list)
    residual: list[float] = field(default_factory=list)
    fitted_exponent: float | None = None
    bound_exponent: float | None = None
    bound_constant: float | None = None
    consistent_with_bound: bool | None = None
    growth_exponent: float | None = None
    variant: str = "printed"
    constant_error: float = 0.0
    notes: list[str] = field(default_factory=list)

    def lhs_float(self) -> list[float]:
        return [_to_float(v) for v in self.lhs]

    @property
    def residual_over_main(self) -> list[float]:
        return [r / m if m else math.nan for r, m in zip(self.residual, self.main)]


def _to_float(v) -> float:
    if isinstance(v, LogLinear):
        return float(v.evaluate(30))
    return float(v)


def lhs_series(eq: TheoremEq, checkpoints: Sequence[int], mode: str = "convolution",
               arithmetic: str | None = None, method: str = "mobius", dps: int = 50,
               tables: _Tables | None = None, sieve_limit: int | None = None,
               workers: int = 1) -> SumSeries:
    """Partial sums of the equation's left side at each checkpoint.

    ``arithmetic`` is ``exact`` (Fractions / exact log-linear forms) or
    ``float``; it defaults to exact up to EXACT_CAP.  Brute mode is always
    exact (50-digit for the log-Gamma equations) and refuses x > BRUTE_CAP.
    """
    cps = sorted({int(x) for x in checkpoints})
    if not cps or cps[0] < 1:
        raise ValueError("checkpoints must be positive")
    if sieve_limit is not None and cps[-1] > sieve_limit:
        raise ValueError(f"checkpoint {cps[-1]} exceeds the sieve limit {sieve_limit}")
    if mode == "brute":
        if cps[-1] > BRUTE_CAP:
            raise ValueError(f"brute mode is capped at x <= {BRUTE_CAP}")
        return SumSeries(eq, cps, _brute_series(eq, cps, dps), "brute", "exact")
    if mode != "convolution":
        raise ValueError(f"unknown mode {mode!r}")
    if arithmetic is None:
        arithmetic = "exact" if cps[-1] <= EXACT_CAP else "float"
    if arithmetic == "exact":
        return SumSeries(eq, cps, _conv_exact(eq, cps), "convolution", "exact")
    if arithmetic != "float":
        raise ValueError(f"unknown arithmetic {arithmetic!r}")
    tables = tables if tables is not None and tables.X >= cps[-1] else _Tables(cps[-1])
    return SumSeries(eq, cps, _conv_float(eq, cps, tables, method, workers), "convolution", "float")


# --- main terms --------------------------------------------------------------------

def _c(store: ConstantStore, name: str) -> float:
    try:
        return float(store[name])
    except KeyError:
        raise KeyError(f"main term needs constant {name!r}, which is not in the store") from None


def main_term_variants(eq_id: str) -> tuple[str, ...]:
    if eq_id in ("eqthm22", "eqcor14", "eqthm61", "eqthm64"):
        return ("printed", "derived")
    return ("printed",)


def main_term(eq: TheoremEq, x: float, store: ConstantStore, variant: str = "printed") -> float:
    """Explicit main term of the equation at x.

    ``printed`` follows the stated coefficients, except for eqthm22 whose
    stated product diverges; there the convergent product D_m is used in both
    variants.  ``derived`` gives the corrected or refined term where one
    exists (see :func:`main_term_variants`).  Base equations and eqthm23/24
    have no main term and return 0.
    """
    if variant not in main_term_variants(eq.id):
        raise ValueError(f"{eq.id} has no {variant!r} main term")
    i = eq.id
    z2 = _c(store, "zeta(2)")
    lx = math.log(x)
    if i == "eqcor11":
        r = eq.param
        K1, K2 = _c(store, "K1"), _c(store, "K2")
        extra = sum(comb(r + 1, 2 * m) * float(bernoulli(2 * m)) * _c(store, f"C_{m}")
                    for m in range(1, r // 2 + 1)) / (r + 1)
        lead = K1 / ((r + 1) * z2)
        return lead * x * lx + (0.5 - K1 / (2 * (r + 1) * z2) + K2 / ((r + 1) * z2) + extra) * x
    if i == "eqcor12":
        return x / ((eq.param + 1) * z2) * _c(store, "K1")
    if i == "eqcor13":
        return x / ((eq.param + 1) * z2) * _c(store, "T")
    if i == "eqcor14":
        r = eq.param
        s = sum(comb(r + 1, 2 * m) * float(bernoulli(2 * m)) *
                (_c(store, "F0") if m == 0 else _c(store, f"E_{m}")) for m in range(r // 2 + 1))
        lead = 0.5 if variant == "derived" else 0.5 + _c(store, "F0") / (r + 1)
        return lead * x + x * s / (r + 1)
    B = float(bernoulli(2 * eq.param)) if eq.param_name == "m" else None
    if i == "eqthm21":
        return _c(store, f"C_{eq.param}") * B * x
    if i == "eqthm22":
        return B * _c(store, f"D_{eq.param}") * x / z2
    if i == "eqthm25":
        return B * _c(store, f"zeta({2 * eq.param + 1})") / z2 * x
    if i == "eqthm26":
        return B * _c(store, f"E_{eq.param}") * x
    ls2p = _c(store, "log_sqrt_2pi")
    if i == "eqthm61":
        K1 = _c(store, "K1")
        if variant == "derived":
            K2, L1 = _c(store, "K2"), _c(store, "L1")
            return ls2p * ((K1 * lx + K2 - K1 / 2) * x / z2 - x) - 0.5 * L1 * x
        return ls2p / z2 * K1 * x * lx
    if i == "eqthm62":
        return ls2p / z2 * _c(store, "T") * x
    if i == "eqthm63":
        return ls2p / z2 * _c(store, "K1") * x
    if i == "eqthm64":
        g, dz = _c(store, "gamma"), _c(store, "zeta'(2)")
        log_deriv = -2 * dz / z2 if variant == "derived" else dz / z2
        return ls2p / z2 * x * lx + ls2p / z2 * (2 * g - 1 + log_deriv + dz / (2 * ls2p) - z2) * x
    if i == "eqthm65":
        return ls2p * (_c(store, "F0") - _c(store, "K") / (2 * ls2p) - 1) * x
    return 0.0


def _main_dependencies(eq: TheoremEq, variant: str) -> list[str]:
    i = eq.id
    deps = {"eqcor11": ["K1", "K2"], "eqcor12": ["K1"], "eqcor13": ["T"], "eqcor14": ["F0"],
            "eqthm61": ["K1"], "eqthm62": ["T"], "eqthm63": ["K1"], "eqthm64": ["gamma", "zeta'(2)"],
            "eqthm65": ["F0", "K"]}.get(i, [])
    if i == "eqcor11":
        deps += [f"C_{m}" for m in range(1, eq.param // 2 + 1)]
    if i == "eqcor14":
        deps += [f"E_{m}" for m in range(1, eq.param // 2 + 1)]
    if i in ("eqthm21",):
        deps.append(f"C_{eq.param}")
    if i == "eqthm22":
        deps.append(f"D_{eq.param}")
    if i == "eqthm25":
        deps.append(f"zeta({2 * eq.param + 1})")
    if i == "eqthm26":
        deps.append(f"E_{eq.param}")
    if i == "eqthm61" and variant == "derived":
        deps += ["K2", "L1"]
    return deps


def bound_shape(eq_id: str, x: float) -> float | None:
    """The printed error-term shape, without its constant (None for base equations)."""
    lx = math.log(x)
    shapes = {
        "eqcor11": math.sqrt(x), "eqcor12": lx**3, "eqcor13": lx**5, "eqcor14": lx**4,
        "eqthm21": lx**2, "eqthm22": lx**3, "eqthm23": lx**5, "eqthm24": lx**3,
        "eqthm25": lx**4, "eqthm26": lx**3 / x, "eqthm61": x, "eqthm62": lx**5,
        "eqthm63": lx**3, "eqthm64": math.sqrt(x), "eqthm65": lx**4,
    }
    return shapes.get(eq_id)


def _slope(xs, ys) -> float:
    X = np.log(np.asarray(xs, dtype=float))
    Y = np.log(np.abs(np.asarray(ys, dtype=float)))
    ok = np.isfinite(Y)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(X[ok], Y[ok], 1)[0])


def residual_report(eq: TheoremEq, checkpoints: Sequence[int], store: ConstantStore,
                    series: SumSeries | None = None, variant: str = "printed", **kw) -> SumSeries:
    """Fill main terms, residuals and fitted exponents for one equation.

    ``fitted_exponent`` is the least-squares slope of log|residual| against
    log x; ``bound_exponent`` is the same slope for the printed error shape,
    and ``bound_constant`` the largest |residual|/shape.  The consistency
    flag only reports whether the first slope is within 0.15 of the second;
    nothing is asserted.  For equations without a main term the growth
    exponent of the left side is fitted instead.
    """
    s = series if series is not None else lhs_series(eq, checkpoints, **kw)
    s.variant = variant
    s.main = [main_term(eq, x, store, variant) for x in s.checkpoints]
    lhs = s.lhs_float()
    s.residual = [l - m for l, m in zip(lhs, s.main)]
    deps = _main_dependencies(eq, variant)
    s.constant_error = sum(store.error(d) for d in deps if d in store)
    if eq.id == "eqthm22" and variant == "printed":
        s.notes.append("stated product diverges; convergent D_m used")
    if len(s.checkpoints) < 3:
        s.notes.append("fewer than 3 checkpoints: no fit")
        return s
    if eq.id in ("eqthm23", "eqthm24") or eq.id in BASE_EQS:
        s.growth_exponent = _slope(s.checkpoints, lhs)
    if eq.id in BASE_EQS:
        return s
    if eq.id not in ("eqthm23", "eqthm24"):
        s.fitted_exponent = _slope(s.checkpoints, s.residual)
    shape = [bound_shape(eq.id, x) for x in s.checkpoints]
    s.bound_exponent = _slope(s.checkpoints, shape)
    target = lhs if eq.id in ("eqthm23", "eqthm24") else s.residual
    s.bound_constant = max(abs(t) / b for t, b in zip(target, shape))
    fit = s.growth_exponent if eq.id in ("eqthm23", "eqthm24") else s.fitted_exponent
    s.consistent_with_bound = bool(fit <= s.bound_exponent + 0.15)
    return s


# --- K2 from sieved gcd sums ---------------------------------------------------------

def pillai_regular_cumsum(X: int, sieve: SpfSieve | None = None) -> np.ndarray:
    """S[x] = sum_{n <= x} P~(n), exact in int64 (fine well past 10^7)."""
    sieve = sieve if sieve is not None and sieve.limit >= X else SpfSieve(X)
    t = multiplicative_table(lambda p, e: 2 * p**e - p ** (e - 1), X, sieve, dtype=np.int64)
    return np.cumsum(t)


@dataclass
class K2Fit:
    estimate: float
    stderr: float
    x_points: list[int]
    pointwise: list[float]
    model: str
    slope: float | None = None

    def matches(self, value: float, k: float = 3.0) -> bool:
        return abs(self.estimate - value) <= k * self.stderr

    @property
    def rms_residual(self) -> float:
        r = np.asarray(self.pointwise) - self.estimate
        return float(np.sqrt(np.mean(r * r)))


def k2_grid(xmax: int, points: int = 60) -> list[int]:
    """Log-spaced integers over the top decade [xmax/10, xmax] (at least from 1000)."""
    lo = max(1000, xmax // 10)
    return sorted({int(v) for v in np.logspace(math.log10(lo), math.log10(xmax), points)})


def k2_fit(x_points: Sequence[int], store: ConstantStore, model: str = "constant",
           S: np.ndarray | Sequence | None = None) -> K2Fit:
    """Least-squares K2 from K2(x) = 2 zeta(2) S(x)/x^2 - K1 log x.

    ``model='constant'`` fits K2 alone; ``'sqrt'`` adds a c/sqrt(x) term.
    ``S`` may supply the cumulative sums (array indexed by x), e.g. for
    synthetic data.
    """
    xs = sorted({int(x) for x in x_points})
    if len(xs) < 2:
        raise ValueError("need at least two x points")
    if S is None:
        S = pillai_regular_cumsum(xs[-1])
    z2, K1 = _c(store, "zeta(2)"), _c(store, "K1")
    xa = np.asarray(xs, dtype=float)
    Sa = np.asarray([float(S[x]) for x in xs])
    k = 2 * z2 * Sa / xa**2 - K1 * np.log(xa)
    if model == "constant":
        A = np.ones((len(xs), 1))
    elif model == "sqrt":
        A = np.column_stack([np.ones(len(xs)), xa**-0.5])
    else:
        raise ValueError(f"unknown model {model!r}")
    coef, *_ = np.linalg.lstsq(A, k, rcond=None)
    dof = len(xs) - A.shape[1]
    resid = k - A @ coef
    if dof > 0:
        cov = (resid @ resid / dof) * np.linalg.inv(A.T @ A)
        se = float(math.sqrt(cov[0, 0]))
    else:
        se = math.inf
    return K2Fit(float(coef[0]), se, xs, k.tolist(), model,
                 float(coef[1]) if A.shape[1] > 1 else None)


# --- output ------------------------------------------------------------------------

def format_decimal(v, digits: int = 15) -> str:
    """Scientific notation with ``digits`` significant digits, round-half-even."""
    if isinstance(v, LogLinear):
        v = v.evaluate(digits + 20)
    with localcontext() as ctx:
        ctx.prec = digits + 30
        if isinstance(v, Fraction):
            d = Decimal(v.numerator) / Decimal(v.denominator)
        elif isinstance(v, mpmath.mpf):
            d = Decimal(mpmath.nstr(v, digits + 25, strip_zeros=False, min_fixed=1, max_fixed=0))
        elif isinstance(v, (int, np.integer)):
            d = Decimal(int(v))
        else:
            v = float(v)
            if not math.isfinite(v):
                return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
            d = Decimal(v)
        return format(d, f".{digits - 1}e")


@contextmanager
def _unbounded_int_str():
    # exact sums at x ~ 10^4 already carry integers past the default digit cap
    limit = getattr(sys, "get_int_max_str_digits", lambda: 0)()
    if limit:
        sys.set_int_max_str_digits(0)
    try:
        yield
    finally:
        if limit:
            sys.set_int_max_str_digits(limit)


def _exact_repr(v) -> str | None:
    with _unbounded_int_str():
        if isinstance(v, Fraction):
            return f"{v.numerator}/{v.denominator}"
        if isinstance(v, LogLinear):
            return repr(v)
    return None


def series_rows(s: SumSeries, digits: int = 15) -> list[list[str]]:
    rom = s.residual_over_main
    rows = []
    for i, x in enumerate(s.checkpoints):
        main = s.main[i] if s.main else math.nan
        res = s.residual[i] if s.residual else math.nan
        rows.append([str(x), format_decimal(s.lhs[i], digits), format_decimal(main, digits),
                     format_decimal(res, digits), format_decimal(rom[i] if rom else math.nan, digits)])
    return rows


def series_json(s: SumSeries, digits: int = 15) -> dict:
    def num(v):
        return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else format_decimal(v, digits)

    rows = series_rows(s, digits)
    points = []
    for i, row in enumerate(rows):
        pt = dict(zip(("x", "lhs", "main", "residual", "residual_over_main"), row))
        pt["x"] = s.checkpoints[i]
        exact = _exact_repr(s.lhs[i])
        if exact is not None:
            pt["lhs_exact"] = exact
        points.append(pt)
    return {
        "eq": s.eq.id, "f": s.eq.f.short, s.eq.param_name or "param": s.eq.param,
        "mode": s.mode, "arithmetic": s.arithmetic, "variant": s.variant,
        "fitted_exponent": num(s.fitted_exponent), "bound_exponent": num(s.bound_exponent),
        "bound_constant": num(s.bound_constant), "consistent_with_bound": s.consistent_with_bound,
        "growth_exponent": num(s.growth_exponent), "constant_error": num(s.constant_error),
        "notes": s.notes, "points": points,
    }


def write_series(s: SumSeries, out_dir: str, formats: Sequence[str] = ("csv", "json", "gnuplot"),
                 digits: int = 15, suffix: str = "") -> list[str]:
    """Write ``<eqid>_<f>_<params>{suffix}.csv/.json/.dat``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, s.eq.tag + suffix)
    paths = []
    rows = series_rows(s, digits)
    if "csv" in formats:
        with open(stem + ".csv", "w", newline="") as fh:
            fh.write("x,lhs,main,residual,residual_over_main\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
        paths.append(stem + ".csv")
    if "json" in formats:
        with open(stem + ".json", "w") as fh:
            json.dump(series_json(s, digits), fh, indent=2)
            fh.write("\n")
        paths.append(stem + ".json")
    if "gnuplot" in formats:
        with open(stem + ".dat", "w") as fh:
            fh.write(f"# {s.eq.tag}: x residual\n")
            for row in rows:
                fh.write(f"{row[0]} {row[3]}\n")
        paths.append(stem + ".dat")
    return paths
