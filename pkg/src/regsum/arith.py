"""Exact arithmetic functions, unitary divisors and regular integers mod n.

Everything here is evaluated from prime-power factorizations.  Single values
come back as Python ints or :class:`fractions.Fraction`; the ``*_table``
helpers build numpy arrays over ``1..limit`` for the bulk partial sums.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import gcd, isqrt, prod
from typing import Callable, Iterator

import mpmath
import numpy as np

__all__ = [
    "Factorization", "SpfSieve", "ArithmeticalFunction", "LogLinear", "KINDS",
    "factorize", "trial_factorize", "mobius", "jordan_phi", "euler_phi",
    "tau", "tau_star", "sigma_k", "dedekind_psi", "von_mangoldt",
    "unitary_divisors", "divisors", "is_regular", "is_regular_by_definition",
    "reg_iter", "rho", "pillai", "pillai_regular", "theta",
    "primes_up_to", "multiplicative_table", "von_mangoldt_table",
]


class Factorization(tuple):
    """Prime-power decomposition ``((p1, e1), (p2, e2), ...)`` with p1 < p2 < ...

    The empty factorization stands for n = 1.
    """

    __slots__ = ()

    def __new__(cls, pairs=()):
        return super().__new__(cls, tuple((int(p), int(e)) for p, e in pairs))

    @property
    def value(self) -> int:
        return prod(p**e for p, e in self)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self)

    @property
    def omega(self) -> int:
        return len(self)

    def __repr__(self) -> str:
        return f"Factorization({list(self)!r})"


class SpfSieve:
    """Smallest-prime-factor table for 2..limit (numpy int32/int64).

    Immutable after construction; share it freely.
    """

    def __init__(self, limit: int):
        if limit < 1:
            raise ValueError("sieve limit must be >= 1")
        self.limit = int(limit)
        dtype = np.int32 if limit < 2**31 - 1 else np.int64
        spf = np.zeros(self.limit + 1, dtype=dtype)
        for p in range(2, isqrt(self.limit) + 1):
            if spf[p] == 0:
                tail = spf[p * p :: p]
                tail[tail == 0] = p
        unset = np.flatnonzero(spf == 0)
        spf[unset] = unset.astype(dtype)
        spf[0] = 0
        spf[1] = 1
        spf.setflags(write=False)
        self.spf = spf
        self._primes = None

    @property
    def primes(self) -> np.ndarray:
        if self._primes is None:
            idx = np.arange(self.limit + 1)
            pr = np.flatnonzero((self.spf == idx) & (idx >= 2))
            pr.setflags(write=False)
            self._primes = pr
        return self._primes

    def factorize(self, n: int) -> Factorization:
        return factorize(n, self)

    def __repr__(self) -> str:
        return f"SpfSieve(limit={self.limit})"


def factorize(n: int, sieve: SpfSieve) -> Factorization:
    if n < 1 or n > sieve.limit:
        raise ValueError(f"n={n} outside the sieve range 1..{sieve.limit}")
    spf = sieve.spf
    out = []
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out.append((p, e))
    return Factorization(out)


def trial_factorize(n: int) -> Factorization:
    """Trial division; independent of any sieve, used as an oracle."""
    if n < 1:
        raise ValueError("n must be positive")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return Factorization(out)


def _fact(x) -> Factorization:
    if isinstance(x, Factorization):
        return x
    return trial_factorize(int(x))


# --- multiplicative functions -------------------------------------------------

def mobius(fact) -> int:
    fact = _fact(fact)
    if any(e > 1 for _, e in fact):
        return 0
    return -1 if len(fact) % 2 else 1


def jordan_phi(s: int, fact) -> Fraction:
    """phi_s(n) = n^s prod_{p|n} (1 - p^-s); rational for s <= 0."""
    out = Fraction(1)
    for p, e in _fact(fact):
        out *= Fraction(p) ** (s * e) * (1 - Fraction(p) ** (-s))
    return out


def euler_phi(fact) -> int:
    return prod(p**e - p ** (e - 1) for p, e in _fact(fact))


def tau(fact) -> int:
    return prod(e + 1 for _, e in _fact(fact))


def tau_star(fact) -> int:
    """Number of squarefree divisors, 2^omega(n)."""
    return 2 ** len(_fact(fact))


def sigma_k(k: int, fact) -> int:
    if k < 0:
        raise ValueError("sigma_k needs k >= 0")
    if k == 0:
        return tau(fact)
    return prod((p ** (k * (e + 1)) - 1) // (p**k - 1) for p, e in _fact(fact))


def dedekind_psi(fact) -> int:
    return prod(p**e + p ** (e - 1) for p, e in _fact(fact))


# --- the weight functions f ----------------------------------------------------

def _pp_one(p, e): return 1
def _pp_id(p, e): return p**e
def _pp_mobius(p, e): return -1 if e == 1 else 0
def _pp_tau(p, e): return e + 1
def _pp_tau_star(p, e): return 2
def _pp_phi(p, e): return p**e - p ** (e - 1)
def _pp_phi2(p, e): return p ** (2 * e) - p ** (2 * e - 2)
def _pp_sigma1(p, e): return (p ** (e + 1) - 1) // (p - 1)


# numpy versions of the same rules, for float tables (p, e are int arrays)
def _np_one(p, e): return np.ones(len(p))
def _np_id(p, e): return p.astype(float) ** e
def _np_mobius(p, e): return np.where(e == 1, -1.0, 0.0)
def _np_tau(p, e): return e + 1.0
def _np_tau_star(p, e): return np.full(len(p), 2.0)
def _np_phi(p, e): return p.astype(float) ** (e - 1) * (p - 1.0)
def _np_phi2(p, e): return p.astype(float) ** (2 * e - 2) * (p * p - 1.0)
def _np_sigma1(p, e):
    pf = p.astype(float)
    return (pf ** (e + 1) - 1.0) / (pf - 1.0)


_RULES = {
    "one": (_pp_one, _np_one, True),
    "id": (_pp_id, _np_id, True),
    "mobius": (_pp_mobius, _np_mobius, False),
    "tau": (_pp_tau, _np_tau, True),
    "tau_star": (_pp_tau_star, _np_tau_star, True),
    "phi": (_pp_phi, _np_phi, True),
    "phi2": (_pp_phi2, _np_phi2, True),
    "sigma1": (_pp_sigma1, _np_sigma1, True),
}
KINDS = tuple(_RULES)
_ALIASES = {"mu": "mobius", "1": "one", "tau*": "tau_star", "taustar": "tau_star",
            "sigma": "sigma1", "phi1": "phi"}


@dataclass(frozen=True)
class ArithmeticalFunction:
    """A multiplicative weight f, evaluated exactly from its prime-power rule.

    The eight built-in kinds are the ones the theorems specialise to.  Use
    :meth:`custom` to plug in another multiplicative rule.
    """

    kind: str
    rule: Callable[[int, int], int] = field(compare=False, repr=False, default=None)
    array_rule: Callable = field(compare=False, repr=False, default=None)
    nonvanishing: bool = True

    @classmethod
    def of(cls, name: "str | ArithmeticalFunction") -> "ArithmeticalFunction":
        if isinstance(name, ArithmeticalFunction):
            return name
        key = _ALIASES.get(name.lower(), name.lower())
        if key not in _RULES:
            raise ValueError(f"unknown arithmetical function {name!r}; choose from {', '.join(KINDS)} (or mu)")
        rule, arule, nonvanishing = _RULES[key]
        return cls(key, rule, arule, nonvanishing)

    @classmethod
    def custom(cls, name: str, rule: Callable[[int, int], int], nonvanishing: bool,
               array_rule: Callable | None = None) -> "ArithmeticalFunction":
        """Extension hook: ``rule(p, e)`` gives f(p^e).  Not checked against any theorem."""
        return cls(name, rule, array_rule, nonvanishing)

    @property
    def short(self) -> str:
        return "mu" if self.kind == "mobius" else self.kind

    def at_prime_power(self, p: int, e: int) -> int:
        return self.rule(p, e)

    def __call__(self, fact) -> int:
        fact = _fact(fact)
        return prod(self.rule(p, e) for p, e in fact)


# --- log-linear exact combinations ----------------------------------------------

class LogLinear:
    """``constant + c0*log(sqrt(2*pi)) + sum_p c_p*log(p)`` with rational coefficients.

    Coefficients stay exact; only :meth:`evaluate` rounds.
    """

    __slots__ = ("constant", "coeff_log_sqrt_2pi", "prime_log_coeffs")

    def __init__(self, constant=0, coeff_log_sqrt_2pi=0, prime_log_coeffs=None):
        self.constant = Fraction(constant)
        self.coeff_log_sqrt_2pi = Fraction(coeff_log_sqrt_2pi)
        self.prime_log_coeffs = {p: Fraction(c) for p, c in (prime_log_coeffs or {}).items() if c}

    @classmethod
    def log_prime(cls, p: int, coeff=1) -> "LogLinear":
        return cls(prime_log_coeffs={p: coeff})

    def is_zero(self) -> bool:
        return not self.constant and not self.coeff_log_sqrt_2pi and not self.prime_log_coeffs

    def __add__(self, other):
        if not isinstance(other, LogLinear):
            other = LogLinear(other)
        coeffs = dict(self.prime_log_coeffs)
        for p, c in other.prime_log_coeffs.items():
            coeffs[p] = coeffs.get(p, 0) + c
        return LogLinear(self.constant + other.constant,
                         self.coeff_log_sqrt_2pi + other.coeff_log_sqrt_2pi, coeffs)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other if isinstance(other, LogLinear) else LogLinear(-Fraction(other)))

    def __rsub__(self, other):
        return LogLinear(other) - self

    def __mul__(self, k):
        k = Fraction(k)
        return LogLinear(self.constant * k, self.coeff_log_sqrt_2pi * k,
                         {p: c * k for p, c in self.prime_log_coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, LogLinear):
            other = LogLinear(other)
        return (self.constant == other.constant
                and self.coeff_log_sqrt_2pi == other.coeff_log_sqrt_2pi
                and self.prime_log_coeffs == other.prime_log_coeffs)

    def __hash__(self):
        return hash((self.constant, self.coeff_log_sqrt_2pi, frozenset(self.prime_log_coeffs.items())))

    def evaluate(self, dps: int = 50) -> mpmath.mpf:
        with mpmath.workdps(dps + 10):
            total = mpmath.mpf(self.constant.numerator) / self.constant.denominator
            if self.coeff_log_sqrt_2pi:
                c = self.coeff_log_sqrt_2pi
                total += mpmath.mpf(c.numerator) / c.denominator * mpmath.log(2 * mpmath.pi) / 2
            for p in sorted(self.prime_log_coeffs):
                c = self.prime_log_coeffs[p]
                total += mpmath.mpf(c.numerator) / c.denominator * mpmath.log(p)
            return +total

    def __float__(self):
        return float(self.evaluate(20))

    def __repr__(self):
        parts = [str(self.constant)] if self.constant else []
        if self.coeff_log_sqrt_2pi:
            parts.append(f"{self.coeff_log_sqrt_2pi}*log_sqrt_2pi")
        parts += [f"{c}*log({p})" for p, c in sorted(self.prime_log_coeffs.items())]
        return "LogLinear(" + (" + ".join(parts) or "0") + ")"


def von_mangoldt(fact) -> LogLinear:
    fact = _fact(fact)
    if len(fact) == 1:
        return LogLinear.log_prime(fact[0][0])
    return LogLinear()


# --- divisor structure and regular integers -------------------------------------

def unitary_divisors(fact) -> list[tuple[int, Factorization]]:
    """All d || n, ascending, each paired with the factorization of n/d."""
    fact = _fact(fact)
    blocks = [(p, e, p**e) for p, e in fact]
    out = []
    for size in range(len(blocks) + 1):
        for chosen in combinations(range(len(blocks)), size):
            d = prod(blocks[i][2] for i in chosen)
            rest = Factorization((blocks[i][0], blocks[i][1]) for i in range(len(blocks)) if i not in chosen)
            out.append((d, rest))
    out.sort(key=lambda t: t[0])
    return out


def divisors(fact) -> list[int]:
    ds = [1]
    for p, e in _fact(fact):
        ds = [d * p**k for d in ds for k in range(e + 1)]
    return sorted(ds)


def is_regular(k: int, n: int) -> bool:
    g = gcd(k, n)
    return gcd(g, n // g) == 1


def is_regular_by_definition(k: int, n: int) -> bool:
    """Exists x with k^2 x = k (mod n); exhaustive over x in 1..n."""
    k2 = k * k % n
    target = k % n
    return any(k2 * x % n == target for x in range(1, n + 1))


def reg_iter(n: int) -> Iterator[int]:
    """Stream Reg_n in ascending order without materialising it."""
    if n < 1:
        raise ValueError("n must be positive")
    for k in range(1, n + 1):
        g = gcd(k, n)
        if gcd(g, n // g) == 1:
            yield k


def rho(fact) -> int:
    """|Reg_n| = prod (p^e - p^(e-1) + 1)."""
    return prod(p**e - p ** (e - 1) + 1 for p, e in _fact(fact))


def pillai(fact) -> int:
    """P(n) = sum_{k<=n} gcd(k, n) = sum_{d|n} d*phi(n/d)."""
    return prod((e + 1) * p**e - e * p ** (e - 1) for p, e in _fact(fact))


def pillai_regular(fact) -> int:
    """P~(n) = sum_{k in Reg_n} gcd(k, n) = sum_{d||n} d*phi(n/d)."""
    return prod(2 * p**e - p ** (e - 1) for p, e in _fact(fact))


def theta(x) -> Fraction | float:
    """x - floor(x) - 1/2; exact for int/Fraction input."""
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return x - (x.numerator // x.denominator) - Fraction(1, 2)
    return x - np.floor(x) - 0.5


# --- bulk tables -----------------------------------------------------------------

def primes_up_to(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags)


def _prime_power_rounds(limit: int, sieve: SpfSieve):
    """Yield (indices, p, e) per round; each n in 2..limit is split into its prime-power blocks."""
    if sieve.limit < limit:
        raise ValueError(f"sieve limit {sieve.limit} below requested table size {limit}")
    rem = np.arange(limit + 1, dtype=np.int64)
    idx = np.arange(2, limit + 1, dtype=np.int64)
    spf = sieve.spf
    while idx.size:
        q = rem[idx]
        p = spf[q].astype(np.int64)
        e = np.zeros(idx.size, dtype=np.int64)
        live = np.arange(idx.size)
        while live.size:
            q[live] //= p[live]
            e[live] += 1
            live = live[q[live] % p[live] == 0]
        yield idx, p, e
        rem[idx] = q
        idx = idx[q > 1]


def multiplicative_table(rule: Callable[[np.ndarray, np.ndarray], np.ndarray], limit: int,
                         sieve: SpfSieve, dtype=float) -> np.ndarray:
    """Array t with t[n] = prod rule(p, e) over p^e || n, for 1 <= n <= limit (t[0] = 0)."""
    table = np.ones(limit + 1, dtype=dtype)
    for idx, p, e in _prime_power_rounds(limit, sieve):
        table[idx] *= rule(p, e)
    table[0] = 0
    return table


def von_mangoldt_table(limit: int) -> np.ndarray:
    """Float array of Lambda(n) for 0 <= n <= limit."""
    lam = np.zeros(limit + 1)
    pr = primes_up_to(limit)
    logs = np.log(pr.astype(float))
    power = pr.copy()
    keep = np.ones(pr.size, dtype=bool)
    while True:
        keep &= power <= limit
        if not keep.any():
            break
        lam[power[keep]] = logs[keep]
        power = np.where(keep, power * pr, limit + 1)
    return lam
