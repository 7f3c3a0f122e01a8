import random
from fractions import Fraction
from math import gcd, prod

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regsum.arith import (KINDS, ArithmeticalFunction, Factorization, LogLinear, SpfSieve,
                          dedekind_psi, divisors, euler_phi, factorize, is_regular,
                          is_regular_by_definition, jordan_phi, mobius, multiplicative_table, pillai,
                          pillai_regular, primes_up_to, reg_iter, rho, sigma_k, tau, tau_star, theta,
                          trial_factorize, unitary_divisors, von_mangoldt, von_mangoldt_table)

SIEVE = SpfSieve(20000)


def brute_divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


def brute_mobius(n):
    # mu from the defining recursion sum_{d|n} mu(d) = [n == 1]
    mu = {1: 1}
    for k in range(2, n + 1):
        mu[k] = -sum(mu[d] for d in brute_divisors(k) if d < k)
    return mu[n]


# --- factorization ------------------------------------------------------------------

def test_factorize_examples():
    assert factorize(1, SIEVE) == Factorization([])
    assert factorize(12, SIEVE) == Factorization([(2, 2), (3, 1)])
    assert factorize(9973, SIEVE) == trial_factorize(9973) == Factorization([(9973, 1)])


@pytest.mark.parametrize("n", [0, -3, 20001])
def test_factorize_domain(n):
    with pytest.raises(ValueError):
        factorize(n, SIEVE)


@given(st.integers(1, 20000))
def test_factorize_reconstructs(n):
    f = factorize(n, SIEVE)
    assert f == trial_factorize(n)
    assert f.value == n
    ps = f.primes
    assert list(ps) == sorted(set(ps))
    assert all(e >= 1 for _, e in f)


def test_spf_is_least_prime_factor():
    for n in range(2, 3000):
        p = int(SIEVE.spf[n])
        assert n % p == 0 and all(n % q for q in range(2, p))
    assert SIEVE.primes[:10].tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert np.array_equal(SIEVE.primes, primes_up_to(20000))


def test_sieve_is_read_only():
    with pytest.raises(ValueError):
        SIEVE.spf[5] = 2


# --- multiplicative functions -----------------------------------------------------------

def test_mobius_examples():
    assert mobius(trial_factorize(1)) == 1
    assert mobius(trial_factorize(12)) == 0
    assert mobius(trial_factorize(30)) == -1
    assert sum(mobius(trial_factorize(d)) for d in brute_divisors(30)) == 0


def test_mobius_against_recursion():
    for n in range(1, 300):
        assert mobius(n) == brute_mobius(n)


def test_jordan_examples():
    assert jordan_phi(1, trial_factorize(4)) == 2
    assert jordan_phi(-1, trial_factorize(4)) == Fraction(-1, 4)
    for s in range(-5, 6):
        assert jordan_phi(s, Factorization()) == 1


def test_jordan_matches_divisor_sum():
    # the stated property, exhaustively: n <= 2000, s in -5..5
    for n in range(1, 2001):
        fact = trial_factorize(n)
        ds = divisors(fact)
        mus = {d: mobius(trial_factorize(n // d)) for d in ds}
        for s in range(-5, 6):
            want = sum(Fraction(d) ** s * mus[d] for d in ds if mus[d])
            assert jordan_phi(s, fact) == want, (n, s)


def test_small_function_examples():
    f12 = trial_factorize(12)
    assert tau(f12) == 6 and tau_star(f12) == 4
    assert dedekind_psi(f12) == 24
    assert sigma_k(1, Factorization()) == 1


def test_functions_against_brute():
    for n in range(1, 600):
        f = trial_factorize(n)
        ds = brute_divisors(n)
        assert tau(f) == len(ds)
        assert tau_star(f) == sum(1 for d in ds if mobius(d) != 0)
        assert sigma_k(0, f) == len(ds)
        for k in (1, 2, 3):
            assert sigma_k(k, f) == sum(d**k for d in ds)
        assert euler_phi(f) == sum(1 for k in range(1, n + 1) if gcd(k, n) == 1)
        assert dedekind_psi(f) * prod(p for p, _ in f) == n * prod(p + 1 for p, _ in f)


def test_sigma_negative_k():
    with pytest.raises(ValueError):
        sigma_k(-1, trial_factorize(6))


def test_kinds_and_nonvanishing():
    assert set(KINDS) == {"one", "id", "mobius", "tau", "tau_star", "phi", "phi2", "sigma1"}
    nonvan = {k for k in KINDS if ArithmeticalFunction.of(k).nonvanishing}
    assert nonvan == set(KINDS) - {"mobius"}
    assert ArithmeticalFunction.of("mu").kind == "mobius"
    with pytest.raises(ValueError):
        ArithmeticalFunction.of("lambda")


def test_kind_values_against_closed_forms():
    refs = {
        "one": lambda f: 1, "id": lambda f: f.value, "mobius": mobius, "tau": tau,
        "tau_star": tau_star, "phi": euler_phi, "phi2": lambda f: jordan_phi(2, f),
        "sigma1": lambda f: sigma_k(1, f),
    }
    for n in range(1, 500):
        fact = trial_factorize(n)
        for k in KINDS:
            assert ArithmeticalFunction.of(k)(fact) == refs[k](fact)


def test_custom_kind_hook():
    sq = ArithmeticalFunction.custom("square", lambda p, e: p ** (2 * e), nonvanishing=True)
    assert sq(trial_factorize(12)) == 144


coprime_pairs = st.tuples(st.integers(1, 10**4), st.integers(1, 10**4)).filter(lambda t: gcd(*t) == 1)


@settings(max_examples=500)
@given(coprime_pairs, st.integers(-3, 3))
def test_multiplicativity(pair, s):
    m, n = pair
    fm, fn, fmn = trial_factorize(m), trial_factorize(n), trial_factorize(m * n)
    for fun in (rho, pillai, pillai_regular, tau, tau_star, dedekind_psi,
                lambda f: sigma_k(1, f), lambda f: jordan_phi(s, f)):
        assert fun(fmn) == fun(fm) * fun(fn)
    for k in KINDS:
        f = ArithmeticalFunction.of(k)
        assert f(fmn) == f(fm) * f(fn)


# --- bulk tables -----------------------------------------------------------------------------

def test_multiplicative_table_matches_pointwise():
    for k in KINDS:
        f = ArithmeticalFunction.of(k)
        t = multiplicative_table(f.array_rule, 5000, SIEVE)
        assert t[0] == 0
        want = np.array([float(f(trial_factorize(n))) for n in range(1, 5001)])
        assert np.allclose(t[1:], want, rtol=1e-15, atol=0), k


def test_von_mangoldt_table():
    lam = von_mangoldt_table(3000)
    for n in range(1, 3001):
        assert lam[n] == pytest.approx(float(von_mangoldt(n)), abs=1e-15)


# --- Lambda and LogLinear --------------------------------------------------------------------

def test_von_mangoldt_examples():
    assert von_mangoldt(8) == LogLinear.log_prime(2)
    assert von_mangoldt(12).is_zero()
    assert von_mangoldt(1).is_zero()


def test_loglinear_exact_then_rounded():
    a = LogLinear(Fraction(1, 3), 2, {2: Fraction(1, 2)})
    b = LogLinear(prime_log_coeffs={2: Fraction(-1, 2), 3: 1})
    c = a + b
    assert c.prime_log_coeffs == {3: 1}
    assert (c - b) == a
    assert (2 * a).coeff_log_sqrt_2pi == 4
    import mpmath
    with mpmath.workdps(60):
        want = mpmath.mpf(1) / 3 + mpmath.log(2 * mpmath.pi) + mpmath.log(3)
        assert abs(c.evaluate(50) - want) < mpmath.mpf(10) ** -50


# --- unitary divisors and regular integers ---------------------------------------------------

def test_unitary_divisor_examples():
    assert [d for d, _ in unitary_divisors(1)] == [1]
    assert [d for d, _ in unitary_divisors(12)] == [1, 3, 4, 12]
    assert [d for d, _ in unitary_divisors(3**5)] == [1, 243]


@given(st.integers(1, 10**5))
def test_unitary_divisor_structure(n):
    fact = trial_factorize(n)
    uds = unitary_divisors(fact)
    ds = [d for d, _ in uds]
    assert len(uds) == 2 ** fact.omega
    assert ds == sorted(ds)
    for d, rest in uds:
        assert n % d == 0 and gcd(d, n // d) == 1 and rest.value == n // d


def test_unitary_divisors_are_all_of_them():
    for n in range(1, 1000):
        want = [d for d in brute_divisors(n) if gcd(d, n // d) == 1]
        assert [d for d, _ in unitary_divisors(n)] == want


def test_is_regular_examples():
    assert not is_regular(2, 4)
    assert is_regular(3, 4)
    for p in (2, 3, 5, 7, 97):
        assert all(is_regular(k, p) for k in range(1, p + 1))


def test_regularity_characterization_small():
    for n in range(1, 61):
        for k in range(1, n + 1):
            assert is_regular(k, n) == is_regular_by_definition(k, n)


def test_reg_rho_examples():
    assert list(reg_iter(4)) == [1, 3, 4]
    assert rho(4) == 3 and rho(12) == 9 and rho(1) == 1


def test_rho_three_ways():
    for n in range(1, 2001):
        fact = trial_factorize(n)
        by_phi = sum(euler_phi(trial_factorize(d)) for d, _ in unitary_divisors(fact))
        streamed = sum(1 for _ in reg_iter(n))
        assert rho(fact) == by_phi == streamed


def test_pillai_examples():
    assert pillai(4) == 8
    assert pillai_regular(4) == 6
    assert pillai_regular(12) == 30


def test_pillai_against_gcd_sums():
    for n in range(1, 2001):
        fact = trial_factorize(n)
        assert pillai_regular(fact) == sum(gcd(k, n) for k in reg_iter(n))
        if n <= 600:
            assert pillai(fact) == sum(gcd(k, n) for k in range(1, n + 1))


def test_reg_iter_is_lazy():
    it = reg_iter(10**12)
    assert next(it) == 1


def test_theta_examples():
    assert theta(Fraction(21, 2)) == 0
    assert theta(7) == Fraction(-1, 2)
    assert theta(Fraction(21, 4)) == Fraction(-1, 4)
    assert theta(5.25) == pytest.approx(-0.25)


@given(st.fractions(min_value=Fraction(1, 10**6), max_value=10**6))
def test_theta_range(x):
    t = theta(x)
    assert Fraction(-1, 2) <= t < Fraction(1, 2)
    assert (x - t - Fraction(1, 2)).denominator == 1


def test_random_coprime_pairs_multiplicative():
    # the 500-pair property at full range, fixed seed
    rng = random.Random(7)
    done = 0
    while done < 500:
        m, n = rng.randint(1, 10**4), rng.randint(1, 10**4)
        if gcd(m, n) != 1:
            continue
        done += 1
        for fun in (rho, pillai, pillai_regular, tau, tau_star, dedekind_psi):
            assert fun(m * n) == fun(m) * fun(n)
