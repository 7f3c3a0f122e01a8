from fractions import Fraction
from math import gcd

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regsum.arith import (KINDS, ArithmeticalFunction, LogLinear, SpfSieve, jordan_phi, reg_iter,
                          trial_factorize, unitary_divisors)
from regsum.identities import (GAMMA_TOLERANCE, bernoulli_sum_lhs, bernoulli_sum_rhs,
                               coprime_count_check, gamma_sum_lhs, gamma_sum_rhs, power_profile,
                               power_sum_lhs, power_sum_rhs, unitary_phi_sum, verify)

kinds = st.sampled_from(KINDS)


# --- power sums -----------------------------------------------------------------

def test_power_sum_examples():
    assert power_sum_lhs("id", 4, 1) == 5
    assert power_sum_lhs("one", 1, 3) == 1
    assert power_sum_lhs("mu", 4, 2) == Fraction(5, 8)
    assert power_sum_rhs("id", 4, 1) == 5
    assert power_sum_rhs("id", 1, 1) == 1
    assert power_sum_rhs("phi2", 9, 2) == power_sum_lhs("phi2", 9, 2)


@settings(max_examples=200)
@given(kinds, st.integers(1, 400), st.integers(1, 8))
def test_power_identity(f, n, r):
    assert power_sum_lhs(f, n, r) == power_sum_rhs(f, n, r)


def test_profile_matches_definition():
    for n in (1, 2, 12, 30, 97, 360, 1001):
        prof = power_profile(n)
        for f in KINDS:
            for r in range(1, 7):
                assert prof.power_sum(f, r) == power_sum_lhs(f, n, r)
            for m in range(1, 4):
                assert prof.bernoulli_sum(f, m) == bernoulli_sum_lhs(f, n, m)


def test_id_r1_specialization():
    # n * power_sum(id, n, 1) = sum_{k in Reg_n} gcd(k, n) k
    for n in range(1, 2001):
        brute = sum(gcd(k, n) * k for k in reg_iter(n))
        assert n * power_sum_rhs("id", n, 1) == brute


def test_sieve_and_trial_paths_agree():
    sieve = SpfSieve(5000)
    for n in range(1, 300):
        assert power_sum_rhs("tau", n, 3, sieve) == power_sum_rhs("tau", n, 3)


def test_unitary_phi_sum_negative_path():
    # the integer shortcut for s <= 0 against plain Fractions
    for n in range(1, 400):
        fact = trial_factorize(n)
        for k in KINDS:
            f = ArithmeticalFunction.of(k)
            for s in (1, 0, -1, -3, -5):
                want = sum((f(rest) * jordan_phi(s, d) for d, rest in unitary_divisors(fact)),
                           Fraction(0))
                assert unitary_phi_sum(f, fact, s) == want


# --- Bernoulli sums ------------------------------------------------------------------

def test_bernoulli_sum_examples():
    assert bernoulli_sum_lhs("id", 4, 1) == Fraction(5, 8) == bernoulli_sum_rhs("id", 4, 1)
    assert bernoulli_sum_lhs("one", 1, 2) == Fraction(-1, 30) == bernoulli_sum_rhs("one", 1, 2)
    assert bernoulli_sum_lhs("tau", 12, 1) == bernoulli_sum_rhs("tau", 12, 1)


@settings(max_examples=150)
@given(kinds, st.integers(1, 400), st.integers(1, 5))
def test_bernoulli_identity(f, n, m):
    assert bernoulli_sum_lhs(f, n, m) == bernoulli_sum_rhs(f, n, m)


@pytest.mark.parametrize("fn", [bernoulli_sum_lhs, bernoulli_sum_rhs])
def test_bernoulli_sum_needs_positive_m(fn):
    with pytest.raises(ValueError):
        fn("id", 5, 0)


# --- log Gamma sums -------------------------------------------------------------------

def test_gamma_examples():
    with mpmath.workdps(60):
        half_log_pi = mpmath.log(mpmath.pi) / 2
        assert abs(gamma_sum_lhs("id", 2) - half_log_pi) < mpmath.mpf(10) ** -45
        rhs = gamma_sum_rhs("id", 2)
        assert rhs == LogLinear(coeff_log_sqrt_2pi=1, prime_log_coeffs={2: Fraction(-1, 2)})
        assert abs(rhs.evaluate(50) - half_log_pi) < mpmath.mpf(10) ** -45
    assert gamma_sum_lhs("one", 1) == 0
    assert gamma_sum_rhs("one", 1).is_zero()
    with mpmath.workdps(60):
        assert abs(gamma_sum_lhs("phi", 12) - gamma_sum_rhs("phi", 12).evaluate(50)) < GAMMA_TOLERANCE


@settings(max_examples=40)
@given(kinds, st.integers(1, 150))
def test_gamma_identity(f, n):
    with mpmath.workdps(60):
        assert abs(gamma_sum_lhs(f, n) - gamma_sum_rhs(f, n).evaluate(50)) < GAMMA_TOLERANCE


# --- coprime count -------------------------------------------------------------------------

def test_coprime_examples():
    assert coprime_count_check(2, Fraction(21, 2)) == (5, 5)
    assert coprime_count_check(6, 6) == (2, 2)
    assert coprime_count_check(2, 1) == (1, 1)


@given(st.integers(2, 10**4), st.fractions(min_value=1, max_value=10**5, max_denominator=50))
def test_coprime_count_exact(t, x):
    lhs, rhs = coprime_count_check(t, x)
    assert isinstance(rhs, Fraction) and lhs == rhs


def test_coprime_count_domain():
    with pytest.raises(ValueError):
        coprime_count_check(1, 10)
    with pytest.raises(ValueError):
        coprime_count_check(5, Fraction(1, 2))


# --- verify ------------------------------------------------------------------------------------

def test_verify_examples():
    assert verify("power_sum", "id", (1, 2000), {"r": 3}).mismatches == []
    assert verify("bernoulli_sum", "mu", (1, 2000), {"m": 2}).mismatches == []
    rep = verify("gamma_sum", "tau", (1, 500))
    assert rep.ok and rep.max_numeric_residual < 1e-30 and rep.checked == 500


def test_verify_reports_exact_discrepancy(monkeypatch):
    import regsum.identities as ids

    real = ids.power_sum_rhs
    monkeypatch.setattr(ids, "power_sum_rhs",
                        lambda f, n, r, sieve=None: real(f, n, r) + (Fraction(1, 7) if n == 10 else 0))
    rep = verify("power_sum", "id", (1, 20), {"r": 1})
    assert not rep.ok
    assert [(n, d) for n, _, _, d in rep.mismatches] == [(10, Fraction(-1, 7))]
    assert rep.as_dict()["mismatches"][0]["difference"] == "-1/7"


def test_verify_time_budget_marks_incomplete():
    rep = verify("power_sum", "id", (1, 10**6), {"r": 2}, time_budget=0.05)
    assert not rep.complete and not rep.ok and rep.checked < 10**6


def test_verify_coprime_kind():
    rep = verify("coprime_count", "one", (2, 300), {"x": Fraction(1001, 3)})
    assert rep.ok and rep.checked == 299


@pytest.mark.parametrize("kind,rng,params", [
    ("power_sum", (1, 0), {"r": 1}), ("power_sum", (0, 5), {"r": 1}),
    ("power_sum", (1, 5), {}), ("bernoulli_sum", (1, 5), {"m": 0}), ("nonsense", (1, 5), {}),
])
def test_verify_rejects_bad_input(kind, rng, params):
    with pytest.raises(ValueError):
        verify(kind, "id", rng, params)
