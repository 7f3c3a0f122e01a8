"""Weighted sums over regular integers mod n: exact identities, partial sums and constants."""
from .arith import (KINDS, ArithmeticalFunction, Factorization, LogLinear, SpfSieve, factorize,
                    is_regular, jordan_phi, mobius, pillai, pillai_regular, reg_iter, rho, theta,
                    unitary_divisors, von_mangoldt)
from .bernoulli import bernoulli, bernoulli_numbers, bernoulli_poly, log_gamma
from .constants import ConstantStore, EulerProductSpec, build_store, euler_product
from .identities import VerifyReport, verify
from .partial_sums import SumSeries, TheoremEq, k2_fit, lhs_series, main_term, residual_report

__version__ = "0.1.0"
