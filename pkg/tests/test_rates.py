import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npivquad.errors import InvalidInputError, RangeExhaustedError
from npivquad.rates import RateSpec, Regime, minimax_rate, optimal_j, oracle_j0, rate_exponent, variance_proxy

MILD11 = RateSpec("mild", 1, 1)
SEV11 = RateSpec("severe", 1, 1)


def test_optimal_j_examples():
    assert optimal_j(MILD11, 1e4) == 8
    assert optimal_j(SEV11, 1e4) == 4
    assert optimal_j(MILD11, 1e4, 0.5) == 4


def test_optimal_j_clamped_and_guarded():
    assert optimal_j(MILD11, 100, 0.01) == 1
    with pytest.raises(InvalidInputError):
        optimal_j(RateSpec("severe", 2, 1), 100)


def test_rate_exponents():
    assert rate_exponent(MILD11) == pytest.approx(4 / 9)
    assert MILD11.irregular
    reg = RateSpec("mild", 2, 1)
    assert not reg.irregular and rate_exponent(reg) == 0.5
    assert minimax_rate(reg, 1e4) == pytest.approx(1e-2)
    assert minimax_rate(SEV11, 1e4) == pytest.approx(math.log(1e4) ** -2)
    assert rate_exponent(RateSpec("mild", 1, 2)) == pytest.approx(4 / 13)


@pytest.mark.parametrize("zeta", [0.5, 1.0, 2.5])
def test_elbow_continuity(zeta):
    p = zeta + 0.25
    assert rate_exponent(RateSpec("mild", p, zeta)) == pytest.approx(0.5, abs=1e-15)
    assert rate_exponent(RateSpec("mild", p + 1e-9, zeta)) == 0.5


def test_minimax_needs_n():
    with pytest.raises(InvalidInputError):
        minimax_rate(MILD11, 2)


def test_rate_spec_validation():
    with pytest.raises(InvalidInputError):
        RateSpec("mild", -1, 1)
    with pytest.raises(InvalidInputError):
        RateSpec("mild", 1, 1, d=2)
    assert RateSpec("severe", 1, 1).regime is Regime.SEVERE


def test_oracle_j0_examples():
    J = np.arange(1, 6)
    assert oracle_j0(MILD11, 5 * J ** 2.0, 1e4) == 3
    assert oracle_j0(MILD11, 5 * J ** 2.0, 1e4, C0=1e12) == 1
    assert oracle_j0(MILD11, np.ones(5), math.e) == 2


def test_oracle_j0_errors():
    with pytest.raises(RangeExhaustedError):
        oracle_j0(MILD11, [1.0, 1.0], 1e8)
    with pytest.raises(InvalidInputError):
        oracle_j0(MILD11, [2.0, 1.0], 100)
    with pytest.raises(InvalidInputError):
        oracle_j0(MILD11, [1.0, 2.0], 100, C0=0)


def test_variance_proxy_value():
    assert variance_proxy(2.0, 4, 100) == pytest.approx(4 * math.sqrt(4 * math.log(100)) / 100)


@settings(max_examples=80, deadline=None)
@given(p=st.floats(0.2, 4), zeta=st.floats(0.2, 3), growth=st.floats(0.2, 3),
       n=st.floats(50, 1e7), C0=st.floats(0.01, 100))
def test_oracle_j0_is_the_first_crossing(p, zeta, growth, n, C0):
    rate = RateSpec("mild", p, zeta)
    J = np.arange(1, 400)
    tau = J ** growth
    try:
        J0 = oracle_j0(rate, tau, n, C0)
    except RangeExhaustedError:
        return
    holds = lambda j: j ** (-2 * p) <= C0 * variance_proxy(tau[j - 1], j, n)  # noqa: E731
    assert holds(J0)
    if J0 > 1:
        assert not holds(J0 - 1)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(0.2, 4), zeta=st.floats(0.2, 3), n=st.floats(100, 1e8))
def test_optimal_j_monotone_in_n(p, zeta, n):
    rate = RateSpec("mild", p, zeta)
    assert optimal_j(rate, 2 * n) >= optimal_j(rate, n)
