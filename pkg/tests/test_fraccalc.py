import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from dfpp.errors import DomainError
from dfpp.fraccalc import (
    GridFunction,
    SignedLogValue,
    fractional_difference_caputo,
    fractional_difference_rl,
    fractional_sum,
    gbc,
    hhat,
    hhat_array,
    log_hhat_int,
    nabla,
    rising_factorial,
)
from dfpp.mittagleffler import ml_eval


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# --- SignedLogValue -------------------------------------------------------


@given(st.floats(min_value=-300, max_value=300), st.sampled_from([-1.0, 1.0]))
def test_signed_log_round_trip(exponent, sign):
    v = sign * 10.0**exponent
    assert rel(SignedLogValue.from_real(v).to_real(), v) <= 1e-14


@given(
    st.floats(min_value=-1e6, max_value=1e6).filter(lambda x: abs(x) > 1e-6),
    st.floats(min_value=-1e6, max_value=1e6).filter(lambda x: abs(x) > 1e-6),
)
def test_signed_log_product_and_ratio(a, b):
    sa, sb = SignedLogValue.from_real(a), SignedLogValue.from_real(b)
    prod, ratio = sa * sb, sa / sb
    assert prod.sign == sa.sign * sb.sign
    assert ratio.sign == sa.sign * sb.sign
    assert prod.log_abs == pytest.approx(sa.log_abs + sb.log_abs, abs=1e-12)
    assert ratio.log_abs == pytest.approx(sa.log_abs - sb.log_abs, abs=1e-12)
    assert rel(prod.to_real(), a * b) <= 1e-12


def test_signed_log_zero_and_overflow():
    z = SignedLogValue.zero()
    assert z.to_real() == 0.0
    assert (z * SignedLogValue.one()).sign == 0
    with pytest.raises(ZeroDivisionError):
        SignedLogValue.one() / z
    with pytest.raises(OverflowError):
        SignedLogValue(1, 1000.0).to_real()
    with pytest.raises(ValueError):
        SignedLogValue(2, 0.0)


# --- GridFunction ---------------------------------------------------------


def test_grid_function_indexing():
    f = GridFunction(3, [1.0, 2.0, 4.0])
    assert f.end == 5 and len(f) == 3
    assert f(3) == 1.0 and f(5) == 4.0
    with pytest.raises(DomainError):
        f(2)
    with pytest.raises(DomainError):
        f(6)
    with pytest.raises(DomainError):
        GridFunction(0, [])


# --- rising factorial and hhat --------------------------------------------


def test_rising_factorial_examples():
    assert rising_factorial(3.7, 0).to_real() == 1.0
    assert rising_factorial(3, 1).to_real() == pytest.approx(3.0, rel=1e-15)
    assert rel(rising_factorial(2.5, 0.5).to_real(), 2.0 / math.gamma(2.5)) <= 1e-14


@pytest.mark.parametrize("x, alpha", [(-0.5, 1.2), (-2.3, 0.4), (1.5, -2.7), (-3.5, -0.25)])
def test_rising_factorial_negative_arguments(x, alpha):
    got = rising_factorial(x, alpha)
    want = math.gamma(x + alpha) / math.gamma(x)
    assert got.sign == (1 if want > 0 else -1)
    assert rel(got.to_real(), want) <= 1e-13


def test_rising_factorial_large_arguments():
    # Gamma overflows at these sizes; the ratio does not
    got = rising_factorial(1e5, 2.5).to_real()
    assert rel(got, oracles.hhat(2.5, 1e5) * math.gamma(3.5)) <= 1e-12


@pytest.mark.parametrize("x, alpha", [(0, 0.5), (-1, 0.3), (0.5, -0.5), (-2.5, 0.5)])
def test_rising_factorial_poles(x, alpha):
    with pytest.raises(DomainError):
        rising_factorial(x, alpha)


def test_gbc_examples():
    assert hhat(0, 7.3) == 1.0
    assert hhat(0.42, 1) == pytest.approx(1.0, rel=1e-15)
    assert hhat(1, 3) == pytest.approx(3.0, rel=1e-15)
    assert hhat(2, 3) == pytest.approx(6.0, rel=1e-15)


def test_gbc_zero_argument_convention():
    assert hhat(0, 0) == 1.0
    assert hhat(0.7, 0) == 0.0
    assert hhat(-0.4, 0) == 0.0
    assert gbc(2.5, 0).sign == 0


@pytest.mark.parametrize("alpha, x", [(-1, 3), (-2, 3.5), (0.5, -1), (-0.5, 0.5), (0, -2)])
def test_gbc_poles(alpha, x):
    with pytest.raises(DomainError):
        gbc(alpha, x)


@pytest.mark.parametrize(
    "alpha, x", [(0.3, 5), (-0.4, 7), (2.7, 11.5), (-0.9, 40), (12.25, 3.5), (0.5, 1e4)]
)
def test_gbc_against_mpmath(alpha, x):
    assert rel(hhat(alpha, x), oracles.hhat(alpha, x)) <= 1e-13


def test_gbc_overflow_raises_in_plain_form():
    big = gbc(400.0, 900.0)
    assert big.sign == 1 and big.log_abs > 700
    with pytest.raises(OverflowError):
        big.to_real()


def test_hhat_array_matches_scalar():
    xs = np.array([0.0, 1.0, 2.5, 7.0, 30.0])
    got = hhat_array(-0.3, xs)
    assert got[0] == 0.0
    for x, g in zip(xs[1:], got[1:]):
        assert rel(g, hhat(-0.3, x)) <= 1e-14


def test_log_hhat_int_both_branches():
    a = np.array([-0.5, 0.0, 0.7, 3.2])
    for t in (1, 9, 5000):
        got = log_hhat_int(a, t)
        for ai, g in zip(a, got):
            assert abs(g - math.log(oracles.hhat(ai, t))) <= 1e-12 * max(1.0, abs(g))
    with pytest.raises(DomainError):
        log_hhat_int(-1.0, 4)


# --- nabla ----------------------------------------------------------------


def test_nabla_examples():
    c = nabla(GridFunction(0, [5.0] * 5))
    assert c.start == 1 and c.values == (0.0,) * 4
    lin = nabla(GridFunction(0, [0.0, 1.0, 2.0, 3.0]))
    assert lin.start == 1 and lin.values == (1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        nabla(GridFunction(0, [1.0]))


def test_nabla_of_hhat_lowers_order():
    f = GridFunction.sample(lambda x: hhat(0.6, x), 1, 20)
    g = nabla(f)
    for t in range(2, 21):
        assert rel(g(t), hhat(-0.4, t)) <= 1e-12


# --- fractional sum -------------------------------------------------------


def test_fractional_sum_order_one_is_running_sum():
    vals = [0.5, -1.25, 3.0, 2.0, 7.5]
    f = GridFunction(2, vals)
    for t in range(2, 7):
        assert fractional_sum(f, 1.0, t) == pytest.approx(math.fsum(vals[: t - 1]), rel=1e-15)


def test_fractional_sum_order_two_of_ones():
    f = GridFunction(1, [1.0] * 5)
    assert fractional_sum(f, 2.0, 5) == 15.0


@given(
    st.lists(st.integers(-50, 50), min_size=1, max_size=12),
    st.integers(1, 4),
    st.integers(-3, 3),
)
def test_fractional_sum_integer_order_is_iterated_sum(vals, m, start):
    f = GridFunction(start, vals)
    iterated = list(map(float, vals))
    for _ in range(m):
        iterated = list(np.cumsum(iterated))
    for i in range(len(vals)):
        assert fractional_sum(f, float(m), start + i) == iterated[i]


def test_fractional_sum_of_delta():
    f = GridFunction(3, [1.0] + [0.0] * 9)
    for t in range(3, 13):
        assert rel(fractional_sum(f, 0.5, t), hhat(-0.5, t - 3 + 1)) <= 1e-14


def test_fractional_sum_errors():
    f = GridFunction(0, [1.0, 2.0])
    with pytest.raises(DomainError):
        fractional_sum(f, 0.0, 1)
    with pytest.raises(DomainError):
        fractional_sum(f, 0.5, 2)


# --- fractional differences ----------------------------------------------


def test_rl_order_one_is_nabla():
    f = GridFunction(0, [1.0, 4.0, 9.0, 16.0])
    for t in range(1, 4):
        assert fractional_difference_rl(f, 1.0, t) == f(t) - f(t - 1)


def test_rl_of_hhat():
    f = GridFunction.sample(lambda x: hhat(0.9, x), 1, 20)
    for t in range(2, 21):
        assert rel(fractional_difference_rl(f, 0.4, t), hhat(0.5, t)) <= 1e-12


def test_rl_of_mittag_leffler():
    q, lam = 0.5, 0.3
    f = GridFunction.sample(lambda t: ml_eval(q, lam, t).value, 1, 30)
    for t in range(2, 31):
        want = hhat(-q, t) + lam * oracles.ml(q, lam, t)
        assert rel(fractional_difference_rl(f, q, t), want) <= 1e-10


def test_rl_grid_too_short():
    f = GridFunction(1, [1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        fractional_difference_rl(f, 0.5, 1)
    with pytest.raises(DomainError):
        fractional_difference_rl(f, 1.5, 2)


def test_caputo_examples():
    f = GridFunction(0, [2.0, 3.0, 7.0, 1.0])
    for t in range(1, 4):
        assert fractional_difference_caputo(f, 1.0, t) == f(t) - f(t - 1)
    const = GridFunction(1, [4.0] * 8)
    for alpha in (0.2, 0.5, 0.9):
        for t in range(2, 9):
            assert fractional_difference_caputo(const, alpha, t) == 0.0
    lin = GridFunction(1, [1.0, 2.0, 3.0])
    want = hhat(-0.5, 2) + hhat(-0.5, 1)
    assert rel(fractional_difference_caputo(lin, 0.5, 3), want) <= 1e-15


def test_caputo_and_rl_differ_by_initial_value_term():
    # RL - Caputo = f(a) * hhat_{-alpha}(t - a + 1) for 0 < alpha < 1
    f = GridFunction.sample(lambda t: math.sqrt(t) + 0.25 * t, 1, 25)
    alpha = 0.35
    for t in range(2, 26):
        diff = fractional_difference_rl(f, alpha, t) - fractional_difference_caputo(f, alpha, t)
        assert diff == pytest.approx(f(1) * hhat(-alpha, t), rel=1e-10, abs=1e-13)
