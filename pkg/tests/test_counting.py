import math

import pytest

import oracles
from dfpp.counting import (
    CountPmfQuery,
    count_gf_check,
    count_gf_closed,
    count_pmf_exact,
    count_pmf_oracle,
    count_pmf_result,
    count_table,
    gf_tail_allowance,
    renewal_count_pmf,
)
from dfpp.errors import CancellationError, DomainError
from dfpp.mittagleffler import ProcessParams, SeriesControl, ml_survival


def query(q, lam, t, n, **kw):
    return CountPmfQuery(ProcessParams(q, lam), t, n, SeriesControl(**kw))


def binom(t, n, p):
    return math.comb(t, n) * p**n * (1 - p) ** (t - n)


def test_query_validation():
    with pytest.raises(DomainError):
        query(0.5, 0.5, -1, 0)
    with pytest.raises(DomainError):
        query(0.5, 0.5, 3, 1.5)


@pytest.mark.parametrize("q, lam", [(0.3, 0.9), (0.5, 0.5), (1.0, 0.2)])
def test_n_zero_is_survival(q, lam):
    for t in (0, 1, 5, 17, 30):
        got = count_pmf_exact(query(q, lam, t, 0))
        assert abs(got - ml_survival(ProcessParams(q, lam), t)) <= 1e-11


def test_support():
    for method in ("auto", "series", "resummed"):
        r = count_pmf_result(query(0.5, 0.5, 2, 3), method)
        assert r.value == 0.0
    assert count_pmf_oracle(query(0.5, 0.5, 2, 3)) == 0.0


def test_q1_binomial_example():
    got = count_pmf_exact(query(1.0, 0.5, 6, 2))
    assert got == pytest.approx(binom(6, 2, 1 / 3), rel=1e-12)
    assert count_pmf_oracle(query(1.0, 0.5, 10, 4)) == pytest.approx(binom(10, 4, 1 / 3), rel=1e-12)


def test_oracle_n_zero():
    for t in (1, 8):
        assert count_pmf_oracle(query(0.4, 0.6, t, 0)) == pytest.approx(
            ml_survival(ProcessParams(0.4, 0.6), t), rel=1e-13
        )


@pytest.mark.parametrize("t, n", [(12, 2), (12, 0), (5, 5), (20, 3), (30, 10)])
def test_against_mpmath_series(t, n):
    want = oracles.count_pmf(0.5, 0.5, t, n)
    assert abs(count_pmf_exact(query(0.5, 0.5, t, n)) - want) <= 1e-14 + 1e-12 * want
    assert abs(count_pmf_oracle(query(0.5, 0.5, t, n)) - want) <= 1e-13


@pytest.mark.parametrize("q, lam", [(0.3, 0.1), (0.7, 0.3), (0.5, 0.5)])
def test_series_route_matches_resummed(q, lam):
    for t in range(0, 25, 3):
        for n in range(0, min(t, 6) + 1):
            s = count_pmf_result(query(q, lam, t, n), "series")
            r = count_pmf_result(query(q, lam, t, n), "resummed")
            assert s.method == "series" and r.method == "resummed"
            assert abs(s.value - r.value) <= 1e-12 * (1 + r.value) + s.error_estimate


def test_series_route_flags_cancellation():
    with pytest.raises(CancellationError):
        count_pmf_result(query(0.9, 0.9, 200, 1), "series")
    # the default route is unaffected
    assert 0 < count_pmf_exact(query(0.9, 0.9, 200, 1)) < 1


def test_unknown_method():
    with pytest.raises(DomainError):
        count_pmf_result(query(0.5, 0.5, 3, 1), "magic")


def test_renewal_count_pmf_on_deterministic_steps():
    pmf = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]  # every wait is exactly 2
    assert renewal_count_pmf(pmf, 6, 3) == 1.0
    assert renewal_count_pmf(pmf, 5, 2) == 1.0
    assert renewal_count_pmf(pmf, 5, 3) == 0.0
    with pytest.raises(DomainError):
        renewal_count_pmf(pmf, 9, 1)


# --- tables ---------------------------------------------------------------


def test_table_at_zero():
    tbl = count_table(ProcessParams(0.5, 0.5), 0, 0)
    assert tbl.probs == (1.0,) and tbl.tail_mass == 0.0 and tbl.n_max == 0


def test_table_q1_binomial():
    tbl = count_table(ProcessParams(1.0, 0.5), 8, 8)
    for n, v in enumerate(tbl.probs):
        assert abs(v - binom(8, n, 1 / 3)) <= 1e-12
    assert abs(tbl.tail_mass) <= 1e-12


def test_table_normalization_heavy_case():
    tbl = count_table(ProcessParams(0.5, 0.9), 30, 30)
    assert abs(math.fsum(tbl.probs) - 1.0) <= 1e-9
    assert all(p >= 0 for p in tbl.probs)
    assert 0 <= tbl.tail_mass <= 1e-9


def test_table_partial_has_tail():
    tbl = count_table(ProcessParams(0.7, 0.6), 20, 3)
    assert tbl.tail_mass > 0.01
    assert abs(math.fsum(tbl.probs) + tbl.tail_mass - 1.0) <= 1e-12


def test_table_parallel_identical():
    p = ProcessParams(0.35, 0.75)
    a = count_table(p, 40, 40, workers=1)
    b = count_table(p, 40, 40, workers=4)
    assert a == b


# --- generating function --------------------------------------------------


def test_gf_examples():
    lhs, rhs = count_gf_check(ProcessParams(0.6, 0.4), 0, 0.0, 10)
    assert lhs == 1.0 and rhs == 1.0
    lhs, rhs = count_gf_check(ProcessParams(1.0, 0.5), 1, 0.5, 200)
    assert abs(lhs - rhs) <= 1e-8
    lhs, rhs = count_gf_check(ProcessParams(0.7, 0.4), 2, 0.6, 300)
    assert abs(lhs - rhs) <= gf_tail_allowance(0.6, 300) + 1e-12 * rhs


def test_gf_closed_q1():
    # for q = 1, H_n(z) = (p z)^n / (1 - (1-p) z)^(n+1) with p = lam/(1+lam), scaled
    lam, z = 0.5, 0.3
    p = lam / (1 + lam)
    for n in range(4):
        want = (p * z) ** n / (1 - (1 - p) * z) ** (n + 1)
        assert count_gf_closed(ProcessParams(1.0, lam), n, z) == pytest.approx(want, rel=1e-14)


def test_gf_domain():
    with pytest.raises(DomainError):
        count_gf_check(ProcessParams(0.5, 0.5), 0, 0.96, 10)
    with pytest.raises(DomainError):
        count_gf_closed(ProcessParams(0.5, 0.5), 0, 1.0)
