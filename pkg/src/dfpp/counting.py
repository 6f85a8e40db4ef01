"""Distribution of the event count ``N(t) = max{n : S_n <= t}``.

Three routes to ``P(N(t) = n)``:

* ``series`` -- the closed-form alternating series in ``m``,
  ``lam^n sum_m C(n+m, n) (-lam)^m [hhat_{q(n+m)}(t-n+1) + lam hhat_{q(n+m+1)-1}(t-n+1)]``,
  with terms assembled in log space;
* ``resummed`` -- the same generating function
  ``H_n(z) = lam^n z^n ((1-z)^(q-1) + lam) ((1-z)^q + lam)^(-(n+1))`` expanded
  around ``1 + lam`` instead of around ``(1-z)^(-q)``.  Writing
  ``(1-z)^q + lam = (1 + lam) - sigma(z)`` with ``sigma`` the Sibuya PGF,
  every coefficient is a sum of positive numbers, so nothing cancels;
* ``oracle`` -- ``P(S_n <= t) - P(S_{n+1} <= t)`` from explicit convolution
  powers of the waiting-time PMF, O(n t^2), meant for checking.

``auto`` is the resummed form; the series stays available as ``method="series"``
and raises :class:`~dfpp.errors.CancellationError` where it cannot be trusted.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, NegativeProbabilityError
from .fraccalc import log_hhat_int
from .mittagleffler import (
    ProcessParams,
    SeriesControl,
    SeriesResult,
    accumulate_series,
    binomial_series_coefficients,
    check_cancellation,
    sibuya_coefficients,
)
from .renewal import WaitingTimeDist, wt_pmf_array

__all__ = [
    "CountPmfQuery",
    "PmfTable",
    "count_pmf_exact",
    "count_pmf_result",
    "count_pmf_oracle",
    "renewal_count_pmf",
    "count_table",
    "count_gf_check",
    "count_gf_closed",
    "gf_tail_allowance",
]

_METHODS = ("auto", "series", "resummed")


@dataclass(frozen=True)
class CountPmfQuery:
    params: ProcessParams
    t: int
    n: int
    ctl: SeriesControl = field(default_factory=SeriesControl)

    def __post_init__(self) -> None:
        for name in ("t", "n"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise DomainError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))


@dataclass(frozen=True)
class PmfTable:
    """``P(N(t) = n)`` for ``n = 0..n_max`` with the mass left beyond ``n_max``."""

    params: ProcessParams
    t: int
    probs: tuple[float, ...]
    tail_mass: float
    diagnostics: tuple[SeriesResult, ...]

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1


def _clamp(v: float, ctl: SeriesControl, what: str) -> float:
    if v < 0.0:
        if v < -10.0 * ctl.rel_tol:
            raise NegativeProbabilityError(f"{what} = {v!r}", value=v)
        return 0.0
    return v


def _series(query: CountPmfQuery) -> SeriesResult:
    q, lam = query.params.q, query.params.lam
    n, t, ctl = query.n, query.t, query.ctl
    big_l = t - n + 1
    log_lam = math.log(lam)

    def chunks():
        start = 0
        while True:
            m = np.arange(start, start + 256, dtype=float)
            log_binom = log_hhat_int(m, n + 1)  # C(n+m, n)
            first = log_hhat_int(q * (n + m), big_l)
            second = log_lam + log_hhat_int(q * (n + m + 1.0) - 1.0, big_l)
            logs = (n + m) * log_lam + log_binom + np.logaddexp(first, second)
            with np.errstate(over="ignore"):
                terms = np.exp(logs)
            terms[(m % 2) == 1] *= -1.0
            yield terms
            start += 256

    what = f"P(N({t}) = {n})"
    return check_cancellation(accumulate_series(chunks(), ctl, what), what)


@lru_cache(maxsize=32)
def _inverse_denominator(q: float, lam: float, length: int) -> np.ndarray:
    """Coefficients of ``1 / ((1-z)^q + lam)``; all positive."""
    s = sibuya_coefficients(q, length + 1)
    s_rev = np.ascontiguousarray(s[::-1])  # s_rev[length - i] == s[i]
    out = np.empty(length)
    out[0] = 1.0 / (1.0 + lam)
    for k in range(1, length):
        out[k] = np.dot(out[:k], s_rev[length - k : length]) / (1.0 + lam)
    out.setflags(write=False)
    return out


def _numerator(q: float, lam: float, length: int) -> np.ndarray:
    e = binomial_series_coefficients(1.0 - q, length)  # (1-z)^(q-1)
    e[0] += lam
    return e


@lru_cache(maxsize=32)
def _resummed_column(q: float, lam: float, n: int, length: int) -> np.ndarray:
    """``P(N(n + k) = n)`` for ``k = 0..length-1``."""
    inv = _inverse_denominator(q, lam, length)
    acc = _numerator(q, lam, length)
    for _ in range(n + 1):
        acc = np.convolve(acc, inv)[:length]
    out = lam**n * acc
    out.setflags(write=False)
    return out


def _padded(n: int) -> int:
    return max(32, 1 << (n - 1).bit_length())


def _resummed(query: CountPmfQuery) -> SeriesResult:
    q, lam = query.params.q, query.params.lam
    k = query.t - query.n
    col = _resummed_column(q, lam, query.n, _padded(k + 1))
    v = float(col[k])
    return SeriesResult(v, k + 1, v, True, method="resummed")


def count_pmf_result(query: CountPmfQuery, method: str = "auto") -> SeriesResult:
    """:func:`count_pmf_exact` with its :class:`SeriesResult` diagnostics."""
    if method not in _METHODS:
        raise DomainError(f"unknown method {method!r}")
    if query.t < query.n:
        return SeriesResult(0.0, 0, 0.0, True, method="support")
    res = _series(query) if method == "series" else _resummed(query)
    v = _clamp(res.value, query.ctl, f"P(N({query.t}) = {query.n})")
    if v != res.value:
        res = SeriesResult(v, res.terms_used, res.max_partial_abs, res.converged, res.method)
    return res


def count_pmf_exact(query: CountPmfQuery, method: str = "auto") -> float:
    """``P(N(t) = n)``; exactly 0 when ``t < n``."""
    return count_pmf_result(query, method).value


def renewal_count_pmf(pmf: np.ndarray, t: int, n: int) -> float:
    """``P(S_n <= t) - P(S_{n+1} <= t)`` for i.i.d. waiting times with PMF ``pmf``.

    ``pmf[u]`` is ``P(T = u)`` for ``u = 0..t`` (at least); convolution powers
    are truncated at ``t``.
    """
    pmf = np.asarray(pmf, dtype=float)[: t + 1]
    if pmf.size < t + 1:
        raise DomainError(f"pmf must cover 0..{t}")
    if n == 0:
        below_n = 1.0
        power = pmf
    else:
        power = pmf
        for _ in range(n - 1):
            power = np.convolve(power, pmf)[: t + 1]
        below_n = math.fsum(power)
        power = np.convolve(power, pmf)[: t + 1]
    below_next = math.fsum(power)
    return below_n - below_next


def count_pmf_oracle(query: CountPmfQuery) -> float:
    """Brute-force ``P(N(t) = n)`` from convolution powers of the waiting-time PMF."""
    if query.t < query.n:
        return 0.0
    if query.t == 0:
        return 1.0
    pmf = wt_pmf_array(WaitingTimeDist(query.params, query.ctl), query.t)
    v = renewal_count_pmf(pmf, query.t, query.n)
    return _clamp(v, query.ctl, f"oracle P(N({query.t}) = {query.n})")


def count_table(
    params: ProcessParams,
    t: int,
    n_max: int,
    ctl: SeriesControl | None = None,
    method: str = "auto",
    workers: int = 1,
) -> PmfTable:
    """``P(N(t) = n)`` for ``n = 0..n_max``; ``tail_mass = 1 - sum(probs)``."""
    ctl = ctl or SeriesControl()
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    queries = [CountPmfQuery(params, t, n, ctl) for n in range(n_max + 1)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda qy: count_pmf_result(qy, method), queries))
    else:
        results = [count_pmf_result(qy, method) for qy in queries]
    probs = tuple(r.value for r in results)
    tail = 1.0 - math.fsum(probs)
    if abs(tail) <= 10.0 * ctl.rel_tol and tail < 0.0:
        tail = 0.0
    return PmfTable(params, int(t), probs, tail, tuple(results))


def count_gf_closed(params: ProcessParams, n: int, z: float) -> float:
    """``H_n(z) = lam^n z^n ((1-z)^(q-1) + lam) / ((1-z)^q + lam)^(n+1)``."""
    q, lam = params.q, params.lam
    if not 0.0 <= z < 1.0:
        raise DomainError(f"z must lie in [0, 1), got {z}")
    w = 1.0 - z
    return (lam * z) ** n * (w ** (q - 1.0) + lam) / (w**q + lam) ** (n + 1)


def gf_tail_allowance(z: float, t_max: int) -> float:
    """Bound ``z^(t_max+1) / (1-z)`` on the omitted part of ``sum_t P(N(t)=n) z^t``."""
    return z ** (t_max + 1) / (1.0 - z)


def count_gf_check(
    params: ProcessParams,
    n: int,
    z: float,
    t_max: int,
    ctl: SeriesControl | None = None,
    method: str = "auto",
) -> tuple[float, float]:
    """Truncated ``sum_{t<=t_max} P(N(t)=n) z^t`` against the closed form ``H_n(z)``."""
    ctl = ctl or SeriesControl()
    if not 0.0 <= z <= 0.95:
        raise DomainError(f"z must lie in [0, 0.95], got {z}")
    terms = [
        count_pmf_exact(CountPmfQuery(params, t, n, ctl), method) * z**t
        for t in range(n, t_max + 1)
    ]
    return math.fsum(terms), count_gf_closed(params, n, z)
