"""Discrete Mittag-Leffler function ``F_{q,lam}(t) = sum_m hhat_{qm}(t) lam^m``.

Three evaluation routes are provided:

``series``
    The defining power series, summed term by term in log space with
    compensated accumulation.  Exact in principle, but for ``lam < 0`` the
    terms alternate and grow like ``m^(t-1)`` before decaying, so at large
    ``t`` or ``|lam|`` near 1 double precision is wiped out.  The cancellation
    diagnostic reports this and :class:`~dfpp.errors.CancellationError` is
    raised past a hard ratio.

``recurrence``
    The generating function ``sum_{t>=1} F(t) z^(t-1) =
    (1-z)^(q-1) / ((1-lam) - sigma(z))`` with ``sigma(z) = 1 - (1-z)^q`` has
    only non-negative coefficients on both sides, which gives a recurrence for
    ``F(1), F(2), ...`` in which every term is positive.  O(t^2), no
    cancellation, for either sign of ``lam``.

``integral``
    For ``lam < 0`` and ``q < 1``, ``F_{q,lam}(t) = int_0^1 (1-y)^t nu(dy)``
    with an explicit positive density ``nu``; one quadrature per ``t``, used
    for single far-tail values where a table would be too long.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy import integrate

from .errors import CancellationError, ConvergenceError, DomainError, RangeError
from .fraccalc import log_hhat_int

__all__ = [
    "ProcessParams",
    "SeriesControl",
    "SeriesResult",
    "CANCELLATION_LIMIT",
    "accumulate_series",
    "is_well_conditioned",
    "ml_eval",
    "ml_table",
    "ml_survival",
    "ml_survival_result",
    "survival_array",
    "survival_integral",
    "sibuya_coefficients",
    "binomial_series_coefficients",
]

# max_partial_abs / |value| above which a series result is rejected outright.
CANCELLATION_LIMIT = 1e12

_EPS = np.finfo(float).eps
_CHUNK = 256


@dataclass(frozen=True)
class ProcessParams:
    """Fractional order ``q`` in (0, 1] and rate-like ``lam`` in (0, 1)."""

    q: float
    lam: float

    def __post_init__(self) -> None:
        if not 0.0 < self.q <= 1.0:
            raise DomainError(f"q must lie in (0, 1], got {self.q}")
        if not 0.0 < self.lam < 1.0:
            raise DomainError(f"lam must lie in (0, 1), got {self.lam}")

    @property
    def p(self) -> float:
        """Success probability ``lam / (1 + lam)`` of the q = 1 geometric law."""
        return self.lam / (1.0 + self.lam)


@dataclass(frozen=True)
class SeriesControl:
    rel_tol: float = 1e-12
    max_terms: int = 10_000
    consec_small: int = 3

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.max_terms < 1 or self.consec_small < 1:
            raise DomainError("max_terms and consec_small must be >= 1")


@dataclass(frozen=True)
class SeriesResult:
    """Outcome of a truncated series.

    ``max_partial_abs`` is the largest magnitude seen among the terms and the
    running partial sums; divided by ``|value|`` it bounds the digits lost to
    cancellation.  ``method`` records which route produced ``value``.
    """

    value: float
    terms_used: int
    max_partial_abs: float
    converged: bool
    method: str = "series"

    @property
    def cancellation_ratio(self) -> float:
        if self.value == 0.0:
            return math.inf if self.max_partial_abs > 0 else 1.0
        return self.max_partial_abs / abs(self.value)

    @property
    def error_estimate(self) -> float:
        """Rough absolute rounding error of ``value``.

        Terms built as ``exp(log_term)`` carry a relative error proportional
        to ``|log_term|``, so the floor grows with the log of the largest
        magnitude as well as with the number of terms.
        """
        big = self.max_partial_abs
        if big == 0.0:
            return 0.0
        return big * _EPS * (8.0 + abs(math.log(big))) * math.sqrt(max(self.terms_used, 1))


def accumulate_series(
    chunks: Iterator[np.ndarray], ctl: SeriesControl, what: str = "series"
) -> SeriesResult:
    """Sum term chunks with Neumaier compensation and the stopping rule.

    Stops once ``ctl.consec_small`` consecutive terms satisfy
    ``|term| <= rel_tol * (1 + |partial|)`` while the term magnitudes are
    non-increasing, and never before index 2.  When the terms shrink slowly
    the test is applied to the geometric tail bound ``|term| r / (1 - r)``
    (``r`` the latest term ratio) instead of to ``|term|``, so a series
    like ``sum 0.9^m`` is not cut off ten times too early.  Raises ConvergenceError when
    ``ctl.max_terms`` terms are used first.
    """
    s = 0.0
    c = 0.0
    biggest = 0.0
    small_run = 0
    prev_abs = math.inf
    m = 0
    for chunk in chunks:
        for term in chunk.tolist():
            if not math.isfinite(term):
                raise CancellationError(
                    f"{what}: term {m} overflowed", term_index=m
                )
            t_new = s + term
            if abs(s) >= abs(term):
                c += (s - t_new) + term
            else:
                c += (term - t_new) + s
            s = t_new
            partial = s + c
            a = abs(term)
            biggest = max(biggest, a, abs(partial))
            # geometric bound on what the remaining terms can still add
            r = a / prev_abs if prev_abs > 0.0 else (0.0 if a == 0.0 else math.inf)
            tail = a * max(1.0, r / (1.0 - r)) if r < 1.0 else math.inf
            if m >= 2 and a <= prev_abs and tail <= ctl.rel_tol * (1.0 + abs(partial)):
                small_run += 1
            else:
                small_run = 0
            prev_abs = a
            m += 1
            if small_run >= ctl.consec_small:
                return SeriesResult(s + c, m, biggest, True)
            if m >= ctl.max_terms:
                raise ConvergenceError(
                    f"{what}: no convergence within {ctl.max_terms} terms",
                    terms_used=m,
                    partial=s + c,
                    max_partial_abs=biggest,
                )
    # exhausted a finite term stream: exact
    return SeriesResult(s + c, m, biggest, True)


# error_estimate / |value| above which the value is treated as rounding noise
_NOISE_LIMIT = 1e-3


def check_cancellation(res: SeriesResult, what: str) -> SeriesResult:
    """Raise CancellationError when the series lost (nearly) all its digits."""
    noisy = res.error_estimate > _NOISE_LIMIT * abs(res.value)
    if res.cancellation_ratio > CANCELLATION_LIMIT or noisy:
        raise CancellationError(
            f"{what}: cancellation ratio {res.cancellation_ratio:.3g} "
            f"(limit {CANCELLATION_LIMIT:.0e}), estimated error {res.error_estimate:.3g}",
            value=res.value,
            terms_used=res.terms_used,
            max_partial_abs=res.max_partial_abs,
        )
    return res


def is_well_conditioned(res: SeriesResult, ctl: SeriesControl) -> bool:
    """True when the estimated rounding error is below ``rel_tol * |value|``."""
    return res.converged and res.error_estimate <= ctl.rel_tol * abs(res.value)


def _validate_t(t) -> int:
    if isinstance(t, bool) or int(t) != t:
        raise DomainError(f"t must be an integer, got {t!r}")
    t = int(t)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return t


def _ml_chunks(q: float, lam: float, t: int) -> Iterator[np.ndarray]:
    log_lam = math.log(abs(lam))
    alternating = lam < 0
    start = 0
    while True:
        m = np.arange(start, start + _CHUNK, dtype=float)
        logs = log_hhat_int(q * m, t) + m * log_lam
        with np.errstate(over="ignore"):
            terms = np.exp(logs)
        if alternating:
            terms[(m % 2) == 1] *= -1.0
        yield terms
        start += _CHUNK


def ml_eval(q: float, lam: float, t: int, ctl: SeriesControl | None = None) -> SeriesResult:
    """Series evaluation of ``F_{q,lam}(t)`` for ``-1 < lam < 1``.

    ``F(0) = 1``; ``q == 1`` uses the closed form ``(1 - lam)^(-t)``.
    """
    ctl = ctl or SeriesControl()
    t = _validate_t(t)
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    if not -1.0 < lam < 1.0:
        raise DomainError(f"|lam| must be < 1, got {lam}")
    if t == 0 or lam == 0.0:
        return SeriesResult(1.0, 1, 1.0, True)
    if q == 1.0:
        v = (1.0 - lam) ** (-t)
        return SeriesResult(v, 1, v, True, method="closed")
    res = accumulate_series(_ml_chunks(q, lam, t), ctl, what=f"F_{{{q},{lam}}}({t})")
    return check_cancellation(res, f"F_{{{q},{lam}}}({t})")


# ---------------------------------------------------------------------------
# positive-term recurrence


def sibuya_coefficients(q: float, n: int) -> np.ndarray:
    """``s[k] = (-1)^(k-1) C(q, k)`` for ``k = 0..n-1`` (``s[0] = 0``).

    These are the coefficients of ``1 - (1-z)^q``, all non-negative for
    ``0 < q <= 1``.
    """
    s = np.zeros(n)
    if n > 1:
        s[1] = q
        k = np.arange(1, n - 1, dtype=float)
        s[2:] = q * np.cumprod((k - q) / (k + 1.0))
    return s


def binomial_series_coefficients(x: float, n: int) -> np.ndarray:
    """Coefficients ``hhat_k(x)`` of ``(1-z)^(-x)`` for ``k = 0..n-1``."""
    e = np.ones(n)
    if n > 1:
        k = np.arange(1, n, dtype=float)
        e[1:] = np.cumprod((k - 1.0 + x) / k)
    return e


def _padded(n: int) -> int:
    # powers of two keep (length - k) mod 8 fixed, so dot products see the
    # same alignment whatever table length was requested
    return max(64, 1 << (n - 1).bit_length())


@lru_cache(maxsize=64)
def _ml_table_padded(q: float, lam: float, length: int) -> np.ndarray:
    out = np.empty(length)
    out[0] = 1.0
    if q == 1.0:
        out[1:] = (1.0 - lam) ** (-np.arange(1, length, dtype=float))
    else:
        n = length - 1
        e = binomial_series_coefficients(1.0 - q, n)
        s = sibuya_coefficients(q, n + 1)
        s_rev = np.ascontiguousarray(s[::-1])  # s_rev[n - i] == s[i]
        a = out[1:]
        denom = 1.0 - lam
        a[0] = e[0] / denom
        for k in range(1, n):
            # sum_{i=1}^{k} s[i] a[k-i] == dot(a[0:k], s[k..1])
            a[k] = (e[k] + np.dot(a[:k], s_rev[n - k : n])) / denom
    out.setflags(write=False)
    return out


def ml_table(q: float, lam: float, t_max: int) -> np.ndarray:
    """``F_{q,lam}(t)`` for ``t = 0..t_max`` by the positive-term recurrence.

    The returned array is read-only and shared with the cache; entries do not
    depend on ``t_max``.
    """
    t_max = _validate_t(t_max)
    if not 0.0 < q <= 1.0:
        raise DomainError(f"recurrence needs 0 < q <= 1, got {q}")
    if not -1.0 < lam < 1.0:
        raise DomainError(f"|lam| must be < 1, got {lam}")
    return _ml_table_padded(float(q), float(lam), _padded(t_max + 1))[: t_max + 1]


def survival_array(params: ProcessParams, t_max: int) -> np.ndarray:
    """``P(T > t) = F_{q,-lam}(t)`` for ``t = 0..t_max`` (read-only)."""
    return ml_table(params.q, -params.lam, t_max)


_INTEGRAL_LOCK = threading.Lock()


def survival_integral(params: ProcessParams, t: int, rel_tol: float = 1e-13) -> float:
    """``F_{q,-lam}(t)`` by quadrature of its mixture-of-geometrics form.

    With ``v = y^q`` the density becomes bounded and
    ``F = lam sin(q pi)/(q pi) * int_0^1 (1 - v^(1/q))^(t+q-1) /
    |v + lam e^{i q pi} (1 - v^(1/q))^q|^2 dv``.  Accurate to ~1e-13
    relative for ``t >= 1``.
    """
    t = _validate_t(t)
    q, lam = params.q, params.lam
    if q == 1.0:
        return (1.0 + lam) ** (-t)
    if t == 0:
        return 1.0
    rot = complex(math.cos(q * math.pi), math.sin(q * math.pi)) * lam
    expo = t + q - 1.0
    inv_q = 1.0 / q

    def integrand(v: float) -> float:
        y = v**inv_q
        if y >= 1.0:
            return 0.0
        den = abs(v + rot * (1.0 - y) ** q) ** 2
        return math.exp(expo * math.log1p(-y)) / den

    # the mass sits at v ~ t^-q; hand quad those scales as breakpoints
    scale = (1.0 / (t + 1.0)) ** q
    points = sorted({min(0.5, scale * k) for k in (0.1, 1.0, 10.0)})
    with _INTEGRAL_LOCK:  # QUADPACK is not re-entrant
        val, _ = integrate.quad(
            integrand, 0.0, 1.0, points=points, epsabs=0.0, epsrel=rel_tol, limit=500
        )
    return lam * math.sin(q * math.pi) / (q * math.pi) * val


def _clamp_unit(value: float, ctl: SeriesControl, what: str) -> float:
    band = 10.0 * ctl.rel_tol
    if value < 0.0:
        if value < -band:
            raise RangeError(f"{what} = {value!r} below 0", value=value)
        return 0.0
    if value > 1.0:
        if value > 1.0 + band:
            raise RangeError(f"{what} = {value!r} above 1", value=value)
        return 1.0
    return value


def ml_survival_result(
    params: ProcessParams, t: int, ctl: SeriesControl | None = None, method: str = "auto"
) -> SeriesResult:
    """Like :func:`ml_survival` but returns the :class:`SeriesResult` with diagnostics."""
    ctl = ctl or SeriesControl()
    t = _validate_t(t)
    q, lam = params.q, params.lam
    if method not in ("auto", "series", "recurrence", "integral"):
        raise DomainError(f"unknown method {method!r}")
    if t == 0:
        return SeriesResult(1.0, 1, 1.0, True, method="closed")
    if q == 1.0 and method != "series":
        v = (1.0 + lam) ** (-t)
        return SeriesResult(v, 1, v, True, method="closed")
    if method == "series":
        res = ml_eval(q, -lam, t, ctl)
    elif method == "integral":
        v = survival_integral(params, t)
        res = SeriesResult(v, 0, v, True, method="integral")
    else:
        # auto and recurrence: positive terms only, accurate to rounding
        v = float(survival_array(params, t)[t])
        res = SeriesResult(v, t, v, True, method="recurrence")
    clamped = _clamp_unit(res.value, ctl, f"P(T > {t})")
    if clamped != res.value:
        res = SeriesResult(clamped, res.terms_used, res.max_partial_abs, res.converged, res.method)
    return res


def ml_survival(
    params: ProcessParams, t: int, ctl: SeriesControl | None = None, method: str = "auto"
) -> float:
    """Waiting-time survival ``P(T > t) = F_{q,-lam}(t)``.

    ``method="series"`` forces the defining series (and its errors);
    ``"recurrence"`` and ``"integral"`` force the cancellation-free routes;
    ``"auto"`` is the recurrence, which never cancels.
    """
    return ml_survival_result(params, t, ctl, method).value
