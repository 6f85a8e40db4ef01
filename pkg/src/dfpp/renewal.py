"""Waiting-time law of the discrete fractional Poisson process.

``P(T > t) = F_{q,-lam}(t)``; the PMF is the survival difference and the PGF
is ``lam z / ((1-z)^q + lam)``.  For ``q = 1`` this is the geometric law with
success probability ``lam / (1 + lam)``; for ``q < 1`` the mean is infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NegativeProbabilityError
from .fraccalc import log_hhat_int
from .mittagleffler import (
    ProcessParams,
    SeriesControl,
    SeriesResult,
    accumulate_series,
    check_cancellation,
    ml_survival_result,
    survival_array,
)

__all__ = [
    "WaitingTimeDist",
    "wt_pmf",
    "wt_pmf_series",
    "wt_pmf_array",
    "wt_cdf",
    "wt_pgf_closed",
    "wt_pgf_derivative",
    "wt_pgf_series",
    "wt_partial_mean",
    "wt_partial_mean_lower",
]

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class WaitingTimeDist:
    params: ProcessParams
    ctl: SeriesControl = field(default_factory=SeriesControl)

    @classmethod
    def of(cls, q: float, lam: float, ctl: SeriesControl | None = None) -> WaitingTimeDist:
        return cls(ProcessParams(q, lam), ctl or SeriesControl())


def _clamp_probability(v: float, ctl: SeriesControl, what: str) -> float:
    if v < 0.0:
        if v < -10.0 * ctl.rel_tol:
            raise NegativeProbabilityError(f"{what} = {v!r}", value=v)
        return 0.0
    return v


def wt_pmf(d: WaitingTimeDist, u: int, method: str = "auto") -> float:
    """``P(T = u) = P(T > u-1) - P(T > u)`` for ``u >= 1``.

    Both survival values come from the same evaluation route so the
    difference does not mix rounding behaviours.
    """
    if int(u) != u or u < 1:
        raise DomainError(f"u must be an integer >= 1, got {u!r}")
    u = int(u)
    hi = ml_survival_result(d.params, u - 1, d.ctl, method)
    lo = ml_survival_result(d.params, u, d.ctl, method)
    return _clamp_probability(hi.value - lo.value, d.ctl, f"P(T = {u})")


def wt_pmf_series(d: WaitingTimeDist, u: int) -> SeriesResult:
    """Cross-check route: ``P(T = u) = -sum_{m>=1} hhat_{qm-1}(u) (-lam)^m``."""
    if int(u) != u or u < 1:
        raise DomainError(f"u must be an integer >= 1, got {u!r}")
    u = int(u)
    q, lam = d.params.q, d.params.lam
    log_lam = math.log(lam)

    def chunks():
        start = 1
        while True:
            m = np.arange(start, start + 256, dtype=float)
            terms = np.exp(log_hhat_int(q * m - 1.0, u) + m * log_lam)
            # -(-lam)^m: positive for odd m
            terms[(m % 2) == 0] *= -1.0
            yield terms
            start += 256

    res = accumulate_series(chunks(), d.ctl, what=f"P(T = {u}) series")
    return check_cancellation(res, f"P(T = {u}) series")


def wt_pmf_array(d: WaitingTimeDist, u_max: int) -> np.ndarray:
    """``P(T = u)`` for ``u = 0..u_max`` (entry 0 is 0), from the survival table."""
    s = survival_array(d.params, u_max)
    pmf = np.empty(u_max + 1)
    pmf[0] = 0.0
    pmf[1:] = s[:-1] - s[1:]
    if pmf.min() < -10.0 * d.ctl.rel_tol:
        raise NegativeProbabilityError("negative waiting-time mass", min=float(pmf.min()))
    np.maximum(pmf, 0.0, out=pmf)
    return pmf


def wt_cdf(d: WaitingTimeDist, t: int, method: str = "auto") -> float:
    return 1.0 - ml_survival_result(d.params, t, d.ctl, method).value


def _check_z(z: float) -> float:
    z = float(z)
    if not -1.0 <= z <= 1.0:
        raise DomainError(f"PGF argument must lie in [-1, 1], got {z}")
    return z


def wt_pgf_closed(d: WaitingTimeDist, z: float) -> float:
    """``E[z^T] = lam z / ((1-z)^q + lam)`` on ``[-1, 1]``."""
    z = _check_z(z)
    q, lam = d.params.q, d.params.lam
    if z == 1.0:
        return 1.0
    return lam * z / ((1.0 - z) ** q + lam)


def wt_pgf_derivative(d: WaitingTimeDist, z: float) -> float:
    """Analytic ``dG/dz`` for ``-1 <= z < 1``."""
    z = _check_z(z)
    if z == 1.0:
        raise DomainError("derivative at z = 1 is the mean; use wt_partial_mean")
    q, lam = d.params.q, d.params.lam
    w = 1.0 - z
    num = lam * w**q + lam * lam + lam * q * z * w ** (q - 1.0)
    return num / (w**q + lam) ** 2


def wt_pgf_series(d: WaitingTimeDist, z: float, u_max: int) -> tuple[float, float]:
    """Truncated ``sum_{u=1}^{u_max} z^u P(T = u)`` and a bound on the remainder.

    The remainder is at most ``z^(u_max+1) / (1-z) * P(T > u_max)``.  The
    returned bound also covers rounding: each PMF entry is a difference of
    two survival values and is off by a few ulp of 1, which after weighting
    by ``z^u`` adds at most ``4 eps z / (1-z)``.
    """
    z = float(z)
    if not 0.0 <= z < 1.0:
        raise DomainError(f"series PGF needs 0 <= z < 1, got {z}")
    if u_max < 1:
        raise DomainError("u_max must be >= 1")
    if z == 0.0:
        return 0.0, 0.0
    pmf = wt_pmf_array(d, u_max)
    powers = z ** np.arange(u_max + 1, dtype=float)
    value = math.fsum(powers[1:] * pmf[1:])
    tail = z ** (u_max + 1) / (1.0 - z) * float(survival_array(d.params, u_max)[u_max])
    rounding = 4.0 * _EPS * z / (1.0 - z) + _EPS * value
    return value, tail + rounding


def wt_partial_mean(d: WaitingTimeDist, t_max: int) -> float:
    """``sum_{u<=t_max} u P(T=u) + t_max P(T > t_max)``, i.e. ``E[min(T, t_max)]``.

    Converges to ``1 + 1/lam`` for ``q = 1`` and grows without bound for
    ``q < 1``.
    """
    if t_max < 1:
        raise DomainError("t_max must be >= 1")
    s = survival_array(d.params, t_max)
    # sum_u u p_u + t S_t telescopes to sum_{u<t} S_u
    return math.fsum(s[:t_max])


def wt_partial_mean_lower(d: WaitingTimeDist, t_max: int) -> float:
    """``sum_{u<=t_max} u P(T=u)`` without the survival correction (a lower bound)."""
    if t_max < 1:
        raise DomainError("t_max must be >= 1")
    pmf = wt_pmf_array(d, t_max)
    return math.fsum(np.arange(t_max + 1, dtype=float) * pmf)
