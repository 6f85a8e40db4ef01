"""Sibuya steps and the subordinated waiting time.

Replacing the unit steps of the q = 1 process by Sibuya jumps gives a
waiting time with PGF ``G_1(S_q(z)) = lam (1 - (1-z)^q) / ((1-z)^q + lam)``.
Same denominator as the renewal law, different numerator, so the two models
coincide only at ``q = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import DomainError
from .mittagleffler import ProcessParams, SeriesControl, sibuya_coefficients
from .renewal import WaitingTimeDist, wt_pgf_closed, wt_pmf_array

__all__ = [
    "SibuyaDist",
    "ModelComparison",
    "sibuya_pmf",
    "sibuya_pmf_array",
    "sibuya_survival",
    "sibuya_pgf",
    "sub_wt_pgf",
    "sub_wt_pmf",
    "sub_wt_pmf_array",
    "compare_models",
]


@dataclass(frozen=True)
class SibuyaDist:
    """Sibuya law on ``{1, 2, ...}``; ``q = 1`` is the point mass at 1."""

    q: float

    def __post_init__(self) -> None:
        if not 0.0 < self.q <= 1.0:
            raise DomainError(f"Sibuya parameter must lie in (0, 1], got {self.q}")


# beyond this the gamma-ratio form is both faster and as accurate
_PRODUCT_MAX_K = 1 << 16


def _check_k(k) -> int:
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k!r}")
    return int(k)


def sibuya_pmf_array(d: SibuyaDist, k_max: int) -> np.ndarray:
    """``P(X = k)`` for ``k = 0..k_max`` (entry 0 is 0).

    Built by ``P(1) = q``, ``P(k+1) = P(k) (k - q) / (k + 1)``.
    """
    return sibuya_coefficients(d.q, k_max + 1)


def sibuya_pmf(d: SibuyaDist, k: int) -> float:
    k = _check_k(k)
    return float(sibuya_pmf_array(d, k)[k])


def sibuya_survival(d: SibuyaDist, k: int) -> float:
    """``P(X > k) = prod_{j<=k} (1 - q/j) = Gamma(k+1-q) / (Gamma(1-q) Gamma(k+1))``."""
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a non-negative integer, got {k!r}")
    if k == 0:
        return 1.0
    if d.q == 1.0:
        return 0.0
    k = int(k)
    if k <= _PRODUCT_MAX_K:
        j = np.arange(1, k + 1, dtype=float)
        return float(np.exp(np.log1p(-d.q / j).sum()))
    return float(special.poch(k + 1.0, -d.q) / special.gamma(1.0 - d.q))


def sibuya_pgf(d: SibuyaDist, z: float) -> float:
    """``S_q(z) = 1 - (1-z)^q`` on ``[-1, 1]``."""
    if not -1.0 <= z <= 1.0:
        raise DomainError(f"z must lie in [-1, 1], got {z}")
    return 1.0 - (1.0 - z) ** d.q


def sub_wt_pgf(params: ProcessParams, z: float) -> float:
    """``lam (1 - (1-z)^q) / ((1-z)^q + lam)``, the subordinated waiting-time PGF."""
    if not -1.0 <= z <= 1.0:
        raise DomainError(f"z must lie in [-1, 1], got {z}")
    w = (1.0 - z) ** params.q
    return params.lam * (1.0 - w) / (w + params.lam)


@lru_cache(maxsize=32)
def _sub_pmf_cached(q: float, lam: float, u_max: int) -> np.ndarray:
    p = lam / (1.0 + lam)
    sib = sibuya_coefficients(q, u_max + 1)
    power = sib.copy()
    acc = np.zeros(u_max + 1)
    weight = p
    # the n-fold Sibuya sum is >= n, so n = u_max is the last power that matters
    for n in range(1, u_max + 1):
        acc += weight * power
        weight *= 1.0 - p
        power = np.convolve(power, sib)[: u_max + 1]
    acc.setflags(write=False)
    return acc


def sub_wt_pmf_array(params: ProcessParams, u_max: int) -> np.ndarray:
    """Subordinated waiting-time PMF for ``u = 0..u_max`` (entry 0 is 0).

    Geometric mixture of Sibuya convolution powers:
    ``sum_{n=1}^{u} p (1-p)^(n-1) P(X_1 + ... + X_n = u)``, ``p = lam/(1+lam)``.
    """
    if u_max < 1:
        raise DomainError("u_max must be >= 1")
    return _sub_pmf_cached(params.q, params.lam, int(u_max))


def sub_wt_pmf(params: ProcessParams, u: int, ctl: SeriesControl | None = None) -> float:
    # ctl is accepted for signature parity; the mixture is a finite sum
    u = _check_k(u)
    return float(sub_wt_pmf_array(params, u)[u])


@dataclass(frozen=True)
class ModelComparison:
    params: ProcessParams
    rows: tuple[tuple[int, float, float, float], ...]  # (u, renewal, subordinated, |diff|)
    pgf_rows: tuple[tuple[float, float, float], ...]  # (z, renewal, subordinated)
    max_discrepancy: float
    gap_at_one: float
    threshold: float

    @property
    def coincide(self) -> bool:
        return self.max_discrepancy <= self.threshold

    @property
    def bifurcated(self) -> bool:
        return self.gap_at_one > self.threshold


DEFAULT_Z_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


def compare_models(
    params: ProcessParams,
    u_max: int,
    ctl: SeriesControl | None = None,
    z_grid=DEFAULT_Z_GRID,
    threshold: float = 1e-12,
) -> ModelComparison:
    """Tabulate renewal vs subordinated waiting-time PMFs and PGFs.

    At ``q = 1`` every discrepancy is rounding-level; for ``q < 1`` the two
    laws already differ at ``u = 1`` by ``lam (1 - q) / (1 + lam)``.
    """
    ctl = ctl or SeriesControl()
    ren = wt_pmf_array(WaitingTimeDist(params, ctl), u_max)
    sub = sub_wt_pmf_array(params, u_max)
    diff = np.abs(ren - sub)
    rows = tuple(
        (u, float(ren[u]), float(sub[u]), float(diff[u])) for u in range(1, u_max + 1)
    )
    d = WaitingTimeDist(params, ctl)
    pgf_rows = tuple((float(z), wt_pgf_closed(d, z), sub_wt_pgf(params, z)) for z in z_grid)
    max_disc = max(float(diff[1:].max()), max((abs(a - b) for _, a, b in pgf_rows), default=0.0))
    return ModelComparison(params, rows, pgf_rows, max_disc, float(diff[1]), threshold)

