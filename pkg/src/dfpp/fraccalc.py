"""Discrete fractional calculus on the integer grid.

Rising factorials, generalized binomial coefficients ``hhat_alpha(x)``,
backward (nabla) differences and the fractional sums and differences built
from them.  Gamma ratios are carried as :class:`SignedLogValue` so that they
neither overflow nor lose their sign when a gamma argument is negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "SignedLogValue",
    "GridFunction",
    "rising_factorial",
    "log_rising_large",
    "gbc",
    "hhat",
    "hhat_array",
    "log_hhat_int",
    "nabla",
    "fractional_sum",
    "fractional_difference_rl",
    "fractional_difference_caputo",
]

# math.gamma is exact to a few ulp below this argument and overflows above it.
_GAMMA_DIRECT_MAX = 170.0
_TINY = 1e-300


def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0.0 and v == math.floor(v)


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@dataclass(frozen=True)
class SignedLogValue:
    """A real number stored as ``sign * exp(log_abs + log_lo)``.

    ``sign`` is one of -1, 0, +1; the log fields are ignored when
    ``sign == 0``.  ``log_lo`` is a tiny low-order correction to ``log_abs``
    (an unevaluated double-double sum), so a value survives the trip through
    log space to within a few ulp even when ``|log_abs|`` is in the hundreds.
    """

    sign: int
    log_abs: float = -math.inf
    log_lo: float = 0.0

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")

    @classmethod
    def zero(cls) -> SignedLogValue:
        return cls(0, -math.inf)

    @classmethod
    def one(cls) -> SignedLogValue:
        return cls(1, 0.0)

    @classmethod
    def from_real(cls, value: float) -> SignedLogValue:
        if value == 0.0:
            return cls.zero()
        if not math.isfinite(value):
            raise DomainError(f"cannot represent non-finite value {value!r}")
        mag = abs(value)
        hi = math.log(mag)
        # whatever exp(hi) misses of mag goes into the low word
        lo = math.log(mag / math.exp(hi)) if mag >= 1e-300 else 0.0
        return cls(1 if value > 0 else -1, hi, lo)

    def to_real(self) -> float:
        """Convert back to a float; raises ``OverflowError`` instead of returning inf."""
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs) * math.exp(self.log_lo)

    def __float__(self) -> float:
        return self.to_real()

    def __neg__(self) -> SignedLogValue:
        return SignedLogValue(-self.sign, self.log_abs, self.log_lo)

    def _combine(self, hi: float, err: float, lo: float, sign: int) -> SignedLogValue:
        if not math.isfinite(hi):
            return SignedLogValue(sign, hi)
        return SignedLogValue(sign, hi, err + lo)

    def __mul__(self, other: SignedLogValue) -> SignedLogValue:
        if self.sign == 0 or other.sign == 0:
            return SignedLogValue.zero()
        hi, err = _two_sum(self.log_abs, other.log_abs)
        return self._combine(hi, err, self.log_lo + other.log_lo, self.sign * other.sign)

    def __truediv__(self, other: SignedLogValue) -> SignedLogValue:
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero SignedLogValue")
        if self.sign == 0:
            return SignedLogValue.zero()
        hi, err = _two_sum(self.log_abs, -other.log_abs)
        return self._combine(hi, err, self.log_lo - other.log_lo, self.sign * other.sign)


@dataclass(frozen=True)
class GridFunction:
    """Samples of ``f`` on consecutive integers: ``values[i] == f(start + i)``."""

    start: int
    values: tuple[float, ...]

    def __init__(self, start: int, values: Sequence[float]) -> None:
        vals = tuple(float(v) for v in values)
        if not vals:
            raise DomainError("a GridFunction needs at least one value")
        object.__setattr__(self, "start", int(start))
        object.__setattr__(self, "values", vals)

    @property
    def end(self) -> int:
        return self.start + len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def __call__(self, t: int) -> float:
        if not self.start <= t <= self.end:
            raise DomainError(f"t={t} outside grid [{self.start}, {self.end}]")
        return self.values[t - self.start]

    @classmethod
    def sample(cls, func, start: int, stop: int) -> GridFunction:
        """Tabulate ``func`` on ``start..stop`` inclusive."""
        return cls(start, [func(t) for t in range(start, stop + 1)])


def _log_gamma_signed(x: float) -> tuple[int, float]:
    return int(special.gammasgn(x)), float(special.gammaln(x))


# Stirling coefficients B_2k / (2k (2k-1)), k = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
# both gamma arguments at least this large -> Stirling difference (error < 1e-20)
_STIRLING_MIN = 32.0


def _stirling_tail(z):
    inv = 1.0 / z
    inv2 = inv * inv
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * inv2 + c
    return acc * inv


def log_rising_large(x, alpha):
    """``log(Gamma(x + alpha) / Gamma(x))`` for ``x, x + alpha >= 32``.

    Differencing two log-gammas loses ``eps * log Gamma(x)`` in absolute
    terms; subtracting the Stirling expansions analytically and using
    ``log1p`` keeps the error at a few ulp of the result.  Works on arrays.
    """
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    y = x + alpha
    main = (x - 0.5) * np.log1p(alpha / x) + alpha * np.log(y) - alpha
    return main + (_stirling_tail(y) - _stirling_tail(x))


def rising_factorial(x: float, alpha: float) -> SignedLogValue:
    """``Gamma(x + alpha) / Gamma(x)`` as a :class:`SignedLogValue`."""
    x = float(x)
    alpha = float(alpha)
    if _is_nonpositive_integer(x) or _is_nonpositive_integer(x + alpha):
        raise DomainError(f"rising factorial undefined at x={x}, alpha={alpha}")
    if alpha == 0.0:
        return SignedLogValue.one()
    if min(x, x + alpha) >= _STIRLING_MIN:
        return SignedLogValue(1, float(log_rising_large(x, alpha)))
    direct = float(special.poch(x, alpha))
    if math.isfinite(direct) and abs(direct) >= _TINY:
        return SignedLogValue.from_real(direct)
    s_num, l_num = _log_gamma_signed(x + alpha)
    s_den, l_den = _log_gamma_signed(x)
    return SignedLogValue(s_num * s_den, l_num - l_den)


def _gamma_signed_log(x: float) -> SignedLogValue:
    if abs(x) <= _GAMMA_DIRECT_MAX:
        return SignedLogValue.from_real(math.gamma(x))
    s, lg = _log_gamma_signed(x)
    return SignedLogValue(s, lg)


def gbc(alpha: float, x: float) -> SignedLogValue:
    """Generalized binomial coefficient ``Gamma(x+alpha) / (Gamma(alpha+1) Gamma(x))``.

    At ``x = 0`` the ``1/Gamma(0) = 0`` limit is used: the result is 1 for
    ``alpha == 0`` and 0 otherwise.  Every other pole raises
    :class:`~dfpp.errors.DomainError`.
    """
    alpha = float(alpha)
    x = float(x)
    if _is_nonpositive_integer(alpha + 1.0):
        raise DomainError(f"hhat undefined for alpha={alpha} (negative integer)")
    if x == 0.0:
        return SignedLogValue.one() if alpha == 0.0 else SignedLogValue.zero()
    if alpha == 0.0:
        if _is_nonpositive_integer(x):
            raise DomainError(f"hhat undefined at x={x}")
        return SignedLogValue.one()
    return rising_factorial(x, alpha) / _gamma_signed_log(alpha + 1.0)


def hhat(alpha: float, x: float) -> float:
    """Plain-float :func:`gbc`; raises ``OverflowError`` rather than returning inf."""
    return gbc(alpha, x).to_real()


def hhat_array(alpha: float, xs) -> np.ndarray:
    """:func:`hhat` at a fixed order over many arguments."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty_like(xs)
    with np.errstate(all="ignore"):
        direct = special.poch(xs, alpha) / special.gamma(alpha + 1.0)
        large = (xs >= _STIRLING_MIN) & (xs + alpha >= _STIRLING_MIN)
        if np.any(large) and abs(alpha) <= _GAMMA_DIRECT_MAX - 1.0:
            direct[large] = np.exp(log_rising_large(xs[large], alpha)) / special.gamma(alpha + 1.0)
    for i, (x, d) in enumerate(zip(xs.flat, direct.flat)):
        # the vectorized ratio is only trusted away from poles and overflow
        if x > 0.0 and x + alpha > 0.0 and math.isfinite(d) and abs(d) >= _TINY:
            out.flat[i] = d
        else:
            out.flat[i] = hhat(alpha, x)
    return out


# Above this the per-factor log1p sum costs more than it is worth.
_LOG1P_SUM_MAX_T = 4096


def log_hhat_int(alpha, t: int) -> np.ndarray:
    """``log hhat_alpha(t)`` for integer ``t >= 1`` and ``alpha > -1``.

    Uses ``hhat_alpha(t) = prod_{k=1}^{t-1} (1 + alpha/k)`` so that the
    rounding error scales with the size of the result rather than with
    ``log Gamma(t + alpha)``.
    """
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    if t < 1:
        raise DomainError(f"log_hhat_int needs t >= 1, got {t}")
    if np.any(a <= -1.0):
        raise DomainError("log_hhat_int needs alpha > -1")
    if t == 1:
        return np.zeros_like(a)
    if t - 1 > _LOG1P_SUM_MAX_T:
        return log_rising_large(float(t), a) - special.gammaln(a + 1.0)
    k = np.arange(1, t, dtype=float)
    out = np.empty_like(a)
    # chunk rows so the (len(a), t-1) temporary stays small
    step = max(1, 2**20 // (t - 1))
    for lo in range(0, a.size, step):
        blk = a[lo : lo + step]
        out[lo : lo + step] = np.log1p(blk[:, None] / k[None, :]).sum(axis=1)
    return out


def nabla(f: GridFunction) -> GridFunction:
    """Backward difference ``f(t) - f(t-1)``, defined from ``start + 1``."""
    if len(f) < 2:
        raise DomainError("nabla needs at least two samples")
    v = f.values
    return GridFunction(f.start + 1, [v[i] - v[i - 1] for i in range(1, len(v))])


def _nabla_power_at(g, m: int, t: int) -> float:
    terms = [(-1) ** j * math.comb(m, j) * g(t - j) for j in range(m + 1)]
    return math.fsum(terms)


def fractional_sum(f: GridFunction, alpha: float, t: int) -> float:
    """Fractional sum of order ``alpha > 0`` from ``f.start`` up to ``t``.

    ``sum_{u=a}^{t} hhat_{alpha-1}(t-u+1) f(u)``; for integer ``alpha`` this
    is the ``alpha``-fold iterated running sum.
    """
    if alpha <= 0:
        raise DomainError(f"fractional_sum needs alpha > 0, got {alpha}")
    if not f.start <= t <= f.end:
        raise DomainError(f"t={t} outside grid [{f.start}, {f.end}]")
    n = t - f.start + 1
    # u runs a..t, so the kernel argument t-u+1 runs n..1
    weights = hhat_array(alpha - 1.0, np.arange(n, 0, -1, dtype=float))
    return math.fsum(w * v for w, v in zip(weights, f.values[:n]))


def _order_split(alpha: float) -> int:
    if alpha <= 0:
        raise DomainError(f"fractional difference needs alpha > 0, got {alpha}")
    return math.ceil(alpha)


def fractional_difference_rl(f: GridFunction, alpha: float, t: int) -> float:
    """Riemann-Liouville fractional difference: ``nabla^m`` of the ``(m - alpha)`` sum."""
    m = _order_split(alpha)
    if t - m < f.start or t > f.end:
        raise DomainError(
            f"grid [{f.start}, {f.end}] too short for order {alpha} at t={t}"
        )
    if m == alpha:
        return _nabla_power_at(f, m, t)
    return _nabla_power_at(lambda s: fractional_sum(f, m - alpha, s), m, t)


def fractional_difference_caputo(f: GridFunction, alpha: float, t: int) -> float:
    """Caputo fractional difference: the ``(m - alpha)`` sum of ``nabla^m f``.

    The inner difference is defined from ``f.start + m`` on, which is where
    the outer sum starts.
    """
    m = _order_split(alpha)
    if t - m < f.start or t > f.end:
        raise DomainError(
            f"grid [{f.start}, {f.end}] too short for order {alpha} at t={t}"
        )
    g = f
    for _ in range(m):
        g = nabla(g)
    if m == alpha:
        return g(t)
    return fractional_sum(g, m - alpha, t)
