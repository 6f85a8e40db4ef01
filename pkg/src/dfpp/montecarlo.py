"""Samplers and a reproducible, parallel Monte Carlo harness.

Randomness comes from numpy's counter-based Philox generator keyed by the
seed.  Path ``i`` owns the counter block ``[i * B, (i + 1) * B)`` of uniforms,
where ``B`` depends only on the horizon and the model, so every path sees the
same numbers no matter how paths are split across workers.

Both models are sampled by inverse CDF.  A path of horizon ``H`` can use at
most ``H`` waiting times (each is >= 1), so draws are censored at ``H + 1``
and only a table of length ``H + 1`` is needed inside the simulator.
"""

from __future__ import annotations

import bisect
import math
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.random import Generator, Philox

from .counting import CountPmfQuery, count_pmf_exact, renewal_count_pmf
from .errors import DomainError, TableOverflowError
from .mittagleffler import ProcessParams, survival_array, survival_integral
from .subordination import SibuyaDist, sibuya_survival, sub_wt_pmf_array

__all__ = [
    "MODELS",
    "MAX_DRAW",
    "SamplerConfig",
    "PathRecord",
    "McEstimate",
    "InverseCdfSampler",
    "waiting_time_sampler",
    "sibuya_sampler",
    "sample_waiting_time",
    "sample_sibuya",
    "path_uniforms",
    "simulate_counts",
    "simulate_paths",
    "mc_count_estimate",
    "mc_first_wait_estimate",
    "mc_compare",
]

MODELS = ("renewal", "subordinated")
# largest value an inverse-CDF search may return
MAX_DRAW = 2**31
# paths per work unit; fixed so chunking never depends on the worker count
_CHUNK_PATHS = 1 << 15


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    n_paths: int
    horizon: int
    workers: int = 1
    table_cap: int = 1 << 16

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        for name in ("n_paths", "horizon", "workers", "table_cap"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.table_cap < self.horizon:
            raise DomainError("table_cap must be >= horizon")


@dataclass(frozen=True)
class PathRecord:
    """Event times ``S_1 < S_2 < ... <= horizon`` of one path."""

    event_times: tuple[int, ...]
    horizon: int

    def __post_init__(self) -> None:
        prev = 0
        for s in self.event_times:
            if s <= prev or s > self.horizon:
                raise DomainError(f"bad event times {self.event_times} for horizon {self.horizon}")
            prev = s

    def count_at(self, t: int) -> int:
        """``N(t)``: number of events at or before ``t``."""
        return bisect.bisect_right(self.event_times, t)


@dataclass(frozen=True)
class McEstimate:
    t: int
    n: int
    p_hat: float
    stderr: float
    n_paths: int

    @classmethod
    def from_count(cls, t: int, n: int, hits: int, n_paths: int) -> McEstimate:
        p = hits / n_paths
        return cls(t, n, p, math.sqrt(p * (1.0 - p) / n_paths), n_paths)


class InverseCdfSampler:
    """Inverse-CDF sampling against a non-increasing survival function.

    ``table[u] = P(X > u)`` for ``u = 0..cap`` answers most draws by binary
    search.  Draws past the table bracket the answer by doubling ``u`` with the
    pointwise ``survival`` callable and then bisect; the search gives up with
    :class:`~dfpp.errors.TableOverflowError` beyond ``max_draw``.
    """

    def __init__(
        self,
        table: np.ndarray,
        survival: Callable[[int], float],
        max_draw: int = MAX_DRAW,
    ) -> None:
        table = np.asarray(table, dtype=float)
        if table[0] != 1.0:
            raise DomainError("survival table must start at 1")
        self._neg_tail = -table[1:]  # ascending, for searchsorted
        self._neg_tail.setflags(write=False)
        self.cap = table.size - 1
        self._survival = survival
        self.max_draw = max_draw

    def survival(self, u: int) -> float:
        if u <= self.cap:
            return -float(self._neg_tail[u - 1]) if u > 0 else 1.0
        return self._survival(u)

    def from_uniforms(self, uniforms: np.ndarray, censor: int | None = None) -> np.ndarray:
        """Map uniforms in (0, 1] to draws; with ``censor``, values above it become ``censor + 1``."""
        u = np.asarray(uniforms, dtype=float)
        draws = np.searchsorted(self._neg_tail, -u, side="left").astype(np.int64) + 1
        if censor is not None:
            if censor > self.cap:
                raise DomainError(f"censor {censor} beyond table length {self.cap}")
            return np.minimum(draws, censor + 1)
        beyond = draws > self.cap
        if np.any(beyond):
            flat = draws.reshape(-1)
            for i in np.flatnonzero(beyond.reshape(-1)):
                flat[i] = self._search_tail(float(u.reshape(-1)[i]))
        return draws

    def _search_tail(self, u: float) -> int:
        lo = self.cap  # survival(lo) > u
        hi = 2 * lo
        while self._survival(hi) > u:
            lo = hi
            hi *= 2
            if hi > self.max_draw:
                raise TableOverflowError(
                    f"draw beyond {self.max_draw} (uniform {u!r})", uniform=u, limit=self.max_draw
                )
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._survival(mid) > u:
                lo = mid
            else:
                hi = mid
        return hi


@lru_cache(maxsize=16)
def waiting_time_sampler(params: ProcessParams, table_cap: int = 1 << 16) -> InverseCdfSampler:
    """Shared read-only sampler for the renewal waiting time."""
    table = np.array(survival_array(params, table_cap))
    return InverseCdfSampler(table, lambda u: survival_integral(params, u))


@lru_cache(maxsize=16)
def sibuya_sampler(q: float, table_cap: int = 1 << 16) -> InverseCdfSampler:
    d = SibuyaDist(q)
    table = np.ones(table_cap + 1)
    if q == 1.0:
        table[1:] = 0.0
    else:
        j = np.arange(1, table_cap + 1, dtype=float)
        table[1:] = np.cumprod(1.0 - q / j)
    return InverseCdfSampler(table, lambda k: sibuya_survival(d, k))


def _uniform(rng: Generator) -> float:
    return 1.0 - rng.random()  # (0, 1]


def sample_waiting_time(
    params: ProcessParams, rng: Generator, table_cap: int = 1 << 16
) -> int:
    """One draw of the renewal waiting time ``T >= 1``."""
    return int(waiting_time_sampler(params, table_cap).from_uniforms(np.array([_uniform(rng)]))[0])


def sample_sibuya(q: float, rng: Generator, table_cap: int = 1 << 16) -> int:
    """One Sibuya draw ``X >= 1``."""
    SibuyaDist(q)
    return int(sibuya_sampler(q, table_cap).from_uniforms(np.array([_uniform(rng)]))[0])


def _block_size(model: str, horizon: int) -> int:
    if model not in MODELS:
        raise DomainError(f"model must be one of {MODELS}, got {model!r}")
    width = horizon if model == "renewal" else 2 * horizon
    return -(-width // 4) * 4  # one Philox counter yields four draws


def path_uniforms(seed: int, start: int, stop: int, block: int) -> np.ndarray:
    """Uniforms in (0, 1] for paths ``start..stop-1``, one row of ``block`` per path."""
    if block % 4:
        raise DomainError("block must be a multiple of 4")
    gen = Generator(Philox(key=seed, counter=start * block // 4))
    return 1.0 - gen.random((stop - start) * block).reshape(stop - start, block)


def _event_times_block(
    params: ProcessParams, cfg: SamplerConfig, model: str, start: int, stop: int
) -> tuple[np.ndarray, np.ndarray]:
    """Event-time matrix and validity mask for paths ``start..stop-1``."""
    h = cfg.horizon
    uni = path_uniforms(cfg.seed, start, stop, _block_size(model, h))
    # draws are censored at h + 1, so entries past h are never read
    if model == "renewal":
        sampler = waiting_time_sampler(params, h)
        waits = sampler.from_uniforms(uni[:, :h], censor=h)
        times = np.cumsum(waits, axis=1)
        mask = times <= h
    else:
        sampler = sibuya_sampler(params.q, h)
        jumps = sampler.from_uniforms(uni[:, :h], censor=h)
        clock = np.cumsum(jumps, axis=1)
        flags = uni[:, h : 2 * h] <= params.p
        times = clock
        mask = flags & (clock <= h)
    return times, mask


def _chunks(n_paths: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + _CHUNK_PATHS, n_paths)) for lo in range(0, n_paths, _CHUNK_PATHS)]


def _run_chunks(fn, n_paths: int, workers: int) -> list:
    spans = _chunks(n_paths)
    if workers == 1 or len(spans) == 1:
        return [fn(lo, hi) for lo, hi in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda span: fn(*span), spans))


def simulate_paths(
    params: ProcessParams, cfg: SamplerConfig, model: str = "renewal"
) -> Iterator[PathRecord]:
    """Yield ``cfg.n_paths`` paths in index order; identical for any worker count."""
    _block_size(model, cfg.horizon)

    def one_chunk(lo: int, hi: int) -> list[PathRecord]:
        times, mask = _event_times_block(params, cfg, model, lo, hi)
        return [
            PathRecord(tuple(int(s) for s in row[m]), cfg.horizon) for row, m in zip(times, mask)
        ]

    spans = _chunks(cfg.n_paths)
    if cfg.workers == 1:
        for lo, hi in spans:
            yield from one_chunk(lo, hi)
        return
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        for records in pool.map(lambda span: one_chunk(*span), spans):
            yield from records


def simulate_counts(
    params: ProcessParams, cfg: SamplerConfig, t: int, model: str = "renewal"
) -> np.ndarray:
    """Histogram of ``N(t)`` over all paths: ``hist[n]`` paths with ``N(t) = n``."""
    if not 0 <= t <= cfg.horizon:
        raise DomainError(f"t must lie in [0, horizon={cfg.horizon}]")

    def one_chunk(lo: int, hi: int) -> np.ndarray:
        times, mask = _event_times_block(params, cfg, model, lo, hi)
        n_t = np.count_nonzero(mask & (times <= t), axis=1)
        return np.bincount(n_t, minlength=cfg.horizon + 1)

    return np.sum(_run_chunks(one_chunk, cfg.n_paths, cfg.workers), axis=0)


def mc_count_estimate(
    params: ProcessParams, cfg: SamplerConfig, t: int, n_max: int, model: str = "renewal"
) -> list[McEstimate]:
    """Empirical ``P(N(t) = n)`` for ``n = 0..n_max`` with binomial standard errors."""
    hist = simulate_counts(params, cfg, t, model)
    return [
        McEstimate.from_count(t, n, int(hist[n]) if n < hist.size else 0, cfg.n_paths)
        for n in range(n_max + 1)
    ]


def mc_first_wait_estimate(
    params: ProcessParams, cfg: SamplerConfig, u_max: int, model: str = "renewal"
) -> list[McEstimate]:
    """Empirical PMF of the first waiting time for ``u = 1..u_max`` (``u_max <= horizon``).

    Reported as :class:`McEstimate` with ``t = u`` and ``n = 1``.
    """
    if not 1 <= u_max <= cfg.horizon:
        raise DomainError("u_max must lie in [1, horizon]")

    def one_chunk(lo: int, hi: int) -> np.ndarray:
        times, mask = _event_times_block(params, cfg, model, lo, hi)
        has = mask.any(axis=1)
        first = np.where(has, np.where(mask, times, cfg.horizon + 1).min(axis=1), 0)
        return np.bincount(first[has], minlength=cfg.horizon + 1)

    hist = np.sum(_run_chunks(one_chunk, cfg.n_paths, cfg.workers), axis=0)
    return [McEstimate.from_count(u, 1, int(hist[u]), cfg.n_paths) for u in range(1, u_max + 1)]


def exact_count_pmf(params: ProcessParams, t: int, n: int, model: str = "renewal") -> float:
    """Reference ``P(N(t) = n)`` for either model.

    The subordinated process is also a renewal process (its waiting times are
    i.i.d.), so its count law follows from the convolution identity.
    """
    if model == "renewal":
        return count_pmf_exact(CountPmfQuery(params, t, n))
    if t < n:
        return 0.0
    if t == 0:
        return 1.0
    return max(renewal_count_pmf(sub_wt_pmf_array(params, t), t, n), 0.0)


def mc_compare(
    params: ProcessParams, cfg: SamplerConfig, t: int, n_max: int, model: str = "renewal"
) -> list[tuple[int, float, float, float, float]]:
    """Rows ``(n, p_hat, stderr, exact, z_score)``."""
    rows = []
    for est in mc_count_estimate(params, cfg, t, n_max, model):
        exact = exact_count_pmf(params, t, est.n, model)
        diff = est.p_hat - exact
        if est.stderr > 0:
            z = diff / est.stderr
        else:
            z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        rows.append((est.n, est.p_hat, est.stderr, exact, z))
    return rows
