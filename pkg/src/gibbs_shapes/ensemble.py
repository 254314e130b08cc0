"""Grand-canonical sampling: p_k ~ Poisson(alpha_k) independently.

A ``Partition`` holds the sorted sizes k with p_k > 0 and their counts.  When
every alpha_k is at most ``EXACT_LIMIT`` the counts are exact integers.
Otherwise (supercritical runs where alpha_k reaches e^800 and beyond) the
counts are stored relative to a common scale, p_k = counts_k * exp(log_scale),
with log_scale = max_k ln alpha_k; means up to ``EXACT_LIMIT`` are still
drawn exactly, larger ones from the normal approximation
lambda (1 + Z / sqrt(lambda)), whose error is far below float resolution there.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyPartition, OverlappingIntervals, RegimeMismatch
from .series import DEFAULT_REL_TOL, first_index, sum_S

EXACT_LIMIT = 1e15
_LOG_EXACT_LIMIT = math.log(EXACT_LIMIT)
DEFAULT_EPS_TAIL = 1e-9
THREADS_ENV = "GIBBS_SHAPES_THREADS"


def _log(x):
    return math.log(x) if x > 0 else -math.inf


@dataclass(frozen=True, eq=False)
class Partition:
    sizes: np.ndarray  # int64, strictly increasing, all >= 1
    counts: np.ndarray  # int64 (exact) or float64 (scaled), all > 0
    log_scale: float = 0.0
    _suffix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=np.int64)
        counts = np.asarray(self.counts)
        keep = counts > 0
        sizes, counts = sizes[keep], counts[keep]
        if sizes.size and (sizes[0] < 1 or np.any(np.diff(sizes) <= 0)):
            raise ValueError("sizes must be positive and strictly increasing")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "counts", counts)
        suffix = np.concatenate([np.cumsum(counts[::-1])[::-1], np.zeros(1, dtype=counts.dtype)])
        object.__setattr__(self, "_suffix", suffix)

    @classmethod
    def from_counts(cls, mapping):
        """Exact partition from {k: p_k}."""
        items = sorted((int(k), int(v)) for k, v in mapping.items() if v)
        return cls(np.array([k for k, _ in items], dtype=np.int64), np.array([v for _, v in items], dtype=np.int64))

    @classmethod
    def from_profile(cls, profile):
        """Exact partition from (p_1, p_2, ...)."""
        return cls.from_counts({k: p for k, p in enumerate(profile, start=1)})

    @property
    def exact(self):
        return self.log_scale == 0.0 and self.counts.dtype.kind in "iu"

    @property
    def mass(self):
        """sum k p_k: an int for exact partitions, else a float (may be inf)."""
        if self.exact:
            return sum(int(k) * int(c) for k, c in zip(self.sizes, self.counts))
        return math.exp(self.log_mass) if self.log_mass < 709 else math.inf

    @property
    def log_mass(self):
        if self.counts.size == 0:
            return -math.inf
        return _log(float(np.dot(self.sizes.astype(float), self.counts.astype(float)))) + self.log_scale

    def as_dict(self):
        if not self.exact:
            raise ValueError("scaled partition has no exact integer counts")
        return {int(k): int(c) for k, c in zip(self.sizes, self.counts)}

    def log_count_at_least(self, t):
        """ln sum_{k >= t} p_k, vectorized over t."""
        idx = np.searchsorted(self.sizes, _thresholds(t), side="left")
        with np.errstate(divide="ignore"):
            return np.log(self._suffix[idx].astype(float)) + self.log_scale

    def count_at_least(self, t):
        """sum_{k >= t} p_k; exact integers unless the partition is scaled."""
        if not self.exact:
            with np.errstate(over="ignore"):
                return np.exp(self.log_count_at_least(t))
        idx = np.searchsorted(self.sizes, _thresholds(t), side="left")
        return self._suffix[idx]

    def __eq__(self, other):
        return (
            isinstance(other, Partition)
            and self.log_scale == other.log_scale
            and np.array_equal(self.sizes, other.sizes)
            and np.array_equal(self.counts, other.counts)
        )

    def __hash__(self):
        return hash((self.sizes.tobytes(), self.counts.tobytes(), self.log_scale))

    def export(self):
        """'k:count;k:count;...' (counts scaled by exp(log_scale) when not exact)."""
        if self.exact:
            return ";".join(f"{k}:{c}" for k, c in zip(self.sizes, self.counts))
        return ";".join(f"{k}:{c:.17g}e{self.log_scale:+.17g}" for k, c in zip(self.sizes, self.counts))


def _thresholds(t):
    """Integer thresholds k_min = first_index(t), vectorized."""
    t = np.asarray(t, dtype=float)
    flat = [first_index(v) if math.isfinite(v) else (np.iinfo(np.int64).max if v > 0 else 1) for v in np.ravel(t)]
    out = np.array(flat, dtype=np.int64).reshape(t.shape)
    return out


EMPTY = Partition(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))


# ---------------------------------------------------------------- sampling


def truncation_K(model, mu, eps_tail=DEFAULT_EPS_TAIL, rel_tol=DEFAULT_REL_TOL) -> int:
    """Smallest K with certified sum_{k > K} alpha_k < eps_tail."""
    log_eps = math.log(eps_tail)

    def ok(K):
        s = sum_S(model, mu, K + 1, math.inf, rel_tol)
        if s.log_value == -math.inf:
            return True
        bound = s.log_value + math.log1p(rel_tol)
        return bound < log_eps

    if ok(1):
        return 1
    lo, hi = 1, 2
    while not ok(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


class PoissonTable:
    """Precomputed ln alpha_k, k = 1..k_max, and the draw plan for them."""

    def __init__(self, model, mu, k_max):
        self.k_max = int(k_max)
        ks = np.arange(1, self.k_max + 1, dtype=float)
        la = np.asarray(model.log_alpha(mu, ks), dtype=float)
        la = np.where(np.isnan(la), -np.inf, la)
        if np.any(la == np.inf):
            from .errors import RangeError

            raise RangeError("alpha_k overflows even in log space")
        self.log_alpha = la
        top = float(np.max(la)) if la.size else -math.inf
        self.exact = top <= _LOG_EXACT_LIMIT
        self.log_scale = 0.0 if self.exact else top
        big = la > _LOG_EXACT_LIMIT
        self.big_idx = np.flatnonzero(big)
        self.small_idx = np.flatnonzero(~big & (la > -np.inf))
        self.small_lam = np.exp(la[self.small_idx])
        self.big_rel = np.exp(la[self.big_idx] - self.log_scale)
        self.big_sd = np.exp(-0.5 * la[self.big_idx])

    def draw(self, rng) -> Partition:
        small = rng.poisson(self.small_lam)
        if self.exact:
            keep = small > 0
            return Partition(self.small_idx[keep] + 1, small[keep].astype(np.int64))
        z = rng.standard_normal(self.big_idx.size)
        counts = np.zeros(self.k_max)
        counts[self.small_idx] = small * math.exp(-self.log_scale)
        counts[self.big_idx] = np.maximum(self.big_rel * (1.0 + z * self.big_sd), 0.0)
        nz = np.flatnonzero(counts > 0)
        return Partition(nz + 1, counts[nz], self.log_scale)


def sample_rng(seed, index):
    """Independent generator for sample ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def sample_partition(model, mu, k_max, rng) -> Partition:
    return PoissonTable(model, mu, k_max).draw(rng)


def thread_count(threads=None):
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def parallel_map(fn, n, threads=None):
    """[fn(i) for i in range(n)], in order, over a thread pool."""
    threads = min(thread_count(threads), max(n, 1))
    if threads == 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


@dataclass(frozen=True)
class SampleBatch:
    seed: int
    n: int
    partitions: list
    k_max: int
    model_spec: str
    mu: float

    def export_lines(self):
        for i, p in enumerate(self.partitions):
            mass = p.mass
            yield f"{i},{mass if p.exact else format(p.log_mass, '.17g') + '(log)'},{p.export()}"


def sample_batch(model, mu, n, seed=0, k_max=None, eps_tail=DEFAULT_EPS_TAIL, threads=None) -> SampleBatch:
    if k_max is None:
        k_max = truncation_K(model, mu, eps_tail)
    table = PoissonTable(model, mu, k_max)
    parts = parallel_map(lambda i: table.draw(sample_rng(seed, i)), n, threads)
    return SampleBatch(int(seed), int(n), parts, int(k_max), model.spec, float(mu))


# ---------------------------------------------------------------- statistics


def size_distribution(p: Partition, x):
    """sum_{k >= x} p_k."""
    return p.count_at_least(x)[()] if np.ndim(x) == 0 else p.count_at_least(x)


def _scaled(p, thresholds, log_vertical):
    with np.errstate(over="ignore"):
        out = np.exp(p.log_count_at_least(thresholds) - log_vertical)
    return out


def rescaled_F(p: Partition, plan, x):
    """(kappa / E M) sum_{k >= kappa x} p_k; the raw count in process mode."""
    if plan.mode not in ("step", "gamma", "zero", "process"):
        raise RegimeMismatch(f"no rescaled F for plan mode {plan.mode}")
    out = _scaled(p, plan.kappa * np.asarray(x, dtype=float), plan.log_vertical)
    return float(out) if np.ndim(x) == 0 else out


def local_G(p: Partition, plan, x):
    """(kappa / E M) sum_{k >= kappa + zeta x} p_k."""
    if plan.mode != "step":
        raise RegimeMismatch("local profiles exist only for supercritical plans")
    out = _scaled(p, plan.kappa + plan.zeta * np.asarray(x, dtype=float), plan.log_vertical)
    return float(out) if np.ndim(x) == 0 else out


def random_scaled_F_tilde(p: Partition, x):
    """Number of parts of size >= x * M(nu)."""
    if p.counts.size == 0:
        raise EmptyPartition("F~ needs a partition with positive mass")
    t = np.asarray(x, dtype=float) * p.mass
    out = p.count_at_least(t)
    return out[()] if np.ndim(x) == 0 else out


def interval_counts(p: Partition, mu, intervals):
    """sum_{a <= mu k < b} p_k for each [a, b)."""
    iv = sorted((float(a), float(b)) for a, b in intervals)
    for (a1, b1), (a2, _b2) in zip(iv, iv[1:]):
        if a2 < b1:
            raise OverlappingIntervals(f"[{a1}, {b1}) overlaps [{a2}, ...)")
    for a, b in iv:
        if not a <= b:
            raise ValueError(f"bad interval [{a}, {b})")
    out = []
    for a, b in intervals:
        lo, hi = p.count_at_least([a / mu, b / mu])
        out.append(int(lo - hi) if p.exact else float(lo - hi))
    return out
