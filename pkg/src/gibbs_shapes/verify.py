"""Monte Carlo curve estimates, exact small-M enumeration and count tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import regime as rg
from .ensemble import (
    DEFAULT_EPS_TAIL,
    Partition,
    PoissonTable,
    interval_counts,
    local_G,
    parallel_map,
    rescaled_F,
    sample_rng,
    truncation_K,
)
from .errors import EmptyGrid
from .scaling import make_plan
from .series import poisson_process_mean, sum_S
from .specfun import lgamma

MAX_ENUM_M = 14


# ---------------------------------------------------------------- curves


@dataclass(frozen=True)
class EmpiricalCurve:
    grid: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    n: int
    excluded: Optional[tuple] = None

    def mask(self):
        """Grid points outside the open excluded window."""
        if self.excluded is None:
            return np.ones(self.grid.shape, dtype=bool)
        lo, hi = self.excluded
        return ~((self.grid > lo) & (self.grid < hi))


def parse_grid(spec):
    """'a:b:step' -> points a, a+step, ..., b (inclusive within step/2)."""
    try:
        a, b, step = (float(s) for s in spec.split(":"))
    except ValueError as exc:
        raise ValueError(f"grid must be 'a:b:step', got {spec!r}") from exc
    if not step > 0 or b < a:
        raise EmptyGrid(f"empty grid {spec!r}")
    n = int(math.floor((b - a) / step + 0.5)) + 1
    return np.round(a + step * np.arange(n), 12)


def empirical_curve(model, mu, plan, grid, n, seed=0, kind="F", k_max=None,
                    eps_tail=DEFAULT_EPS_TAIL, threads=None, excluded=None) -> EmpiricalCurve:
    """MC mean and sd of F_mu (kind='F') or G_mu (kind='G') over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise EmptyGrid("no grid points")
    if k_max is None:
        k_max = truncation_K(model, mu, eps_tail)
    table = PoissonTable(model, mu, k_max)
    fn = rescaled_F if kind == "F" else local_G

    def one(i):
        return fn(table.draw(sample_rng(seed, i)), plan, grid)

    values = np.vstack(parallel_map(one, n, threads))
    sd = values.std(axis=0, ddof=1) if n > 1 else np.zeros(grid.size)
    return EmpiricalCurve(grid, values.mean(axis=0), sd, int(n), excluded)


def sup_distance(curve: EmpiricalCurve, oracle) -> float:
    """max |mean - oracle| over grid points outside the excluded window."""
    m = curve.mask()
    if not m.any():
        raise EmptyGrid("every grid point lies in the excluded window")
    target = np.asarray(oracle(curve.grid[m]), dtype=float)
    return float(np.max(np.abs(curve.mean[m] - target)))


# ---------------------------------------------------------------- enumeration


def _integer_partitions(M, max_part=None):
    """Integer partitions of M as non-increasing part lists."""
    if max_part is None:
        max_part = M
    if M == 0:
        yield []
        return
    for first in range(min(M, max_part), 0, -1):
        for rest in _integer_partitions(M - first, first):
            yield [first] + rest


@dataclass(frozen=True)
class ProfileEnumeration:
    M: int
    profiles: list = field(default_factory=list)  # (profile tuple p_1..p_M, multiplicity)

    @property
    def total(self):
        return sum(m for _, m in self.profiles)


def multiplicity(profile):
    """M! / prod (k!)^{p_k} p_k!  (number of set partitions with this profile)."""
    M = sum(k * p for k, p in enumerate(profile, start=1))
    denom = 1
    for k, p in enumerate(profile, start=1):
        denom *= math.factorial(k) ** p * math.factorial(p)
    num = math.factorial(M)
    assert num % denom == 0
    return num // denom


def enumerate_profiles(M) -> ProfileEnumeration:
    if not (isinstance(M, (int, np.integer)) and 1 <= M <= MAX_ENUM_M):
        raise ValueError(f"M must be an integer in 1..{MAX_ENUM_M}, got {M!r}")
    rows = []
    for parts in _integer_partitions(M):
        profile = [0] * M
        for k in parts:
            profile[k - 1] += 1
        rows.append(tuple(profile))
    # fewest large parts first: (M,0,..,0) ... (0,..,0,1)
    rows.sort(key=lambda p: (max(k for k, c in enumerate(p, start=1) if c), [-c for c in p]))
    return ProfileEnumeration(M, [(p, multiplicity(p)) for p in rows])


def bell_numbers(n):
    """B_0..B_n via the Bell triangle."""
    out = [1]
    row = [1]
    for _ in range(n):
        new = [row[-1]]
        for v in row:
            new.append(new[-1] + v)
        row = new
        out.append(row[0])
    return out


def _log_alphas(model, mu, kmax):
    ks = np.arange(1, kmax + 1, dtype=float)
    return np.asarray(model.log_alpha(mu, ks), dtype=float)


def log_profile_weight(p, model, mu):
    """ln prod_k alpha_k^{p_k} / p_k!."""
    if isinstance(p, Partition):
        items = list(zip(p.sizes.tolist(), p.counts.tolist()))
    else:
        items = [(k, c) for k, c in enumerate(p, start=1) if c]
    if not items:
        return 0.0
    la = _log_alphas(model, mu, max(k for k, _ in items))
    return math.fsum(c * la[k - 1] - lgamma(c + 1.0) for k, c in items)


def profile_weight(p, model, mu):
    return math.exp(log_profile_weight(p, model, mu))


def check_poissonization(model, mu, M_max) -> float:
    """|1 + sum_{1<=M<=M_max} Z_M e^{-mu M} - exp(sum alpha_k)|.

    Z_M e^{-mu M} is built from set-partition multiplicities:
    (mult / M!) prod (alpha_k k!)^{p_k}.
    """
    if M_max > MAX_ENUM_M:
        raise ValueError(f"M_max must be <= {MAX_ENUM_M}")
    la = _log_alphas(model, mu, M_max)
    lk = [float(lgamma(k + 1.0)) for k in range(1, M_max + 1)]
    terms = [1.0]
    for M in range(1, M_max + 1):
        for prof, mult in enumerate_profiles(M).profiles:
            lw = math.log(mult) - float(lgamma(M + 1.0))
            lw += sum(c * (la[k - 1] + lk[k - 1]) for k, c in enumerate(prof, start=1) if c)
            terms.append(math.exp(lw))
    lhs = math.fsum(terms)
    total = sum_S(model, mu, 1, math.inf, 1e-15)
    return abs(lhs - math.exp(total.value))


def canonical_profile_probability(profile, model, mu, log_Z=None):
    """P(profile) from multiplicities: (mult / M!) prod (alpha_k k!)^{p_k} / Z."""
    M = sum(k * p for k, p in enumerate(profile, start=1))
    la = _log_alphas(model, mu, len(profile))
    lw = math.log(multiplicity(profile)) - float(lgamma(M + 1.0))
    lw += sum(c * (la[k - 1] + float(lgamma(k + 1.0))) for k, c in enumerate(profile, start=1) if c)
    if log_Z is None:
        log_Z = sum_S(model, mu, 1, math.inf, 1e-15).value
    return math.exp(lw - log_Z)


def poisson_profile_probability(profile, model, mu, total_alpha=None):
    """prod_k Poisson(p_k; alpha_k) over all k (k beyond the profile contribute e^{-alpha_k})."""
    la = _log_alphas(model, mu, len(profile))
    alphas = np.exp(la)
    if total_alpha is None:
        total_alpha = sum_S(model, mu, 1, math.inf, 1e-15).value
    rest = total_alpha - float(np.sum(alphas))
    prob = float(np.prod(stats.poisson.pmf(np.asarray(profile), alphas)))
    return prob * math.exp(-rest)


# ---------------------------------------------------------------- count tests


@dataclass(frozen=True)
class IntervalStats:
    interval: tuple
    mean: float
    var: float
    exact_mean: float
    limit_mean: float
    z: float


@dataclass(frozen=True)
class CountReport:
    intervals: list
    pooled_mean: float
    pooled_var: float
    dispersion: float
    chi2: float
    df: int
    p_value: float
    n: int

    @property
    def exact_match(self):
        return self.df == 0


def _chi2_poisson(counts, lam):
    """Chi-square of a count histogram vs Poisson(lam); bins merged to expected >= 5."""
    n = counts.size
    if lam == 0:
        return 0.0, 0
    top = int(counts.max()) if n else 0
    kmax = max(top, int(lam + 10 * math.sqrt(lam) + 10))
    obs = np.bincount(counts, minlength=kmax + 1)[: kmax + 1].astype(float)
    obs[-1] += float(np.sum(counts > kmax))
    pmf = stats.poisson.pmf(np.arange(kmax + 1), lam)
    pmf[-1] = stats.poisson.sf(kmax - 1, lam)
    exp_ = n * pmf
    bins_o, bins_e = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(obs, exp_):
        o_acc += o
        e_acc += e
        if e_acc >= 5.0:
            bins_o.append(o_acc)
            bins_e.append(e_acc)
            o_acc = e_acc = 0.0
    if bins_e:
        bins_o[-1] += o_acc
        bins_e[-1] += e_acc
    else:
        return 0.0, 0
    bo, be = np.array(bins_o), np.array(bins_e)
    return float(np.sum((bo - be) ** 2 / be)), len(be) - 1


def test_poisson_counts(batch, model, mu, intervals, C=0.0) -> CountReport:
    """Interval counts of a batch against the exact finite-mu Poisson law.

    Per-interval chi-square statistics are summed (independent intervals) into
    one statistic; the dispersion index uses the pooled count over all
    intervals.
    """
    counts = np.array([interval_counts(p, mu, intervals) for p in batch.partitions], dtype=np.int64)
    n = counts.shape[0]
    per, chi2, df = [], 0.0, 0
    lam_total = 0.0
    for j, (a, b) in enumerate(intervals):
        lam = sum_S(model, mu, a / mu, b / mu, 1e-14).value
        lam_total += lam
        c = counts[:, j]
        mean = float(c.mean())
        var = float(c.var(ddof=1)) if n > 1 else 0.0
        z = (mean - lam) / math.sqrt(lam / n) if lam > 0 else (0.0 if mean == 0 else math.inf)
        per.append(IntervalStats((a, b), mean, var, lam, poisson_process_mean(C, a, b), z))
        s, k = _chi2_poisson(c, lam)
        chi2 += s
        df += k
    pooled = counts.sum(axis=1)
    pm = float(pooled.mean())
    pv = float(pooled.var(ddof=1)) if n > 1 else 0.0
    disp = pv / pm if pm > 0 else 1.0
    p_value = float(stats.chi2.sf(chi2, df)) if df > 0 else 1.0
    return CountReport(per, pm, pv, disp, chi2, df, p_value, n)


test_poisson_counts.__test__ = False  # not a pytest test


# ---------------------------------------------------------------- no-shape checks


def check_divergence(model, mu, m_cut, N) -> float:
    """exp(-A_m) A_m^N with A_m = sum_{k <= m} alpha_k, computed in logs."""
    s = sum_S(model, mu, 1, m_cut + 1)
    logA = s.log_value
    if logA == -math.inf:
        return 1.0 if N == 0 else 0.0
    A = math.exp(logA) if logA < 709 else math.inf
    return math.exp(-A + N * logA) if A < math.inf else 0.0


def check_zero_shape(model, mu_sequence, x, y, mu_star=0.0) -> list:
    """S_mu(kappa x, kappa y) with kappa = 1/(mu - mu*), for each mu."""
    out = []
    for mu in mu_sequence:
        kappa = 1.0 / (mu - mu_star)
        out.append(sum_S(model, mu, kappa * x, kappa * y).value)
    return out


def subsequence_profiles(model, n_list, n_samples=400, seed=0, grid=None, threads=None):
    """Local G curves along kappa_n = 3 * 2^(n-1) and kappa~_n = 2^n.

    mu = -u'(kappa) in each case, so kappa is the exact scaling root.  Returns
    {n: (curve_1, curve_2, plan_1, plan_2)}.
    """
    if grid is None:
        grid = parse_grid("-3:3:0.1")
    report = rg.classify(model)
    out = {}
    for n in n_list:
        pair = []
        for idx, kappa in enumerate((3.0 * 2.0 ** (n - 1), 2.0**n)):
            mu = -float(model.du(kappa))
            plan = make_plan(model, report, mu, kappa=kappa)
            curve = empirical_curve(model, mu, plan, grid, n_samples, seed=seed + idx, kind="G", threads=threads)
            pair.append((curve, plan))
        out[n] = (pair[0][0], pair[1][0], pair[0][1], pair[1][1])
    return out


def nearest_index(grid, x):
    return int(np.argmin(np.abs(np.asarray(grid) - x)))


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    statistic: float
    threshold: str
    detail: str = ""

    def line(self):
        status = "pass" if self.passed else "fail"
        return f"{self.check_id},{status},{self.statistic:.10g},{self.threshold}"

