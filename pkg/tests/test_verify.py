import itertools
import math

import numpy as np
import pytest

from gibbs_shapes import oracles as orc
from gibbs_shapes import regime as rg
from gibbs_shapes.ensemble import EMPTY, Partition, rescaled_F, sample_batch
from gibbs_shapes.errors import EmptyGrid
from gibbs_shapes.models import make_model
from gibbs_shapes.scaling import make_plan
from gibbs_shapes.series import expected_mass
from gibbs_shapes.verify import (
    CheckResult,
    EmpiricalCurve,
    bell_numbers,
    canonical_profile_probability,
    check_divergence,
    check_poissonization,
    check_zero_shape,
    empirical_curve,
    enumerate_profiles,
    log_profile_weight,
    multiplicity,
    parse_grid,
    poisson_profile_probability,
    profile_weight,
    subsequence_profiles,
    sup_distance,
)
from gibbs_shapes.verify import test_poisson_counts as poisson_counts


def brute_set_partitions(n):
    """All set partitions of {0..n-1} as sorted block-size tuples (restricted growth strings)."""
    out = []
    for rgs in itertools.product(range(n), repeat=n):
        if rgs[0] != 0 or any(rgs[i] > max(rgs[:i]) + 1 for i in range(1, n)):
            continue
        out.append(tuple(sorted(np.bincount(rgs).tolist(), reverse=True)))
    return out


def test_enumerate_examples():
    e = enumerate_profiles(3)
    assert e.profiles == [((3, 0, 0), 1), ((1, 1, 0), 3), ((0, 0, 1), 1)]
    assert e.total == 5
    assert enumerate_profiles(4).total == 15 and len(enumerate_profiles(4).profiles) == 5
    assert enumerate_profiles(1).profiles == [((1,), 1)]
    with pytest.raises(ValueError):
        enumerate_profiles(15)
    with pytest.raises(ValueError):
        enumerate_profiles(0)


@pytest.mark.parametrize("M", [4, 5, 6])
def test_multiplicities_vs_brute_force(M):
    from collections import Counter

    brute = Counter(brute_set_partitions(M))
    for prof, mult in enumerate_profiles(M).profiles:
        blocks = tuple(sorted((k for k, c in enumerate(prof, start=1) for _ in range(c)), reverse=True))
        assert brute[blocks] == mult
        assert sum(k * c for k, c in enumerate(prof, start=1)) == M


def test_bell_identity():
    bell = bell_numbers(14)
    assert bell[:8] == [1, 1, 2, 5, 15, 52, 203, 877]
    assert bell[14] == 190899322
    for M in range(1, 13):
        assert enumerate_profiles(M).total == bell[M]


def test_profile_weight(uniform):
    assert profile_weight(EMPTY, uniform, 0.0) == 1.0
    assert profile_weight((0, 1), uniform, 0.0) == pytest.approx(0.5, rel=1e-15)
    assert profile_weight((2,), uniform, 0.0) == pytest.approx(0.5, rel=1e-15)
    assert log_profile_weight(Partition.from_profile((2,)), uniform, 0.0) == pytest.approx(math.log(0.5))
    assert multiplicity((0, 2, 0, 0)) == 3


def test_poissonization(uniform):
    assert check_poissonization(uniform, math.log(4), 12) < 1e-8
    assert check_poissonization(uniform, math.log(2), 14) < 1e-6
    assert check_poissonization(make_model("power:p=2,a=1000"), 1000.0, 5) == 0.0


def test_multiplicativity(uniform):
    mu = math.log(4)
    for M in range(1, 7):
        for prof, _ in enumerate_profiles(M).profiles:
            a = canonical_profile_probability(prof, uniform, mu)
            b = poisson_profile_probability(prof, uniform, mu)
            assert abs(a - b) <= 1e-12


def curve(mean, grid, excluded=None, sd=None):
    grid = np.asarray(grid, dtype=float)
    mean = np.asarray(mean, dtype=float)
    return EmpiricalCurve(grid, mean, np.zeros_like(mean) if sd is None else sd, 1, excluded)


def test_sup_distance_examples():
    grid = np.linspace(0, 2, 21)
    assert sup_distance(curve(orc.step_shape(grid), grid), orc.step_shape) == 0.0
    assert sup_distance(curve([1.0, 1.0], [0.5, 1.5], (0.9, 1.1)), orc.step_shape) == 1.0
    # excluded window is open: x = 1.0 sits inside (0.9, 1.1) and is skipped
    c = curve([1.0, 0.0, 0.0], [0.5, 1.0, 1.5], (0.9, 1.1))
    assert sup_distance(c, orc.step_shape) == 0.0
    with pytest.raises(EmptyGrid):
        sup_distance(curve([1.0], [1.0], (0.9, 1.1)), orc.step_shape)


def test_sup_distance_symmetric_in_sign():
    rng = np.random.default_rng(0)
    grid = np.linspace(-3, 3, 61)
    target = orc.gaussian_tail(grid)
    err = rng.normal(0, 0.02, grid.size)
    assert sup_distance(curve(target + err, grid), orc.gaussian_tail) == pytest.approx(
        sup_distance(curve(target - err, grid), orc.gaussian_tail), rel=1e-12)


def test_parse_grid():
    assert parse_grid("0:2:0.05").size == 41
    assert parse_grid("0:2:0.05")[-1] == 2.0
    assert list(parse_grid("-1:1:0.5")) == [-1.0, -0.5, 0.0, 0.5, 1.0]
    with pytest.raises(EmptyGrid):
        parse_grid("1:0:0.1")
    with pytest.raises(ValueError):
        parse_grid("0:1")


def test_step_limit_at_800(uniform):
    mu = -math.log(800)
    plan = make_plan(uniform, rg.classify(uniform), mu)
    c = empirical_curve(uniform, mu, plan, parse_grid("0:2:0.05"), 200, seed=3, excluded=(0.9, 1.1))
    assert sup_distance(c, orc.step_shape) < 0.05


def test_poisson_counts(log_model):
    mu = 0.01
    batch = sample_batch(log_model, mu, 2000, seed=21)
    rep = poisson_counts(batch, log_model, mu, [(1.0, 2.0)], C=0.0)
    st = rep.intervals[0]
    assert abs(st.mean - 0.1705) <= 3 * math.sqrt(0.1705 / 2000)
    assert 0.9 <= st.var / st.mean <= 1.1
    assert st.limit_mean == pytest.approx(0.170483, abs=1e-6)
    # an interval left of mu * 1 holds no sizes: exact match, zero statistic
    rep = poisson_counts(batch, log_model, mu, [(0.001, 0.005)], C=0.0)
    assert rep.exact_match and rep.chi2 == 0.0 and rep.intervals[0].mean == 0.0


def test_check_divergence():
    m = make_model("expr:'-x*ln(x)^2'")
    assert check_divergence(m, 0.0, 50, 10) < 1e-10
    # A_m = 0 (all alpha vanish) gives bound 1 at N = 0
    assert check_divergence(make_model("power:p=2,a=1000"), 1000.0, 3, 0) == 1.0
    # direct arithmetic for A = 100, N = 5 (uniform with sum_{k<=1} alpha = e^{-mu} = 100)
    assert check_divergence(make_model("uniform"), -math.log(100), 1, 5) == pytest.approx(
        math.exp(-100) * 100**5, rel=1e-12)
    assert math.exp(-100) * 100**5 == pytest.approx(3.7e-34, rel=0.01)


def test_check_zero_shape():
    mus = [0.1, 0.01, 0.001]
    for spec in ("critical:mustar=0,d=-0.5,v=const:0", "expr:'ln(x)+ln(1+ln(x))'"):
        vals = check_zero_shape(make_model(spec), mus, 1.0, 2.0)
        assert all(a > b for a, b in zip(vals, vals[1:]))
    assert check_zero_shape(make_model("critical:mustar=0,d=-0.5,v=const:0"), [], 1.0, 2.0) == []


def test_subsequence_scales():
    m = make_model("dyadic")
    out = subsequence_profiles(m, [10], n_samples=5, seed=0, grid=np.array([0.0]))
    _c1, _c2, p1, p2 = out[10]
    assert p1.kappa == 1536.0 and p1.mu == -float(m.du(1536.0))
    assert p2.kappa == 1024.0


def test_variance_identity(uniform):
    # Var F(x) * E M / kappa = E F(x); at mu = -ln 100 the relative variance
    # is ~1e-43, below float resolution, so the identity is checked at -ln 20
    mu = -math.log(20)
    plan = make_plan(uniform, rg.classify(uniform), mu)
    vals = np.array([rescaled_F(p, plan, 0.5) for p in sample_batch(uniform, mu, 10_000, seed=8).partitions])
    n = vals.size
    factor = expected_mass(uniform, mu).value / plan.kappa
    lhs = vals.var(ddof=1) * factor
    m2 = np.mean((vals - vals.mean()) ** 2)
    m4 = np.mean((vals - vals.mean()) ** 4)
    sd_lhs = factor * math.sqrt(max(m4 - m2**2, 0.0) / n)
    sd_rhs = vals.std(ddof=1) / math.sqrt(n)
    assert abs(lhs - vals.mean()) <= 4 * math.hypot(sd_lhs, sd_rhs)


def test_check_result_line():
    assert CheckResult("4.final", True, 0.0028, "<0.05").line() == "4.final,pass,0.0028,<0.05"
    assert CheckResult("x", False, 1.5, ">=2").line() == "x,fail,1.5,>=2"
