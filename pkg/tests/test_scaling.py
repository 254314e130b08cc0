import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbs_shapes import regime as rg
from gibbs_shapes.errors import NoRoot, RegimeMismatch
from gibbs_shapes.models import make_model
from gibbs_shapes.scaling import make_plan, solve_kappa, solve_kappa_hat
from gibbs_shapes.specfun import digamma, trigamma


def test_solve_kappa_examples(uniform, quadratic):
    assert solve_kappa(quadratic, -5.0) == pytest.approx(5.0, rel=1e-14)
    k = solve_kappa(uniform, -math.log(100))
    # digamma(k + 1) = ln 100 has its root at 99.4996, not 99.9958
    assert digamma(k + 1) == pytest.approx(math.log(100), rel=1e-14)
    assert k == pytest.approx(99.49958333802, rel=1e-10)
    xl = make_model("expr:'x*ln(x)-x'")
    assert solve_kappa(xl, -3.0) == pytest.approx(math.exp(3), rel=1e-13)


def test_solve_kappa_hat_examples(quadratic):
    assert solve_kappa_hat(quadratic, -5.0) == pytest.approx((5 + math.sqrt(29)) / 2, rel=1e-14)
    xl = make_model("expr:'x*ln(x)-x'")
    kh = solve_kappa_hat(xl, 0.0)
    assert math.log(kh) == pytest.approx(1 / kh, rel=1e-13)
    assert kh == pytest.approx(1.76322283435, rel=1e-10)


FAMILIES = {
    "uniform": (-8.0, -1.0),
    "power:p=2,a=0.5": (-200.0, -3.0),
    "power:p=1.5": (-150.0, -3.0),
    "power:p=3,a=0.3": (-1000.0, -5.0),
    "xlogpower:p=1": (-10.0, -2.0),
    "dyadic": (-12.0, -2.0),
}


@pytest.mark.parametrize("spec", sorted(FAMILIES))
@settings(max_examples=25, deadline=None)
@given(frac=st.floats(0.0, 1.0))
def test_root_residuals(spec, frac):
    m = make_model(spec)
    lo, hi = FAMILIES[spec]
    mu = lo + frac * (hi - lo)
    k = solve_kappa(m, mu)
    kh = solve_kappa_hat(m, mu)
    tol = 1e-10 * (1 + abs(mu))
    assert abs(m.du(k) + mu) <= tol
    assert abs(m.du(kh) - 1 / kh + mu) <= tol
    assert kh > k


@pytest.mark.parametrize("spec", sorted(FAMILIES))
def test_kappa_decreasing_in_mu(spec):
    m = make_model(spec)
    lo, hi = FAMILIES[spec]
    ks = [solve_kappa(m, mu) for mu in np.linspace(lo, hi, 12)]
    assert all(a > b for a, b in zip(ks, ks[1:]))


@pytest.mark.parametrize("spec", ["uniform", "power:p=2,a=0.5", "power:p=1.5", "xlogpower:p=1"])
def test_kappa_over_kappa_hat_tends_to_one(spec):
    m = make_model(spec)
    mu = -float(m.du(1e4))
    k, kh = solve_kappa(m, mu), solve_kappa_hat(m, mu)
    assert k >= 1e4 * (1 - 1e-12)
    assert abs(k / kh - 1) < 0.01


def test_no_root():
    with pytest.raises(NoRoot):
        solve_kappa(make_model("uniform"), 5.0)  # root lies below x = 1
    with pytest.raises(NoRoot):
        solve_kappa(make_model("expr:'ln(x)^2'"), 0.5)


def test_make_plan_examples(uniform, quadratic, d2_model):
    p = make_plan(quadratic, rg.classify(quadratic), -5.0)
    assert (p.kappa, p.zeta, p.local_profile, p.local_c) == (5.0, 1.0, rg.DISCRETE_GAUSSIAN, 1.0)
    mu = -math.log(100)
    p = make_plan(uniform, rg.classify(uniform), mu)
    assert p.zeta == pytest.approx(1 / math.sqrt(trigamma(p.kappa + 1)), rel=1e-14)
    assert p.zeta == pytest.approx(10.0, rel=1e-3)
    p = make_plan(d2_model, rg.classify(d2_model), 0.1)
    assert p.kappa == pytest.approx(10.0, rel=1e-15) and p.mode == "gamma"
    assert p.kappa * (p.mu - p.mu_star) == 1.0


def test_plan_modes_and_hard_step_zeta():
    m = make_model("critical:mustar=0,d=0,v=const:0")
    p = make_plan(m, rg.classify(m), 0.01)
    assert p.mode == "process" and p.vertical == 1.0
    m = make_model("critical:mustar=0,d=-0.5,v=const:0")
    assert make_plan(m, rg.classify(m), 0.01).mode == "zero"
    m = make_model("power:p=3,a=0.3")
    p = make_plan(m, rg.classify(m), -810.0)
    assert p.kappa == pytest.approx(30.0) and p.zeta == pytest.approx(math.sqrt(30.0))
    assert make_plan(m, rg.classify(m), -810.0, zeta=2.0).zeta == 2.0


def test_plan_errors():
    m = make_model("expr:'-x*ln(x)^2'")
    with pytest.raises(RegimeMismatch):
        make_plan(m, rg.classify(m), 0.0)
    m = make_model("critical:mustar=1,d=2,v=const:0")
    with pytest.raises(NoRoot):
        make_plan(m, rg.classify(m), 0.5)


def test_dyadic_subsequence_plans():
    m = make_model("dyadic")
    r = rg.classify(m)
    p = make_plan(m, r, -float(m.du(6144.0)), kappa=6144.0)
    assert p.mu == -6.25 and p.zeta == pytest.approx(math.sqrt(8192.0))
    assert solve_kappa(m, p.mu) == pytest.approx(6144.0, rel=1e-12)
    p = make_plan(m, r, -float(m.du(4096.0)), kappa=4096.0)
    assert p.mu == -6.0 and p.zeta == 64.0
