import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbs_shapes import expression as ex
from gibbs_shapes.errors import ConfigError, ModelSpecError, RangeError, UnknownIdentifier
from gibbs_shapes.models import alpha, from_expression, make_model, parse_model_spec, spec_to_text
from gibbs_shapes.specfun import digamma, lgamma, trigamma

BUILTIN = [
    "uniform",
    "power:p=2,a=0.5",
    "power:p=1.5",
    "power:p=3,a=0.3",
    "xlogpower:p=1",
    "xlogpower:p=2",
    "xlogpower:p=0.5",
    "critical:mustar=0,d=2,v=const:0",
    "critical:mustar=1.5,d=-0.5,v=const:0.3",
    "critical:mustar=0,d=0,v=logpow:c=1,q=0.5",
    "critical:mustar=0,d=0,v=negloglog",
    "expr:'x*ln(x)^2'",
    "expr:'x^2/2',beta=0.5",
]


@pytest.mark.parametrize("spec", BUILTIN)
@pytest.mark.parametrize("x", [2.0, 10.0, 100.0, 1e4])
def test_derivatives_match_central_differences(spec, x):
    m = make_model(spec)
    h = 1e-4 * x
    fd1 = (m.u(x + h) - m.u(x - h)) / (2 * h)
    fd2 = (m.du(x + h) - m.du(x - h)) / (2 * h)
    assert abs(m.du(x) - fd1) <= 1e-6 * (1 + abs(m.du(x)))
    assert abs(m.ddu(x) - fd2) <= 1e-6 * (1 + abs(m.ddu(x)))


@pytest.mark.parametrize("spec", BUILTIN + ["dyadic"])
def test_finite_on_probe_range(spec):
    m = make_model(spec)
    # x (ln x)^p with p < 2, p != 1 has u'' ~ (ln x)^(p-2) / x, infinite at x = 1
    lo = 0.25 if spec == "xlogpower:p=0.5" else 0.0
    xs = np.exp2(np.linspace(lo, 40, 161))
    for f in (m.u, m.du, m.ddu):
        assert np.all(np.isfinite(f(xs)))


def test_uniform_is_lgamma():
    m = make_model("uniform")
    for x in (1.0, 3.5, 40.0):
        assert m.u(x) == lgamma(x + 1)
        assert m.du(x) == digamma(x + 1)
        assert m.ddu(x) == trigamma(x + 1)


def test_power_and_dyadic_examples():
    q = make_model("power:p=2,a=0.5")
    assert q.u(3.0) == 4.5 and q.ddu(17.0) == 1.0
    d = make_model("dyadic")
    assert d.ddu(3.0) == 0.25
    assert d.ddu(4.0) == 0.25 and d.ddu(4.5) == 0.125
    assert d.u(1.0) == 0.0 and d.du(1.0) == 0.0


def test_dyadic_closed_form_matches_integration():
    from scipy.integrate import quad

    d = make_model("dyadic")
    for x in (3.0, 5.5, 17.0, 100.0):
        breaks = [2.0**j for j in range(1, 8) if 2.0**j < x]
        du = quad(lambda t: d.ddu(t), 1.0, x, points=breaks, limit=200)[0]
        u = quad(lambda t: d.du(t), 1.0, x, points=breaks, limit=200)[0]
        assert d.du(x) == pytest.approx(du, rel=1e-10)
        assert d.u(x) == pytest.approx(u, rel=1e-10)
    # u'(3 * 2^(n-1)) and u'(2^n) at n = 12
    assert d.du(6144.0) == 6.25
    assert d.du(4096.0) == 6.0


def test_alpha_examples(uniform):
    assert alpha(uniform, 0.0, 3) == pytest.approx(1 / 6, rel=1e-14)
    assert alpha(uniform, -math.log(2), 4) == pytest.approx(16 / 24, rel=1e-14)
    q = make_model("power:p=2,a=0.5")
    assert alpha(q, -2.0, 4) == pytest.approx(1.0)  # u(4) = 8 = -mu k
    assert alpha(uniform, 1e4, 5) == 0.0
    with pytest.raises(RangeError):
        alpha(uniform, -1e4, 1)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 3), st.integers(1, 200))
def test_alpha_strictly_decreasing_in_mu(mu, dmu, k):
    m = make_model("uniform")
    a1, a2 = alpha(m, mu, k), alpha(m, mu + dmu, k)
    if a1 > 0 and a2 > 0:
        assert a2 < a1


def test_parsed_lgamma_second_derivative_matches_builtin(uniform):
    m = from_expression("lgamma(x+1)")
    for x in (1.0, 5.0, 50.0):
        assert m.ddu(x) == pytest.approx(uniform.ddu(x), rel=1e-10)


def test_expr_with_beta_adds_lgamma():
    m = make_model("expr:'x^2',beta=0.5")
    assert m.u(3.0) == pytest.approx(4.5 + math.lgamma(4.0), rel=1e-13)
    assert m.beta == 0.5


def test_critical_family_has_exact_v():
    m = make_model("critical:mustar=0.5,d=2,v=logpow:c=2,q=0.5")
    x = 50.0
    assert m.u(x) == pytest.approx(-0.5 * x - math.log(x) + 2 * math.sqrt(1 + math.log(x)))
    assert m.v(x) == pytest.approx(2 * math.sqrt(1 + math.log(x)))


def test_spec_round_trip_and_errors():
    for s in BUILTIN + ["dyadic"]:
        spec = parse_model_spec(s)
        assert parse_model_spec(spec_to_text(spec)) == spec
    for bad in ["nope", "power:q=2", "power", "critical:d=1", "critical:d=1,v=logpow:c=1,q=2",
                "uniform:p=1", "expr:''", "power:p=abc"]:
        with pytest.raises(ModelSpecError):
            make_model(bad)
    with pytest.raises(UnknownIdentifier):
        make_model("expr:'foo(x)'")
    assert issubclass(UnknownIdentifier, ConfigError)
