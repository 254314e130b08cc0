"""Energy models u(x) = beta*E(x) + ln Gamma(x+1) with exact derivatives.

Built-in families and the textual model-spec language::

    uniform
    power:p=<r>,a=<r>
    xlogpower:p=<r>
    critical:mustar=<r>,d=<r>,v=const:<r>|logpow:c=<r>,q=<r>|negloglog
    dyadic
    expr:'<expression>'[,beta=<r>][,mustar=<r>][,d=<r>][,gamma=<r>][,C=<r>]

For ``expr`` without ``beta`` the expression *is* u(x); with ``beta`` it is
the energy E(x) and u = beta*E + ln Gamma(x+1).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import expression as ex
from . import specfun
from .errors import ExpressionError, ModelSpecError, RangeError

_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class AnalyticHints:
    """Caller-supplied limits that bypass numeric probing."""

    mu_star: Optional[float] = None
    gamma_limit: Optional[float] = None
    d: Optional[float] = None
    C: Optional[float] = None
    ddu_limit: Optional[float] = None

    def is_empty(self):
        return all(v is None for v in (self.mu_star, self.gamma_limit, self.d, self.C, self.ddu_limit))


@dataclass(frozen=True)
class EnergyModel:
    family: str
    u: Callable
    du: Callable
    ddu: Callable
    beta: float = 0.0
    analytic_hints: AnalyticHints = field(default_factory=AnalyticHints)
    spec: str = ""
    params: tuple = ()
    non_monotone: bool = False
    # exact v(x) for the critical family: u = -mu* x + (1-d) ln x + v(x)
    v: Optional[Callable] = None

    def __repr__(self):
        return f"EnergyModel({self.spec or self.family})"

    def log_alpha(self, mu, k):
        """ln alpha_k = -mu k - u(k)."""
        k = np.asarray(k, dtype=float) if np.ndim(k) else float(k)
        with np.errstate(all="ignore"):
            out = -mu * k - self.u(k)
        return out


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: tuple = ()  # sorted (key, value) pairs; values are floats or strings

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        return parse_model_spec(text)


def _errstate(f):
    def wrapped(x):
        with np.errstate(all="ignore"):
            out = f(x)
        return float(out) if np.ndim(out) == 0 else out

    wrapped.__name__ = getattr(f, "__name__", "u")
    return wrapped


def _float(key, value):
    try:
        return float(value)
    except ValueError:
        raise ModelSpecError(f"parameter {key!r} must be a number, got {value!r}") from None


def _kv_pairs(text, allowed):
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ModelSpecError(f"expected key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in allowed:
            raise ModelSpecError(f"unknown parameter {key!r}; expected one of {sorted(allowed)}")
        if key in out:
            raise ModelSpecError(f"duplicate parameter {key!r}")
        out[key] = _float(key, value)
    return out


def parse_model_spec(text: str) -> ModelSpec:
    text = text.strip()
    family, _, rest = text.partition(":")
    family = family.strip()
    if family in ("uniform", "dyadic"):
        if rest.strip():
            raise ModelSpecError(f"{family} takes no parameters")
        return ModelSpec(family)
    if family == "power":
        kv = _kv_pairs(rest, {"p", "a"})
        if "p" not in kv:
            raise ModelSpecError("power needs p")
        kv.setdefault("a", 1.0)
        return ModelSpec(family, tuple(sorted(kv.items())))
    if family == "xlogpower":
        kv = _kv_pairs(rest, {"p"})
        if "p" not in kv:
            raise ModelSpecError("xlogpower needs p")
        return ModelSpec(family, tuple(sorted(kv.items())))
    if family == "critical":
        head, sep, vtext = rest.partition("v=")
        if not sep:
            raise ModelSpecError("critical needs v=const:<C>|logpow:c=<r>,q=<r>|negloglog")
        kv = _kv_pairs(head.rstrip().rstrip(","), {"mustar", "d"})
        if "d" not in kv:
            raise ModelSpecError("critical needs d")
        kv.setdefault("mustar", 0.0)
        vtext = vtext.strip()
        vkind, _, vargs = vtext.partition(":")
        if vkind == "const":
            kv["v"] = "const"
            kv["C"] = _float("C", vargs)
        elif vkind == "logpow":
            vk = _kv_pairs(vargs, {"c", "q"})
            if set(vk) != {"c", "q"}:
                raise ModelSpecError("logpow needs c and q")
            kv["v"] = "logpow"
            kv.update(vk)
        elif vkind == "negloglog":
            if vargs:
                raise ModelSpecError("negloglog takes no parameters")
            kv["v"] = "negloglog"
        else:
            raise ModelSpecError(f"unknown v form {vkind!r}")
        return ModelSpec(family, tuple(sorted(kv.items())))
    if family == "expr":
        m = re.match(r"""\s*(['"])(.*?)\1\s*(?:,(.*))?$""", rest, re.S)
        if m:
            expr_text, tail = m.group(2), m.group(3) or ""
        else:
            expr_text, _, tail = rest.partition(",")
        if not expr_text.strip():
            raise ModelSpecError("expr needs an expression")
        kv = _kv_pairs(tail, {"beta", "mustar", "d", "gamma", "C"})
        kv["expr"] = expr_text.strip()
        return ModelSpec(family, tuple(sorted(kv.items())))
    raise ModelSpecError(f"unknown model family {family!r}")


def spec_to_text(spec: ModelSpec) -> str:
    p = dict(spec.params)
    if spec.family in ("uniform", "dyadic"):
        return spec.family
    if spec.family == "power":
        return f"power:p={p['p']!r},a={p['a']!r}"
    if spec.family == "xlogpower":
        return f"xlogpower:p={p['p']!r}"
    if spec.family == "critical":
        head = f"critical:mustar={p['mustar']!r},d={p['d']!r},v="
        if p["v"] == "const":
            return head + f"const:{p['C']!r}"
        if p["v"] == "logpow":
            return head + f"logpow:c={p['c']!r},q={p['q']!r}"
        return head + "negloglog"
    extras = "".join(f",{k}={p[k]!r}" for k in ("beta", "mustar", "d", "gamma", "C") if k in p)
    return f"expr:'{p['expr']}'{extras}"


# ------------------------------------------------------------ families

def _uniform():
    return dict(
        u=lambda x: specfun.lgamma(x + 1.0),
        du=lambda x: specfun.digamma(x + 1.0),
        ddu=lambda x: specfun.trigamma(x + 1.0),
    )


def _power(p, a):
    if p <= 0:
        raise ModelSpecError(f"power needs p > 0, got {p}")
    if a <= 0:
        raise ModelSpecError(f"power needs a > 0, got {a}")
    return dict(
        u=lambda x: a * np.power(x, p),
        du=lambda x: a * p * np.power(x, p - 1.0),
        ddu=lambda x: a * p * (p - 1.0) * np.power(x, p - 2.0),
    )


def _xlogpower(p):
    if p <= 0:
        raise ModelSpecError(f"xlogpower needs p > 0, got {p}")

    def u(x):
        return x * np.power(np.log(x), p)

    def du(x):
        L = np.log(x)
        return np.power(L, p) + p * np.power(L, p - 1.0)

    def ddu(x):
        L = np.log(x)
        second = 0.0 if p == 1.0 else p * (p - 1.0) * np.power(L, p - 2.0)
        return (p * np.power(L, p - 1.0) + second) / x

    return dict(u=u, du=du, ddu=ddu)


def _critical_v(kind, c=0.0, q=0.0, C=0.0):
    # logpow and negloglog use 1 + ln x so that v is finite from x = 1 on
    if kind == "const":
        return (
            lambda x: C + 0.0 * np.asarray(x, dtype=float),
            lambda x: 0.0 * np.asarray(x, dtype=float),
            lambda x: 0.0 * np.asarray(x, dtype=float),
        )
    if kind == "logpow":
        if not 0.0 < q < 1.0:
            raise ModelSpecError(f"logpow needs 0 < q < 1, got {q}")

        def v(x):
            return c * np.power(1.0 + np.log(x), q)

        def dv(x):
            return c * q * np.power(1.0 + np.log(x), q - 1.0) / x

        def ddv(x):
            L1 = 1.0 + np.log(x)
            return c * q * ((q - 1.0) * np.power(L1, q - 2.0) - np.power(L1, q - 1.0)) / (x * x)

        return v, dv, ddv
    if kind == "negloglog":

        def v(x):
            return -np.log1p(np.log(x))

        def dv(x):
            return -1.0 / (x * (1.0 + np.log(x)))

        def ddv(x):
            L1 = 1.0 + np.log(x)
            return (1.0 + L1) / (x * x * L1 * L1)

        return v, dv, ddv
    raise ModelSpecError(f"unknown v form {kind!r}")


def _critical(mustar, d, v_kind, **vparams):
    v, dv, ddv = _critical_v(v_kind, **vparams)
    w = 1.0 - d
    fns = dict(
        u=lambda x: -mustar * x + w * np.log(x) + v(x),
        du=lambda x: -mustar + w / x + dv(x),
        ddu=lambda x: -w / (x * x) + ddv(x),
    )
    hints = AnalyticHints(
        mu_star=mustar,
        gamma_limit=d - 1.0,
        d=d,
        C=vparams.get("C") if v_kind == "const" else None,
    )
    return fns, hints, v


# dyadic: u'' = 1 on (0, 1], 2^-n on (2^(n-1), 2^n]; u'(1) = u(1) = 0
_DYADIC_NMAX = 1000
_dyadic_block = np.arange(1, _DYADIC_NMAX + 1, dtype=float)
# integral of u' over block m: (m-1) 2^(m-2) + 2^(m-3)
_dyadic_I = (_dyadic_block - 1.0) * np.exp2(_dyadic_block - 2.0) + np.exp2(_dyadic_block - 3.0)
# _dyadic_U[n-1] = u(2^(n-1))
_dyadic_U = np.concatenate([[0.0], np.cumsum(_dyadic_I)[:-1]])


def _dyadic_n(x):
    m, e = np.frexp(x)
    return np.where(m == 0.5, e - 1, e).astype(np.int64)


def _dyadic():
    def split(x):
        x = np.asarray(x, dtype=float)
        n = np.clip(_dyadic_n(np.maximum(x, 1.0)), 1, _DYADIC_NMAX)
        start = np.exp2(n - 1.0)
        return x, n, start

    def u(x):
        xa, n, start = split(x)
        t = xa - start
        big = _dyadic_U[n - 1] + 0.5 * (n - 1) * t + t * t / np.exp2(n + 1.0)
        out = np.where(xa <= 1.0, 0.5 * (xa - 1.0) ** 2, big)
        return float(out) if np.ndim(x) == 0 else out

    def du(x):
        xa, n, start = split(x)
        big = 0.5 * (n - 1) + (xa - start) / np.exp2(n)
        out = np.where(xa <= 1.0, xa - 1.0, big)
        return float(out) if np.ndim(x) == 0 else out

    def ddu(x):
        xa, n, _ = split(x)
        out = np.where(xa <= 1.0, 1.0, np.exp2(-n.astype(float)))
        return float(out) if np.ndim(x) == 0 else out

    return dict(u=u, du=du, ddu=ddu)


def _expression(text, beta):
    tree = ex.parse_energy_expression(text)
    if beta is not None:
        tree = ex.add(ex.mul(ex.Num(beta), tree), ex.Fn("lgamma", ex.add(ex.X, ex.ONE)))
    d1 = ex.differentiate(tree)
    try:
        d2 = ex.differentiate(d1)
    except ExpressionError as exc:
        raise ModelSpecError(f"cannot build u'' for {text!r}: {exc}") from exc
    return dict(
        u=ex.compile_expression(tree),
        du=ex.compile_expression(d1),
        ddu=ex.compile_expression(d2),
    ), tree


def make_model(spec) -> EnergyModel:
    """Build an EnergyModel from a ModelSpec or its text form."""
    if isinstance(spec, str):
        spec = parse_model_spec(spec)
    p = dict(spec.params)
    hints = AnalyticHints()
    beta = 0.0
    non_monotone = False
    v = None
    if spec.family == "uniform":
        fns = _uniform()
    elif spec.family == "power":
        fns = _power(p["p"], p["a"])
    elif spec.family == "xlogpower":
        fns = _xlogpower(p["p"])
    elif spec.family == "critical":
        vparams = {k: p[k] for k in ("c", "q", "C") if k in p}
        fns, hints, v = _critical(p["mustar"], p["d"], p["v"], **vparams)
    elif spec.family == "dyadic":
        fns = _dyadic()
        # x^2 u'' -> inf but not monotonically; probing at powers of 2 aliases it
        hints = AnalyticHints(mu_star=-math.inf, gamma_limit=math.inf, ddu_limit=0.0)
        non_monotone = True
    elif spec.family == "expr":
        b = p.get("beta")
        fns, _tree = _expression(p["expr"], b)
        beta = 0.0 if b is None else b
        hints = AnalyticHints(
            mu_star=p.get("mustar"),
            gamma_limit=p.get("gamma", p["d"] - 1.0 if "d" in p else None),
            d=p.get("d"),
            C=p.get("C"),
        )
    else:
        raise ModelSpecError(f"unknown model family {spec.family!r}")
    return EnergyModel(
        family=spec.family,
        u=_errstate(fns["u"]),
        du=_errstate(fns["du"]),
        ddu=_errstate(fns["ddu"]),
        beta=beta,
        analytic_hints=hints,
        spec=spec_to_text(spec),
        params=spec.params,
        non_monotone=non_monotone,
        v=_errstate(v) if v is not None else None,
    )


def from_expression(text: str, beta=None, hints: AnalyticHints | None = None) -> EnergyModel:
    """Programmatic shortcut for ``expr:`` models with arbitrary hints."""
    fns, _tree = _expression(text, beta)
    spec = ModelSpec("expr", tuple(sorted({"expr": text, **({"beta": beta} if beta is not None else {})}.items())))
    return EnergyModel(
        family="expr",
        u=_errstate(fns["u"]),
        du=_errstate(fns["du"]),
        ddu=_errstate(fns["ddu"]),
        beta=0.0 if beta is None else beta,
        analytic_hints=hints or AnalyticHints(),
        spec=spec_to_text(spec),
        params=spec.params,
    )


def alpha(model: EnergyModel, mu: float, k):
    """Poisson parameter alpha_k = exp(-mu k - u(k)), evaluated in log space."""
    la = model.log_alpha(mu, k)
    if np.any(np.asarray(la) > _LOG_MAX):
        raise RangeError(f"alpha overflows for mu={mu} (log alpha up to {np.max(la):.6g})")
    with np.errstate(under="ignore"):
        out = np.exp(la)
    return float(out) if np.ndim(out) == 0 else out
