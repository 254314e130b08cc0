"""Analytic limit shapes F(x) and local profiles G(x)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, partial
from typing import Callable, Optional

import numpy as np
from scipy import special

from . import specfun
from .series import first_index

_SQRT2 = math.sqrt(2.0)
_SQRT_PI = math.sqrt(math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_MIXED_K = _SQRT2 / ((1.0 + _SQRT2) * _SQRT_PI)


def _vectorize(f, x):
    if np.ndim(x) == 0:
        return f(float(x))
    return np.array([f(float(t)) for t in np.ravel(x)]).reshape(np.shape(x))


def step_shape(x):
    """1 on [0, 1], 0 beyond."""
    return _vectorize(lambda t: 1.0 if t <= 1.0 else 0.0, x)


def upper_incomplete_gamma(x, d):
    """Gamma(x; d) = int_x^inf y^(d-1) e^(-y) dy."""
    if not d > 0:
        raise ValueError(f"upper_incomplete_gamma needs d > 0, got {d}")

    def one(t):
        if t < 0:
            raise ValueError(f"x must be >= 0, got {t}")
        if t == 0:
            return math.exp(specfun.lgamma(d))
        return math.exp(specfun.log_gamma_q(d, t) + specfun.lgamma(d))

    return _vectorize(one, x)


def gamma_shape(x, d):
    """Gamma(x; d) / Gamma(d + 1).

    d = 0 is allowed for x > 0 and gives the exponential integral E1(x).
    """
    if d == 0:
        def one(t):
            if not t > 0:
                raise ValueError("gamma_shape with d = 0 needs x > 0")
            return float(special.exp1(t))

        return _vectorize(one, x)
    if not d > 0:
        raise ValueError(f"gamma_shape needs d >= 0, got {d}")

    def one(t):
        if t < 0:
            raise ValueError(f"x must be >= 0, got {t}")
        return specfun.gamma_q(d, t) / d

    return _vectorize(one, x)


def gaussian_tail(x):
    """P(Z >= x), Z standard normal."""
    return specfun.gaussian_tail(x)


@lru_cache(maxsize=64)
def _theta_table(c):
    # k = -K..K with e^{-c k^2/2} >= 1e-18 * (value near the centre)
    K = int(math.ceil(math.sqrt(2.0 * math.log(1e18) / c))) + 1
    ks = np.arange(-K, K + 1)
    w = np.exp(-0.5 * c * ks.astype(float) ** 2)
    # suffix[i] = sum_{j >= i} w[j]; summed from the small end for accuracy
    suffix = np.cumsum(w[::-1])[::-1]
    return K, suffix, float(suffix[0])


def theta_sum(c):
    """M_c = sum over integers k of exp(-c k^2 / 2)."""
    if not c > 0:
        raise ValueError(f"c must be > 0, got {c}")
    return _theta_table(float(c))[2]


def discrete_gaussian_tail(x, c):
    """(1/M_c) * sum_{k >= x} exp(-c k^2 / 2) over integers k."""
    if not c > 0:
        raise ValueError(f"c must be > 0, got {c}")
    K, suffix, total = _theta_table(float(c))

    def one(t):
        if t == -math.inf:
            return 1.0
        if t == math.inf:
            return 0.0
        k = first_index(t)
        if k <= -K:
            return 1.0
        if k > K:
            return 0.0
        return float(suffix[k + K]) / total

    return _vectorize(one, x)


def mixed_counterexample_tail(x):
    """Normalized integral of h over [x, inf), h = e^{-t^2/4} (t > 0), e^{-t^2/2} (t <= 0)."""

    def one(t):
        if t >= 0:
            return _MIXED_K * 2.0 * _SQRT_PI * specfun.gaussian_tail(t / _SQRT2)
        return _MIXED_K * (_SQRT_2PI * (specfun.gaussian_tail(t) - 0.5) + _SQRT_PI)

    return _vectorize(one, x)


def hard_step(x):
    """Indicator of (-inf, 0]."""
    return _vectorize(lambda t: 1.0 if t <= 0.0 else 0.0, x)


def zero_shape(x):
    return _vectorize(lambda t: 0.0, x)


def process_mean(x, C):
    """E #points of the limit process in [x, inf): e^{-C} E1(x)."""
    return _vectorize(lambda t: math.exp(-C) * float(special.exp1(t)) if t > 0 else math.inf, x)


@dataclass(frozen=True)
class ShapeOracle:
    kind: str
    eval: Callable
    param: Optional[float] = None
    deterministic: bool = True

    @property
    def label(self):
        return self.kind if self.param is None else f"{self.kind}({self.param:.12g})"

    def __call__(self, x):
        return self.eval(x)


def make_oracle(kind: str, param: Optional[float] = None) -> ShapeOracle:
    """Build an oracle by name: step, gamma(d), zero, gaussian, discrete_gaussian(c),
    hard_step, mixed, process(C)."""
    kind = kind.lower()
    if kind == "step":
        return ShapeOracle("step", step_shape)
    if kind == "gamma":
        return ShapeOracle("gamma", partial(gamma_shape, d=float(param)), float(param))
    if kind == "zero":
        return ShapeOracle("zero", zero_shape)
    if kind == "gaussian":
        return ShapeOracle("gaussian", gaussian_tail)
    if kind in ("discrete_gaussian", "discretegaussian"):
        c = 1.0 if param is None else float(param)
        return ShapeOracle("discrete_gaussian", partial(discrete_gaussian_tail, c=c), c)
    if kind in ("hard_step", "hardstep"):
        return ShapeOracle("hard_step", hard_step)
    if kind == "mixed":
        return ShapeOracle("mixed", mixed_counterexample_tail)
    if kind == "process":
        C = 0.0 if param is None else float(param)
        # the curve itself is random; its mean measure is used for comparisons
        return ShapeOracle("process", partial(process_mean, C=C), C, deterministic=False)
    raise ValueError(f"unknown oracle {kind!r}")


def auto_shape_oracle(plan) -> ShapeOracle:
    """Global-shape oracle matching a scaling plan."""
    if plan.mode == "step":
        return make_oracle("step")
    if plan.mode == "gamma":
        return make_oracle("gamma", plan.d)
    if plan.mode == "zero":
        return make_oracle("zero")
    return make_oracle("process", plan.C)


def auto_local_oracle(plan) -> ShapeOracle:
    """Local-profile oracle matching a supercritical plan."""
    from . import regime as rg

    if plan.local_profile == rg.DISCRETE_GAUSSIAN:
        return make_oracle("discrete_gaussian", plan.local_c)
    if plan.local_profile == rg.HARD_STEP:
        return make_oracle("hard_step")
    return make_oracle("gaussian")
