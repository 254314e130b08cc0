"""Stable sums of the Poisson parameters alpha_k = exp(-mu k - u(k)).

Every sum is accumulated in log space (a running max-shift log-sum-exp over
numpy chunks), so that values like exp(5e5) stay representable through
their logarithm.  Infinite sums are truncated with a certified geometric
tail bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DivergentSeries, NonConvergedTail

DEFAULT_REL_TOL = 1e-10

_CHUNK0 = 4096
_CHUNK_MAX = 1 << 20
_MAX_TERMS = 10**9
_PROBE_J = np.arange(0, 41)
_X_FAR = 2.0**40
# a decay rate below this at x = 2^40 is indistinguishable from mu <= mu*
_DELTA_FLOOR = 1e-9


@dataclass(frozen=True)
class SeriesResult:
    value: float
    log_value: float
    terms_used: int
    tail_bound: float
    log_scale: float
    log_tail_bound: float = -math.inf


def _exp(x):
    return math.exp(x) if x < 709.78 else math.inf


def first_index(t):
    """Smallest integer k with k >= t, treating t within 1e-9 of an integer as that integer."""
    t = float(t)
    r = round(t)
    if abs(t - r) <= 1e-9 * max(1.0, abs(t)):
        return int(r)
    return int(math.ceil(t))


def _terms(mu, w, k):
    with np.errstate(all="ignore"):
        out = -mu * k - w(k)
    return np.where(np.isnan(out), -np.inf, out)


class _LogAccumulator:
    def __init__(self):
        self.m = -math.inf
        self.s = 0.0

    def add(self, lt):
        if lt.size == 0:
            return
        m = float(np.max(lt))
        if m == -math.inf:
            return
        if m > self.m:
            self.s = self.s * math.exp(self.m - m) if self.s else 0.0
            self.m = m
        self.s += float(np.sum(np.exp(lt - self.m)))

    @property
    def log_value(self):
        return self.m + math.log(self.s) if self.s > 0 else -math.inf


def _log_expm1(d):
    return d + math.log1p(-math.exp(-d)) if d > 1.0 else math.log(math.expm1(d))


def _decay_floor(mu, dw, k):
    """min of mu + w'(x) over x = k * 2^j, j = 0..40."""
    xs = float(k) * np.exp2(_PROBE_J.astype(float))
    with np.errstate(all="ignore"):
        d = mu + np.asarray(dw(xs), dtype=float)
    if np.any(np.isnan(d)):
        return -math.inf
    return float(np.min(d))


def log_sum(mu, w, dw, a=1.0, b=math.inf, rel_tol=DEFAULT_REL_TOL) -> SeriesResult:
    """Sum exp(-mu k - w(k)) over integers a <= k < b; w' is needed for b = inf."""
    k0 = max(first_index(a), 1)
    acc = _LogAccumulator()
    if b != math.inf:
        k1 = first_index(b)  # exclusive upper end
        k = k0
        while k < k1:
            n = min(_CHUNK_MAX, k1 - k)
            acc.add(_terms(mu, w, np.arange(k, k + n, dtype=float)))
            k += n
        lv = acc.log_value
        return SeriesResult(_exp(lv), lv, max(k1 - k0, 0), 0.0, acc.m)

    with np.errstate(all="ignore"):
        delta_far = mu + float(dw(_X_FAR))
    if not delta_far > _DELTA_FLOOR:
        raise DivergentSeries(
            f"terms do not decay: mu + w'(2^40) = {delta_far:.3g} (mu <= mu* within probe resolution)"
        )
    k = k0
    chunk = _CHUNK0
    while True:
        if k - k0 >= _MAX_TERMS:
            raise NonConvergedTail(f"no certified tail cut below {_MAX_TERMS} terms")
        ks = np.arange(k, k + chunk, dtype=float)
        lt = _terms(mu, w, ks)
        acc.add(lt)
        k += chunk
        chunk = min(2 * chunk, _CHUNK_MAX)
        last = k - 1
        delta0 = _decay_floor(mu, dw, last)
        if delta0 <= 0:
            continue
        lv = acc.log_value
        log_tail = float(lt[-1]) - _log_expm1(delta0)
        if log_tail == -math.inf or (lv > -math.inf and log_tail <= math.log(rel_tol) + lv):
            return SeriesResult(_exp(lv), lv, k - k0, _exp(log_tail), acc.m, log_tail)
        if lv == -math.inf and log_tail < -745.0:
            # every term underflows: the sum is an exact zero at double precision
            return SeriesResult(0.0, -math.inf, k - k0, _exp(log_tail), acc.m, log_tail)


def sum_S(model, mu, a=1.0, b=math.inf, rel_tol=DEFAULT_REL_TOL) -> SeriesResult:
    """S_mu(a, b) = sum of alpha_k over integers a <= k < b."""
    return log_sum(mu, model.u, model.du, a, b, rel_tol)


def _mass_w(model):
    def w(k):
        return model.u(k) - np.log(k)

    def dw(k):
        return model.du(k) - 1.0 / np.asarray(k, dtype=float)

    return w, dw


def expected_mass(model, mu, rel_tol=DEFAULT_REL_TOL, a=1.0, b=math.inf) -> SeriesResult:
    """E M = sum k alpha_k."""
    w, dw = _mass_w(model)
    return log_sum(mu, w, dw, a, b, rel_tol)


def log_partition(model, mu, rel_tol=DEFAULT_REL_TOL) -> SeriesResult:
    """ln Z(mu) = sum alpha_k (product of Poisson normalizations)."""
    return sum_S(model, mu, 1.0, math.inf, rel_tol)


def expected_F(model, mu, plan, x, rel_tol=DEFAULT_REL_TOL) -> float:
    """E F_mu(x) = S_mu(kappa x, inf) / vertical."""
    s = sum_S(model, mu, max(plan.kappa * float(x), 1.0), math.inf, rel_tol)
    return _exp(s.log_value - plan.log_vertical)


def expected_G(model, mu, plan, x, rel_tol=DEFAULT_REL_TOL) -> float:
    """E G_mu(x) = S_mu(kappa + zeta x, inf) / vertical."""
    s = sum_S(model, mu, max(plan.kappa + plan.zeta * float(x), 1.0), math.inf, rel_tol)
    return _exp(s.log_value - plan.log_vertical)


def concentration_ratio(model, mu, lambda1, lambda2, kappa=None, rel_tol=DEFAULT_REL_TOL) -> float:
    """Share of sum alpha_k carried by kappa l1 <= k <= kappa l2.

    The window is closed at both ends so that it is symmetric about kappa.
    """
    if kappa is None:
        from .scaling import solve_kappa

        kappa = solve_kappa(model, mu)
    total = sum_S(model, mu, 1.0, math.inf, rel_tol)
    lo = max(kappa * lambda1, 1.0)
    if lambda2 == math.inf:
        part = sum_S(model, mu, lo, math.inf, rel_tol)
    else:
        part = sum_S(model, mu, lo, first_index(kappa * lambda2) + 1, rel_tol)
    if total.log_value == -math.inf:
        return 1.0
    return _exp(part.log_value - total.log_value)


def poisson_process_mean(C, a, b=math.inf) -> float:
    """e^{-C} * integral_a^b e^{-t}/t dt."""
    if not 0 < a <= b:
        raise ValueError(f"need 0 < a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    if b == math.inf:
        return math.exp(-C) * float(special.exp1(a))
    val, _err = integrate.quad(lambda t: math.exp(-t) / t, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    return math.exp(-C) * val
