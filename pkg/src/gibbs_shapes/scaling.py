"""Horizontal scale kappa(mu), mass mode kappa_hat, local scale zeta."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import regime as rg
from .errors import NoRoot, RegimeMismatch
from .series import DEFAULT_REL_TOL, expected_mass

_CONVEX_J = np.arange(0, 61)
_MAX_X = 2.0**60


@dataclass(frozen=True)
class ScalingPlan:
    mu: float
    kappa: float
    zeta: float
    vertical: float  # E M / kappa, or 1 in process mode
    log_vertical: float
    regime: str
    mode: str  # step | gamma | zero | process
    kappa_hat: Optional[float] = None
    local_profile: Optional[str] = None
    local_c: Optional[float] = None
    mu_star: float = -math.inf
    d: Optional[float] = None
    C: Optional[float] = None

    def to_dict(self):
        return asdict(self)

    def header_lines(self):
        """'key=value' pairs for CSV provenance comments."""
        out = []
        for k, v in self.to_dict().items():
            if v is None:
                continue
            out.append(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), default=str)


def _convex_start(model):
    """Smallest 2^j with u'' > 0 there and at the next three probes."""
    xs = np.exp2(_CONVEX_J.astype(float))
    with np.errstate(all="ignore"):
        pos = np.asarray(model.ddu(xs), dtype=float) > 0
    for i in range(len(xs) - 3):
        if pos[i : i + 4].all():
            return float(xs[i])
    raise NoRoot("u'' is not eventually positive on the dyadic probes up to 2^60")


def _largest_root(g, model, mu, what):
    x0 = _convex_start(model)
    target = -mu
    f = lambda x: float(g(x)) - target  # noqa: E731
    f0 = f(x0)
    if f0 >= 0:
        raise NoRoot(f"{what}: g({x0:g}) = {f0 + target:.6g} >= -mu = {target:.6g}; root below the convex region")
    lo, hi = x0, 2.0 * x0
    while f(hi) <= 0:
        lo, hi = hi, 2.0 * hi
        if hi > _MAX_X:
            raise NoRoot(f"{what}: no root below 2^60 (mu <= mu*?)")
    return brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def solve_kappa(model, mu) -> float:
    """Largest root of u'(kappa) = -mu."""
    return _largest_root(model.du, model, mu, "kappa")


def solve_kappa_hat(model, mu) -> float:
    """Largest root of u'(x) - 1/x = -mu (mode of k alpha_k)."""
    return _largest_root(lambda x: model.du(x) - 1.0 / x, model, mu, "kappa_hat")


def make_plan(model, report, mu, kappa=None, zeta=None, rel_tol=DEFAULT_REL_TOL) -> ScalingPlan:
    """Scaling plan for (model, mu); ``kappa`` / ``zeta`` override the defaults."""
    mu = float(mu)
    if report.regime in (rg.SUBCRITICAL_A, rg.SUBCRITICAL_B):
        raise RegimeMismatch(f"no limit shape in regime {report.regime}")
    if report.regime == rg.CRITICAL and not mu > report.mu_star:
        raise NoRoot(f"critical plan needs mu > mu* = {report.mu_star}, got {mu}")
    em = expected_mass(model, mu, rel_tol)
    if report.regime == rg.SUPERCRITICAL:
        if kappa is None:
            kappa = solve_kappa(model, mu)
        try:
            kappa_hat = solve_kappa_hat(model, mu)
        except NoRoot:
            kappa_hat = None
        profile = report.local_profile
        if zeta is None:
            if profile == rg.DISCRETE_GAUSSIAN:
                zeta = 1.0
            elif profile == rg.HARD_STEP:
                zeta = math.sqrt(kappa)
            else:
                zeta = 1.0 / math.sqrt(float(model.ddu(kappa)))
        log_v = em.log_value - math.log(kappa)
        return ScalingPlan(
            mu=mu,
            kappa=float(kappa),
            zeta=float(zeta),
            vertical=math.exp(log_v) if log_v < 709 else math.inf,
            log_vertical=log_v,
            regime=report.regime,
            mode="step",
            kappa_hat=kappa_hat,
            local_profile=profile,
            local_c=report.local_c,
            mu_star=report.mu_star,
        )
    # critical
    mu_star = report.mu_star
    kappa = 1.0 / (mu - mu_star) if kappa is None else float(kappa)
    mode = rg.critical_case(report)
    if mode == "process":
        log_v = 0.0
    else:
        log_v = em.log_value - math.log(kappa)
    info = report.critical
    return ScalingPlan(
        mu=mu,
        kappa=kappa,
        zeta=1.0 if zeta is None else float(zeta),
        vertical=math.exp(log_v) if log_v < 709 else math.inf,
        log_vertical=log_v,
        regime=report.regime,
        mode=mode,
        mu_star=mu_star,
        d=info.d,
        C=info.C,
    )
