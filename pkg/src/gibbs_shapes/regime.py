"""Regime classification from the large-x behaviour of u.

Limits are read off fixed dyadic probes x = 2^j, j = 10..40, so a report is
a pure function of the model.  A probe sequence is

* converged when its last five values agree within 1e-6 (limit = their mean),
* zero when it decays geometrically in j (power law in x) toward 0,
* +/-infinite when it is strictly monotone and either exceeds the blow-up
  threshold or its increments decay no faster than 1/j (log-log growth or
  faster),
* inconclusive otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InconclusiveLimit
from .models import EnergyModel

PROBE_J = np.arange(10, 41)
PROBE_X = np.exp2(PROBE_J.astype(float))

SUPERCRITICAL = "Supercritical"
SUBCRITICAL_A = "SubcriticalA"
SUBCRITICAL_B = "SubcriticalB"
CRITICAL = "Critical"

GAUSSIAN = "Gaussian"
DISCRETE_GAUSSIAN = "DiscreteGaussian"
HARD_STEP = "HardStep"

TO_PLUS_INF = "ToPlusInf"
TO_MINUS_INF = "ToMinusInf"
TO_CONST = "ToConst"

_INCONCLUSIVE = None


def _snap(value, digits=8, tol=1e-9):
    """Round a converged probe mean that sits within ``tol`` of ``digits`` decimals.

    -u'(x) approaches mu* like 1/x, so the raw mean carries an O(2^-36) bias;
    left in place it is multiplied by x = 2^40 when v(x) = u + mu* x - ... is probed.
    """
    r = round(value, digits)
    return float(r) + 0.0 if abs(value - r) <= tol * max(1.0, abs(value)) else value


def probe_limit(values, *, tol=1e-6, blowup=1e12, js=PROBE_J):
    """Estimate lim of a probe sequence; returns None when inconclusive."""
    v = np.asarray(values, dtype=float)
    if np.any(np.isnan(v)):
        return _INCONCLUSIVE
    if np.isinf(v[-1]):
        return float(v[-1])
    last = v[-5:]
    if np.ptp(last) <= tol:
        return _snap(float(np.mean(last)))
    a = np.abs(v)
    if np.all(np.diff(a) < 0) and a[-1] < 1e-3 and a[-1] <= 0.5 * a[-6]:
        return 0.0
    d = np.diff(v)
    if np.all(d > 0) or np.all(d < 0):
        sign = 1.0 if d[0] > 0 else -1.0
        if abs(v[-1]) > blowup and sign * v[-1] > 0:
            return sign * math.inf
        if js[-2] * abs(d[-1]) >= 0.9 * js[0] * abs(d[0]):
            return sign * math.inf
    return _INCONCLUSIVE


@dataclass(frozen=True)
class CriticalInfo:
    d: float
    v_behavior: str
    C: Optional[float] = None


@dataclass(frozen=True)
class RegimeReport:
    gamma_limit: float
    mu_star: float
    regime: str
    critical: Optional[CriticalInfo] = None
    local_profile: Optional[str] = None
    local_c: Optional[float] = None
    non_monotone: bool = False
    evidence: tuple = field(default=(), repr=False)  # (x, x^2 u''(x), -u'(x))

    @property
    def local_label(self):
        if self.local_profile == DISCRETE_GAUSSIAN:
            return f"{DISCRETE_GAUSSIAN}({self.local_c:.12g})"
        return self.local_profile

    def to_dict(self):
        out = asdict(self)
        out["evidence"] = [list(row) for row in self.evidence]
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, default=_json_default)

    def to_text(self):
        """Flat key=value block; the first line is a one-line summary."""
        head = f"regime={self.regime}"
        if self.local_profile:
            head += f" local={self.local_label}"
        head += f" mu_star={_fmt(self.mu_star)}"
        lines = [head, f"gamma_limit={_fmt(self.gamma_limit)}"]
        if self.critical is not None:
            lines.append(f"d={_fmt(self.critical.d)}")
            lines.append(f"v_behavior={self.critical.v_behavior}")
            if self.critical.C is not None:
                lines.append(f"C={_fmt(self.critical.C)}")
        if self.non_monotone:
            lines.append("non_monotone=true")
        for x, g, m in self.evidence:
            lines.append(f"probe x={_fmt(x)} x2_ddu={_fmt(g)} neg_du={_fmt(m)}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def _json_default(v):
    return str(v)


def _evidence(model):
    with np.errstate(all="ignore"):
        g = PROBE_X**2 * model.ddu(PROBE_X)
        m = -model.du(PROBE_X)
    return tuple((float(x), float(a), float(b)) for x, a, b in zip(PROBE_X, g, m))


def estimate_mu_star(model: EnergyModel) -> float:
    """mu* = -lim u'(x); hint first, then dyadic probing."""
    if model.analytic_hints.mu_star is not None:
        return float(model.analytic_hints.mu_star)
    with np.errstate(all="ignore"):
        values = -np.asarray(model.du(PROBE_X), dtype=float)
    lim = probe_limit(values)
    if lim is None:
        raise InconclusiveLimit("mu* = -lim u'(x) could not be determined", _evidence(model))
    return lim


def estimate_gamma_limit(model: EnergyModel) -> float:
    if model.analytic_hints.gamma_limit is not None:
        return float(model.analytic_hints.gamma_limit)
    with np.errstate(all="ignore"):
        values = PROBE_X**2 * np.asarray(model.ddu(PROBE_X), dtype=float)
    lim = probe_limit(values)
    if lim is None:
        raise InconclusiveLimit("lim x^2 u''(x) could not be determined", _evidence(model))
    return lim


def estimate_ddu_limit(model: EnergyModel) -> float:
    if model.analytic_hints.ddu_limit is not None:
        return float(model.analytic_hints.ddu_limit)
    with np.errstate(all="ignore"):
        values = np.asarray(model.ddu(PROBE_X), dtype=float)
    lim = probe_limit(values)
    if lim is None:
        raise InconclusiveLimit("lim u''(x) could not be determined", _evidence(model))
    return lim


def decompose_critical(model: EnergyModel, mu_star: float):
    """Split u = -mu* x + (1-d) ln x + v(x).

    Returns ``(d, v, v_behavior, C)`` where ``v`` is a callable and ``C`` is
    None unless v converges.
    """
    hints = model.analytic_hints
    if hints.d is not None:
        d = float(hints.d)
    else:
        d = 1.0 + estimate_gamma_limit(model)
    if not math.isfinite(d) or not math.isfinite(mu_star):
        raise InconclusiveLimit(f"not a critical model (d={d}, mu*={mu_star})", _evidence(model))
    w = 1.0 - d
    if model.v is not None:
        v: Callable = model.v
    else:
        def v(x, _u=model.u):
            with np.errstate(all="ignore"):
                return _u(x) + mu_star * x - w * np.log(x)
    if hints.C is not None:
        return d, v, TO_CONST, float(hints.C)
    values = np.asarray(v(PROBE_X), dtype=float)
    tol = 1e-6
    if model.v is None:
        # u + mu* x - w ln x cancels; allow for the rounding of its largest term
        with np.errstate(all="ignore"):
            x = PROBE_X[-5:]
            scale = np.abs(model.u(x)) + abs(mu_star) * x + abs(w) * np.log(x)
        tol = max(tol, 8 * np.finfo(float).eps * float(np.max(scale)))
    lim = probe_limit(values, tol=tol, blowup=1e3)
    if lim is None:
        raise InconclusiveLimit("lim v(x) could not be determined", _evidence(model))
    if lim == math.inf:
        return d, v, TO_PLUS_INF, None
    if lim == -math.inf:
        return d, v, TO_MINUS_INF, None
    return d, v, TO_CONST, lim


def classify(model: EnergyModel) -> RegimeReport:
    evidence = _evidence(model)
    gamma = estimate_gamma_limit(model)
    mu_star = estimate_mu_star(model)
    if gamma == math.inf:
        c = estimate_ddu_limit(model)
        local_c = None
        if c == 0.0 or abs(c) <= 1e-6:
            profile = GAUSSIAN
        elif c == math.inf:
            profile = HARD_STEP
        elif c > 0:
            profile, local_c = DISCRETE_GAUSSIAN, c
        else:
            raise InconclusiveLimit(f"supercritical model with lim u'' = {c}", evidence)
        return RegimeReport(
            gamma_limit=gamma,
            mu_star=mu_star,
            regime=SUPERCRITICAL,
            local_profile=profile,
            local_c=local_c,
            non_monotone=model.non_monotone,
            evidence=evidence,
        )
    if gamma == -math.inf:
        regime = SUBCRITICAL_A if mu_star == math.inf else SUBCRITICAL_B
        return RegimeReport(gamma_limit=gamma, mu_star=mu_star, regime=regime, evidence=evidence)
    d, _v, behavior, C = decompose_critical(model, mu_star)
    return RegimeReport(
        gamma_limit=gamma,
        mu_star=mu_star,
        regime=CRITICAL,
        critical=CriticalInfo(d=d, v_behavior=behavior, C=C),
        evidence=evidence,
    )


def critical_case(report: RegimeReport) -> str:
    """Sub-case of the critical regime: 'zero', 'gamma' or 'process'."""
    info = report.critical
    if info is None:
        raise ValueError("report is not critical")
    if info.d > 0 or (info.d == 0 and info.v_behavior == TO_MINUS_INF):
        return "gamma"
    if info.d == 0 and info.v_behavior == TO_CONST:
        return "process"
    return "zero"
