"""Special functions used by the energy models and the limit-shape oracles.

Log-gamma, digamma and trigamma use the Stirling asymptotic series after
shifting the argument above ``_SHIFT`` with the recurrence; all three accept
scalars or numpy arrays and are defined for x > 0 only.
"""

import math

import numpy as np
from scipy.special import erfc

from .errors import NumericalError

_SHIFT = 10.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_2 .. B_16
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)


def _shifted(x):
    """Return (z, n) with z = x + n >= _SHIFT, elementwise."""
    x = np.asarray(x, dtype=float)
    n = np.where(x < _SHIFT, np.ceil(_SHIFT - x), 0.0)
    return x + n, n


def _scalar_out(x, out):
    if np.ndim(x) == 0:
        return float(out)
    return out


def lgamma(x):
    """ln Gamma(x) for x > 0."""
    xa = np.asarray(x, dtype=float)
    z, n = _shifted(xa)
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    power = inv
    for k, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * k * (2 * k - 1)) * power
        power = power * inv2
    out = (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + series
    # undo the shift with a single log of the running product
    prod = np.ones_like(z)
    t = xa.copy()
    for _ in range(int(n.max(initial=0.0))):
        mask = t < z
        prod = np.where(mask, prod * t, prod)
        t = np.where(mask, t + 1.0, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = out - np.log(prod)
    out = np.where(xa > 0, out, np.nan)
    return _scalar_out(x, out)


def digamma(x):
    """psi(x) = d/dx ln Gamma(x) for x > 0."""
    xa = np.asarray(x, dtype=float)
    z, n = _shifted(xa)
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    power = inv2
    for k, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * k) * power
        power = power * inv2
    out = np.log(z) - 0.5 * inv - series
    t = xa.copy()
    for _ in range(int(n.max(initial=0.0))):
        mask = t < z
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(mask, out - 1.0 / t, out)
        t = np.where(mask, t + 1.0, t)
    out = np.where(xa > 0, out, np.nan)
    return _scalar_out(x, out)


def trigamma(x):
    """psi'(x) for x > 0."""
    xa = np.asarray(x, dtype=float)
    z, n = _shifted(xa)
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    power = inv2 * inv
    for b in _BERNOULLI:
        series += b * power
        power = power * inv2
    out = inv + 0.5 * inv2 + series
    t = xa.copy()
    for _ in range(int(n.max(initial=0.0))):
        mask = t < z
        out = np.where(mask, out + 1.0 / (t * t), out)
        t = np.where(mask, t + 1.0, t)
    out = np.where(xa > 0, out, np.nan)
    return _scalar_out(x, out)


def _gamma_p_series(a, x, log_prefactor, eps, max_iter):
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * eps:
            return total * math.exp(log_prefactor)
    raise NumericalError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_q_contfrac(a, x, log_prefactor, eps, max_iter):
    # modified Lentz
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return math.exp(log_prefactor) * h
    raise NumericalError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gamma_q(a, x, eps=1e-15, max_iter=10_000):
    """Regularized upper incomplete gamma Q(a, x) = Gamma(x; a) / Gamma(a)."""
    if a <= 0:
        raise ValueError(f"gamma_q needs a > 0, got {a}")
    if x < 0:
        raise ValueError(f"gamma_q needs x >= 0, got {x}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    log_prefactor = -x + a * math.log(x) - float(lgamma(a))
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x, log_prefactor, eps, max_iter)
    return _gamma_q_contfrac(a, x, log_prefactor, eps, max_iter)


def log_gamma_q(a, x, eps=1e-15, max_iter=10_000):
    """ln Q(a, x); stays finite where Q itself underflows."""
    if a <= 0:
        raise ValueError(f"log_gamma_q needs a > 0, got {a}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return -math.inf
    log_prefactor = -x + a * math.log(x) - float(lgamma(a))
    if x < a + 1.0:
        return math.log1p(-_gamma_p_series(a, x, log_prefactor, eps, max_iter))
    return log_prefactor + math.log(_gamma_q_contfrac(a, x, 0.0, eps, max_iter))


def gaussian_tail(x):
    """P(Z >= x) for a standard normal Z, elementwise."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return _scalar_out(x, out)
