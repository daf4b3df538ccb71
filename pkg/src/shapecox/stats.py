"""Normal and chi-square distribution functions used by the inference code.

Kept dependency-free on purpose: the CDFs come from math.erf/erfc and the
regularized lower incomplete gamma function (series expansion for
x < a + 1, Lentz continued fraction otherwise), and the quantiles invert
them by bisection to absolute tolerance 1e-10.  Accuracy is far beyond
what confidence levels require, and results are bit-stable across
platforms that round erf consistently.
"""

from __future__ import annotations

import math

from .errors import ValidationError

__all__ = ["normal_cdf", "normal_quantile", "chisq_cdf", "chisq_quantile"]

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function."""
    return 0.5 * math.erfc(-float(x) / _SQRT2)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF by bisection, |error| <= 1e-12."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ValidationError(f"probability must be in (0, 1), got {p}")
    lo, hi = -40.0, 40.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _gamma_p_series(a: float, x: float) -> float:
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(1000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_continued_fraction(a: float, x: float) -> float:
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
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
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _regularized_gamma_p(a: float, x: float) -> float:
    """P(a, x), the regularized lower incomplete gamma function."""
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return min(1.0, _gamma_p_series(a, x))
    return max(0.0, 1.0 - _gamma_q_continued_fraction(a, x))


def chisq_cdf(x: float, dof: int) -> float:
    """Chi-square distribution function with dof degrees of freedom."""
    dof = _check_dof(dof)
    x = float(x)
    if x <= 0.0:
        return 0.0
    return _regularized_gamma_p(0.5 * dof, 0.5 * x)


def chisq_quantile(q: float, dof: int) -> float:
    """Inverse chi-square CDF by bisection, |error| <= 1e-10."""
    q = float(q)
    dof = _check_dof(dof)
    if not (0.0 < q < 1.0):
        raise ValidationError(f"probability must be in (0, 1), got {q}")
    lo = 0.0
    hi = dof + 10.0 * math.sqrt(2.0 * dof) + 10.0
    while chisq_cdf(hi, dof) < q:
        hi *= 2.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if chisq_cdf(mid, dof) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _check_dof(dof) -> int:
    if int(dof) != dof or dof < 1:
        raise ValidationError(f"degrees of freedom must be a positive integer, got {dof!r}")
    return int(dof)
