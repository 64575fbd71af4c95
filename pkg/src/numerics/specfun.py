"""Complementary error function and exponential integral.

Both are evaluated here rather than through the platform libm so that the
channel closed forms, which subtract large nearly equal erfc/Ei groups,
give the same bits on every target.

erfc / erfcx: Maclaurin series of erf (all terms positive) below
``_ERF_SERIES_CUTOFF``; Laplace continued fraction, evaluated with the
modified Lentz algorithm, above it.

E1 / Ei: log plus power series for z <= 1, continued fraction beyond.
The series branch covers the small-|x| region where the continued
fraction loses accuracy.
"""
from __future__ import annotations

import math

from scipy.optimize import brentq

from src.errors import DomainError, NumericError

EULER_GAMMA = 0.57721566490153286061
_SQRT_PI = math.sqrt(math.pi)

_ERF_SERIES_CUTOFF = 2.0
_E1_SERIES_CUTOFF = 1.0
_MAX_TERMS = 5000
_EPS = 1e-16
_TINY = 1e-300

# Bracket for erfc inversion: erfc(-6) == 2 and erfc(26) ~ 1e-296 in doubles.
_ERFC_INV_BRACKET = (-6.0, 26.0)


def _require_finite(x: float, name: str = "x") -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def _erf_series_sum(x: float) -> float:
    """Sum of (2x^2)^n x / (2n+1)!!, so erf(x) = 2/sqrt(pi) e^{-x^2} * sum."""
    term = x
    total = x
    two_x2 = 2.0 * x * x
    for n in range(1, _MAX_TERMS):
        term *= two_x2 / (2 * n + 1)
        total += term
        if abs(term) <= _EPS * abs(total):
            return total
    raise NumericError(f"erf series did not converge at x={x}")


def _erfcx_continued_fraction(x: float) -> float:
    """erfcx(x) for x >= _ERF_SERIES_CUTOFF.

    erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    """
    f = x
    c = f
    d = 0.0
    for n in range(1, _MAX_TERMS):
        a_n = 0.5 * n
        d = x + a_n * d
        if d == 0.0:
            d = _TINY
        c = x + a_n / c
        if c == 0.0:
            c = _TINY
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) <= _EPS:
            return 1.0 / (_SQRT_PI * f)
    raise NumericError(f"erfc continued fraction did not converge at x={x}")


def erfc(x: float) -> float:
    """Complementary error function. Raises DomainError for non-finite x."""
    x = _require_finite(x)
    if x < 0.0:
        return 2.0 - erfc(-x)
    if x >= _ERF_SERIES_CUTOFF:
        return math.exp(-x * x) * _erfcx_continued_fraction(x)
    erf = 2.0 / _SQRT_PI * math.exp(-x * x) * _erf_series_sum(x)
    return 1.0 - erf


def erfcx(x: float) -> float:
    """Scaled complementary error function e^{x^2} erfc(x).

    Finite for all x >= 0 without underflow; overflows to inf for x < -26.
    """
    x = _require_finite(x)
    if x >= _ERF_SERIES_CUTOFF:
        return _erfcx_continued_fraction(x)
    if x >= 0.0:
        return math.exp(x * x) - 2.0 / _SQRT_PI * _erf_series_sum(x)
    try:
        return 2.0 * math.exp(x * x) - erfcx(-x)
    except OverflowError:
        return math.inf


def erfc_inv(y: float) -> float:
    """Inverse of erfc on (0, 2), solved against this module's erfc."""
    y = _require_finite(y, "y")
    if not 0.0 < y < 2.0:
        raise DomainError(f"erfc_inv needs 0 < y < 2, got {y}")
    if y == 1.0:
        return 0.0
    lo, hi = _ERFC_INV_BRACKET
    if y <= erfc(hi):
        raise DomainError(f"erfc_inv argument too small for double precision: {y}")
    return brentq(lambda x: erfc(x) - y, lo, hi, xtol=1e-15, maxiter=200)


def _e1_series(z: float) -> float:
    # E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
    total = 0.0
    term = 1.0
    for k in range(1, _MAX_TERMS):
        term *= -z / k
        contribution = term / k
        total += contribution
        if abs(contribution) <= _EPS * max(abs(total), _EPS):
            return -EULER_GAMMA - math.log(z) - total
    raise NumericError(f"E1 series did not converge at z={z}")


def _e1_scaled_continued_fraction(z: float) -> float:
    """e^{z} E1(z) for z > _E1_SERIES_CUTOFF (modified Lentz)."""
    b = z + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        a_n = -float(i * i)
        b += 2.0
        d = 1.0 / (a_n * d + b)
        c = b + a_n / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            return h
    raise NumericError(f"E1 continued fraction did not converge at z={z}")


def expint_E1(z: float) -> float:
    """Exponential integral E1(z) for z > 0."""
    z = _require_finite(z, "z")
    if z <= 0.0:
        raise DomainError(f"E1 needs z > 0, got {z}")
    if z <= _E1_SERIES_CUTOFF:
        return _e1_series(z)
    return math.exp(-z) * _e1_scaled_continued_fraction(z)


def expint_E1_scaled(z: float) -> float:
    """e^{z} E1(z) for z > 0; stays O(1/z) where E1 itself underflows."""
    z = _require_finite(z, "z")
    if z <= 0.0:
        raise DomainError(f"E1 needs z > 0, got {z}")
    if z <= _E1_SERIES_CUTOFF:
        return math.exp(z) * _e1_series(z)
    return _e1_scaled_continued_fraction(z)


def expint_Ei(x: float) -> float:
    """Exponential integral Ei(x) = -E1(-x) for x < 0.

    Ei(-inf) is taken as the limit -0.0; x >= 0 and NaN are rejected.
    """
    x = float(x)
    if math.isnan(x) or x >= 0.0:
        raise DomainError(f"Ei is only provided for x < 0, got {x!r}")
    if x == -math.inf:
        return -0.0
    return -expint_E1(-x)
