"""Analytical channel of a partially counting absorbing sphere.

Transmitter at distance r0 from the centre of an absorbing sphere of radius
rr; theta is the polar angle of a surface point measured at the centre from
the transmitter axis. Counting happens on the cap theta <= alpha.

F(alpha, t) is evaluated two ways:

* quadrature of the normalised joint density (authoritative), and
* a closed form built on the antiderivative

      H(s, t) = int_s^inf erfc(u / sqrt(4Dt)) / u^2 du
              = erfc(s / sqrt(4Dt)) / s + k * Ei(-s^2 / 4Dt) / sqrt(Dt)

  with k = 1 / (2 sqrt(pi)).

Both paths work with quantities scaled by exp(d^2 / 4Dt) so that ratios of
exponentially small numbers stay representable at small t.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import structlog
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from src.errors import DomainError, NumericError
from src.models import Accuracy, ChannelGeometry, CountingRegion, TapVector
from src.numerics.specfun import erfc, erfcx, expint_E1_scaled

log = structlog.get_logger()

# Coefficient k on the Ei term of H(s, t).
EXACT_EI_COEFFICIENT = 1.0 / (2.0 * math.sqrt(math.pi))
PRINTED_F_EI_COEFFICIENT = 1.0 / math.sqrt(2.0 * math.pi)
PRINTED_U_EI_COEFFICIENT = 1.0

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 10**6 // 21  # subintervals; 21 evaluations each

CLOSED_FORM_TOLERANCE = Accuracy(abs_tol=1e-6, rel_tol=1e-12)

DEFAULT_TRUNCATION_TOL = 1e-4
DEFAULT_MAX_TAPS = 200

PEAK_SEARCH_WINDOW = (1e-6, 1e3)  # seconds
PEAK_GRID_POINTS = 61
PEAK_RELATIVE_TOL = 1e-6


# ---------------------------------------------------------------------------
# Argument checks
# ---------------------------------------------------------------------------


def _check_time(t: float, *, strictly_positive: bool = False) -> float:
    t = float(t)
    if math.isnan(t) or t < 0.0 or (strictly_positive and t == 0.0):
        bound = "> 0" if strictly_positive else ">= 0"
        raise DomainError(f"t must be {bound}, got {t!r}")
    return t


def _check_angle(value: float, name: str = "alpha") -> float:
    value = float(value)
    if not (0.0 <= value <= math.pi):
        raise DomainError(f"{name} must lie in [0, pi], got {value!r}")
    return value


def _diffusion_length(geom: ChannelGeometry, t: float) -> float:
    return math.sqrt(4.0 * geom.D * t)


# ---------------------------------------------------------------------------
# Marginals
# ---------------------------------------------------------------------------


def fhit(geom: ChannelGeometry, t: float) -> float:
    """Probability a molecule has hit the sphere anywhere by time t."""
    t = _check_time(t)
    if t == 0.0:
        return 0.0
    if math.isinf(t):
        return geom.gamma
    return geom.gamma * erfc(geom.d / _diffusion_length(geom, t))


def r0_star(geom: ChannelGeometry, theta: float) -> float:
    """Transmitter-to-surface distance at polar angle theta (cosine rule)."""
    theta = _check_angle(theta, "theta")
    return _r0_star(geom, theta)


def _r0_star(geom: ChannelGeometry, theta: float) -> float:
    # r0^2 + rr^2 - 2 r0 rr cos(theta) = d^2 + 4 r0 rr sin^2(theta/2)
    half = math.sin(0.5 * theta)
    return math.sqrt(geom.d * geom.d + 4.0 * geom.r0 * geom.rr * half * half)


def p_theta_inf(geom: ChannelGeometry, theta: float) -> float:
    """Angular density of eventually absorbed molecules (per radian)."""
    theta = _check_angle(theta, "theta")
    gamma = geom.gamma
    kappa = (_r0_star(geom, theta) / geom.r0) ** 2
    return geom.rr * (1.0 - gamma * gamma) * math.sin(theta) / (2.0 * geom.r0 * kappa**1.5)


def p_theta_inf_argmax(gamma: float) -> float:
    """Polar angle of the maximum of p_theta_inf for rr/r0 = gamma."""
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    g2 = 1.0 + gamma * gamma
    cos_theta = (-g2 + math.sqrt(g2 * g2 + 12.0 * gamma * gamma)) / (2.0 * gamma)
    return math.acos(min(1.0, max(-1.0, cos_theta)))


def angular_normalization(geom: ChannelGeometry) -> float:
    """Quadrature of p_theta_inf over [0, pi]; equals rr / r0."""
    return _integrate(lambda th: p_theta_inf(geom, th), 0.0, math.pi)


# ---------------------------------------------------------------------------
# Quadrature path
# ---------------------------------------------------------------------------


def _scaled_kernel(geom: ChannelGeometry, c: float) -> Callable[[float], float]:
    """theta -> exp(d^2/c^2) * sin(theta) erfc(r0*/c) / kappa^{3/2}."""
    r0, rr = geom.r0, geom.rr

    def kernel(theta: float) -> float:
        half = math.sin(0.5 * theta)
        s = math.sqrt(geom.d * geom.d + 4.0 * r0 * rr * half * half)
        # (d^2 - s^2) / c^2
        exponent = -4.0 * r0 * rr * half * half / (c * c)
        return math.sin(theta) * (r0 / s) ** 3 * math.exp(exponent) * erfcx(s / c)

    return kernel


def _breakpoints(geom: ChannelGeometry, c: float, upper: float) -> Optional[List[float]]:
    # The kernel is a Gaussian bump of width c / sqrt(r0 rr) around theta = 0
    # at small t; give the integrator a hint where it ends.
    edge = 6.0 * c / math.sqrt(geom.r0 * geom.rr)
    if 0.0 < edge < upper:
        return [edge]
    return None


def _integrate(fn: Callable[[float], float], lower: float, upper: float, points: Optional[List[float]] = None) -> float:
    result = quad(
        fn,
        lower,
        upper,
        epsabs=QUAD_EPSABS,
        epsrel=QUAD_EPSREL,
        limit=QUAD_LIMIT,
        points=points,
        full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3:
        log.warning("quadrature_warning", lower=lower, upper=upper, abserr=abserr, message=str(result[3])[:200])
    if not math.isfinite(value):
        raise NumericError(f"quadrature returned non-finite value on [{lower}, {upper}]")
    return value


@lru_cache(maxsize=8192)
def _scaled_normalizer(geom: ChannelGeometry, t: float) -> float:
    c = _diffusion_length(geom, t)
    value = _integrate(_scaled_kernel(geom, c), 0.0, math.pi, _breakpoints(geom, c, math.pi))
    if value <= 0.0:
        raise NumericError(f"angular normaliser vanished at t={t}")
    return value


def _scaled_cap_integral(geom: ChannelGeometry, lower: float, upper: float, t: float) -> float:
    if upper <= lower:
        return 0.0
    c = _diffusion_length(geom, t)
    points = _breakpoints(geom, c, upper)
    if points is not None and points[0] <= lower:
        points = None
    return _integrate(_scaled_kernel(geom, c), lower, upper, points)


def p_theta_t(geom: ChannelGeometry, theta: float, t: float) -> float:
    """Joint density of absorption at angle theta by time t (per radian).

    Integrates to fhit(t) over [0, pi].
    """
    theta = _check_angle(theta, "theta")
    t = _check_time(t, strictly_positive=True)
    if math.isinf(t):
        return p_theta_inf(geom, theta)
    f = fhit(geom, t)
    if f == 0.0 or theta == 0.0:
        return 0.0
    c = _diffusion_length(geom, t)
    return f * _scaled_kernel(geom, c)(theta) / _scaled_normalizer(geom, t)


def U_of_t_quadrature(geom: ChannelGeometry, t: float) -> float:
    """int_0^pi erfc(r0*/sqrt(4Dt)) sin(theta) / kappa^{3/2} by quadrature."""
    t = _check_time(t, strictly_positive=True)
    c = _diffusion_length(geom, t)
    return math.exp(-((geom.d / c) ** 2)) * _scaled_normalizer(geom, t)


def F_alpha_t(
    geom: ChannelGeometry,
    alpha: float,
    t: float,
    method: str = "quadrature",
    cross_check: bool = False,
) -> float:
    """Probability of absorption on the cap theta <= alpha by time t.

    ``method="quadrature"`` is authoritative. With ``cross_check`` the closed
    form is evaluated too and a divergence beyond CLOSED_FORM_TOLERANCE is
    logged; the quadrature value is still returned.
    """
    region = CountingRegion(float(alpha))
    alpha = region.alpha
    t = _check_time(t)
    if alpha == 0.0 or t == 0.0:
        return 0.0
    if math.isinf(t):
        return F_alpha_inf(geom, alpha)
    if region.is_full_sphere:
        return fhit(geom, t)
    if method == "closed_form":
        return F_alpha_t_closed_form(geom, alpha, t)
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")

    f = fhit(geom, t)
    if f == 0.0:
        return 0.0
    value = min(f, f * _scaled_cap_integral(geom, 0.0, alpha, t) / _scaled_normalizer(geom, t))
    if cross_check:
        _report_divergence(geom, alpha, t, value, F_alpha_t_closed_form(geom, alpha, t))
    return value


def F_alpha_t_grid(geom: ChannelGeometry, alphas: Sequence[float], t: float) -> List[float]:
    """F(alpha, t) on an ascending alpha grid by cumulative quadrature."""
    grid = [_check_angle(a) for a in alphas]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise DomainError("alpha grid must be ascending")
    t = _check_time(t)
    if t == 0.0:
        return [0.0] * len(grid)
    if math.isinf(t):
        return [F_alpha_inf(geom, a) for a in grid]

    f = fhit(geom, t)
    if f == 0.0:
        return [0.0] * len(grid)
    scale = f / _scaled_normalizer(geom, t)
    values: List[float] = []
    running = 0.0
    previous = 0.0
    for a in grid:
        running += _scaled_cap_integral(geom, previous, a, t)
        previous = a
        values.append(f if a == math.pi else min(f, scale * running))
    return values


# ---------------------------------------------------------------------------
# Closed-form path
# ---------------------------------------------------------------------------


def cap_kernel_integral(s: float, t: float, D: float, ei_coefficient: float = EXACT_EI_COEFFICIENT) -> float:
    """H(s, t) = int_s^inf erfc(u/sqrt(4Dt)) / u^2 du for s > 0, t > 0."""
    if not (s > 0.0) or not (D > 0.0):
        raise DomainError("cap_kernel_integral needs s > 0 and D > 0")
    t = _check_time(t, strictly_positive=True)
    z = s / math.sqrt(4.0 * D * t)
    return math.exp(-z * z) * (erfcx(z) / s - ei_coefficient * expint_E1_scaled(z * z) / math.sqrt(D * t))


def _scaled_cap_kernel_integral(geom: ChannelGeometry, s: float, t: float, k: float) -> float:
    """exp(d^2/4Dt) * H(s, t)."""
    c = _diffusion_length(geom, t)
    z = s / c
    shift = (geom.d * geom.d - s * s) / (c * c)
    return math.exp(shift) * (erfcx(z) / s - k * expint_E1_scaled(z * z) / math.sqrt(geom.D * t))


def U_of_t(geom: ChannelGeometry, t: float, ei_coefficient: float = EXACT_EI_COEFFICIENT) -> float:
    """Closed form of int_0^pi erfc(r0*/sqrt(4Dt)) sin(theta) / kappa^{3/2} dtheta.

    Equals (r0^2/rr) [H(d) - H(r0 + rr)]; tends to 2 r0^2 / (r0^2 - rr^2).
    """
    t = _check_time(t, strictly_positive=True)
    if math.isinf(t):
        return 2.0 * geom.r0**2 / (geom.r0**2 - geom.rr**2)
    c = _diffusion_length(geom, t)
    scaled = _scaled_cap_kernel_integral(geom, geom.d, t, ei_coefficient) - _scaled_cap_kernel_integral(
        geom, geom.r0 + geom.rr, t, ei_coefficient
    )
    return geom.r0**2 / geom.rr * math.exp(-((geom.d / c) ** 2)) * scaled


def U_to_erfc_ratio(geom: ChannelGeometry, t: float) -> float:
    """U(t) / erfc(d / sqrt(4Dt)), finite even where both factors underflow."""
    t = _check_time(t, strictly_positive=True)
    if math.isinf(t):
        return U_of_t(geom, t)
    c = _diffusion_length(geom, t)
    scaled = _scaled_cap_kernel_integral(geom, geom.d, t, EXACT_EI_COEFFICIENT) - _scaled_cap_kernel_integral(
        geom, geom.r0 + geom.rr, t, EXACT_EI_COEFFICIENT
    )
    return geom.r0**2 / geom.rr * scaled / erfcx(geom.d / c)


def F_alpha_t_closed_form(
    geom: ChannelGeometry,
    alpha: float,
    t: float,
    ei_coefficient: float = EXACT_EI_COEFFICIENT,
    u_ei_coefficient: Optional[float] = None,
) -> float:
    """Closed-form F(alpha, t).

    ``ei_coefficient`` sets k in the numerator groups and ``u_ei_coefficient``
    (defaulting to the same value) in U(t); pass PRINTED_F_EI_COEFFICIENT and
    PRINTED_U_EI_COEFFICIENT to reproduce the typeset variant.
    """
    alpha = _check_angle(alpha)
    t = _check_time(t)
    if u_ei_coefficient is None:
        u_ei_coefficient = ei_coefficient
    if alpha == 0.0 or t == 0.0:
        return 0.0
    if math.isinf(t):
        return F_alpha_inf(geom, alpha)
    f = fhit(geom, t)
    if f == 0.0:
        return 0.0
    h_near_f = _scaled_cap_kernel_integral(geom, geom.d, t, ei_coefficient)
    h_cap = _scaled_cap_kernel_integral(geom, _r0_star(geom, alpha), t, ei_coefficient)
    h_near_u = _scaled_cap_kernel_integral(geom, geom.d, t, u_ei_coefficient)
    h_far_u = _scaled_cap_kernel_integral(geom, geom.r0 + geom.rr, t, u_ei_coefficient)
    return f * (h_near_f - h_cap) / (h_near_u - h_far_u)


def F_alpha_inf(geom: ChannelGeometry, alpha: float) -> float:
    """Eventual absorption probability on the cap theta <= alpha."""
    alpha = _check_angle(alpha)
    gamma = geom.gamma
    if alpha == 0.0:
        return 0.0
    if alpha == math.pi:
        return gamma
    root_kappa = _r0_star(geom, alpha) / geom.r0
    return 0.5 * (1.0 - gamma * gamma) * (1.0 / (1.0 - gamma) - 1.0 / root_kappa)


def _report_divergence(geom: ChannelGeometry, alpha: float, t: float, quadrature: float, closed_form: float) -> bool:
    ok = CLOSED_FORM_TOLERANCE.agrees(closed_form, quadrature)
    if not ok:
        log.warning(
            "closed_form_divergence",
            r0=geom.r0,
            rr=geom.rr,
            D=geom.D,
            alpha=alpha,
            t=t,
            quadrature=quadrature,
            closed_form=closed_form,
        )
    return ok


def closed_form_divergence(
    geom: ChannelGeometry,
    alpha: float,
    t: float,
    ei_coefficient: float = EXACT_EI_COEFFICIENT,
    u_ei_coefficient: Optional[float] = None,
) -> Dict[str, float]:
    """Compare both F paths at one point."""
    quadrature = F_alpha_t(geom, alpha, t)
    closed = F_alpha_t_closed_form(geom, alpha, t, ei_coefficient, u_ei_coefficient)
    ok = _report_divergence(geom, alpha, t, quadrature, closed)
    return {
        "alpha": alpha,
        "t": t,
        "quadrature": quadrature,
        "closed_form": closed,
        "abs_diff": abs(closed - quadrature),
        "within_tolerance": ok,
    }


# ---------------------------------------------------------------------------
# Taps
# ---------------------------------------------------------------------------


def memory_length(
    geom: ChannelGeometry,
    alpha: float,
    t_s: float,
    tol: float = DEFAULT_TRUNCATION_TOL,
    max_taps: int = DEFAULT_MAX_TAPS,
) -> int:
    """Smallest L with F(alpha, inf) - F(alpha, L t_s) < tol F(alpha, inf), capped at max_taps."""
    t_s = _check_time(t_s, strictly_positive=True)
    if max_taps < 1:
        raise DomainError("max_taps must be >= 1")
    limit = F_alpha_inf(geom, alpha)
    if limit == 0.0:
        return 1

    def settled(n: int) -> bool:
        return limit - F_alpha_t(geom, alpha, n * t_s) < tol * limit

    if not settled(max_taps):
        log.debug("memory_length_capped", alpha=alpha, t_s=t_s, max_taps=max_taps)
        return max_taps
    lo, hi = 1, max_taps
    while lo < hi:
        mid = (lo + hi) // 2
        if settled(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def taps(
    geom: ChannelGeometry,
    alpha: float,
    t_s: float,
    L: Optional[int] = None,
    tol: float = DEFAULT_TRUNCATION_TOL,
    max_taps: int = DEFAULT_MAX_TAPS,
) -> TapVector:
    """Per-slot counting probabilities p_n = F(alpha, n t_s) - F(alpha, (n-1) t_s)."""
    alpha = _check_angle(alpha)
    t_s = _check_time(t_s, strictly_positive=True)
    if L is None:
        L = memory_length(geom, alpha, t_s, tol=tol, max_taps=max_taps)
    if L < 1:
        raise DomainError(f"L must be >= 1, got {L}")

    cumulative = [0.0]
    for n in range(1, L + 1):
        # running max keeps p_n >= 0 under quadrature noise
        cumulative.append(max(cumulative[-1], F_alpha_t(geom, alpha, n * t_s)))
    probabilities = tuple(b - a for a, b in zip(cumulative, cumulative[1:]))
    tail = max(0.0, F_alpha_inf(geom, alpha) - cumulative[-1])
    return TapVector(
        taps=probabilities,
        symbol_duration=t_s,
        alpha=alpha,
        geometry=geom,
        tail_mass=tail,
    )


# ---------------------------------------------------------------------------
# Peak time
# ---------------------------------------------------------------------------


def full_sphere_peak_time(geom: ChannelGeometry) -> float:
    return geom.d**2 / (6.0 * geom.D)


def hitting_rate(geom: ChannelGeometry, alpha: float, t: float) -> float:
    """Central finite-difference estimate of dF(alpha, t)/dt."""
    t = _check_time(t, strictly_positive=True)
    h = max(1e-6, 1e-4 * t)
    lower = max(0.0, t - h)
    return (F_alpha_t(geom, alpha, t + h) - F_alpha_t(geom, alpha, lower)) / (t + h - lower)


def peak_time(geom: ChannelGeometry, alpha: float) -> float:
    """Time of the maximum hitting rate on the cap theta <= alpha."""
    alpha = _check_angle(alpha)
    if alpha == 0.0:
        raise DomainError("peak_time needs alpha > 0")

    t_lo, t_hi = PEAK_SEARCH_WINDOW
    # u = ln(t / t_lo) keeps the search variable positive for the relative tolerance
    span = math.log(t_hi / t_lo)
    grid = np.linspace(0.0, span, PEAK_GRID_POINTS)

    def neg_rate(u: float) -> float:
        return -hitting_rate(geom, alpha, t_lo * math.exp(u))

    values = np.array([neg_rate(u) for u in grid])
    best = int(np.argmin(values))
    if values[best] >= 0.0 or best == 0 or best == len(grid) - 1:
        raise NumericError(
            f"could not bracket the hitting-rate maximum for alpha={alpha} "
            f"(grid index {best} of {len(grid)}, rate={-values[best]:.3e})"
        )
    try:
        result = minimize_scalar(
            neg_rate,
            bracket=(grid[best - 1], grid[best], grid[best + 1]),
            method="golden",
            tol=PEAK_RELATIVE_TOL / 10.0,
        )
    except ValueError as exc:
        raise NumericError(f"golden-section search failed for alpha={alpha}: {exc}") from exc
    t_peak = t_lo * math.exp(result.x)
    log.debug("peak_time_found", alpha=alpha, d=geom.d, D=geom.D, t_peak=t_peak)
    return t_peak
