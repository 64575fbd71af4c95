"""Counting-angle optimisation.

The signal-to-interference difference SID(alpha) = 2 F(alpha, t_s) - F(alpha, inf)
is the first tap minus all later taps. Its maximiser is located three ways:

* ``sid_grid_argmax``: grid search on the quadrature F,
* ``alpha_star_closed_form``: the stationarity condition
  erfc(r0*(alpha) / sqrt(4 D t_s)) = (1 - gamma^2) U(t_s) / (4 erfc(d / sqrt(4 D t_s))),
  solved by erfc inversion,
* ``alpha_star_series``: the small-x series formula, kept for comparison.

BER sweeps over alpha and over the bit-1 amount live here too.
"""
from __future__ import annotations

import math
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from src.channel.model import (
    DEFAULT_MAX_TAPS,
    DEFAULT_TRUNCATION_TOL,
    F_alpha_inf,
    F_alpha_t,
    F_alpha_t_grid,
    U_to_erfc_ratio,
    cap_kernel_integral,
    taps,
)
from src.errors import DomainError, NoInteriorOptimum
from src.link.csk import ber_monte_carlo
from src.models import (
    AppendixConstants,
    ChannelGeometry,
    LinkConfig,
    LinkParams,
    SidCurve,
    SweepResult,
    TapVector,
)
from src.numerics.specfun import erfc_inv
from src.simulation.parallel import run_partitioned

log = structlog.get_logger()

DEFAULT_SID_STEP = math.radians(0.1)

BER_ALPHA_COLUMNS = ("alpha", "ber", "ci_halfwidth", "threshold_used", "errors", "bits", "memory_length")
BER_M_COLUMNS = ("alpha", "m", "ber", "ci_halfwidth", "threshold_used", "errors", "bits")


# ---------------------------------------------------------------------------
# SID
# ---------------------------------------------------------------------------


def sid(geom: ChannelGeometry, alpha: float, t_s: float) -> float:
    if not t_s > 0:
        raise DomainError(f"t_s must be positive, got {t_s!r}")
    return 2.0 * F_alpha_t(geom, alpha, t_s) - F_alpha_inf(geom, alpha)


def alpha_grid(step: float) -> List[float]:
    """{0, step, 2 step, ...} closed with pi."""
    if not step > 0:
        raise DomainError(f"step must be positive, got {step!r}")
    n = int(math.floor(math.pi / step + 1e-9))
    grid = [i * step for i in range(n + 1)]
    if math.pi - grid[-1] > 1e-12:
        grid.append(math.pi)
    else:
        grid[-1] = math.pi
    return grid


def sid_curve(geom: ChannelGeometry, t_s: float, alphas: Sequence[float]) -> SidCurve:
    if not t_s > 0:
        raise DomainError(f"t_s must be positive, got {t_s!r}")
    grid = [float(a) for a in alphas]
    first = F_alpha_t_grid(geom, grid, t_s)
    values = [2.0 * f - F_alpha_inf(geom, a) for a, f in zip(grid, first)]
    best = int(np.argmax(values))
    return SidCurve(alphas=grid, sid_values=values, argmax_alpha=grid[best])


def sid_grid_argmax(geom: ChannelGeometry, t_s: float, step: float = DEFAULT_SID_STEP) -> float:
    """SID maximiser on the grid {0, step, ..., pi}; ties go to the smaller alpha."""
    return sid_curve(geom, t_s, alpha_grid(step)).argmax_alpha


def sid_derivative_changes_sign(curve: SidCurve) -> bool:
    """True when the finite-difference slope turns from >= 0 to <= 0 at the argmax."""
    i = curve.alphas.index(curve.argmax_alpha)
    if i == 0 or i == len(curve.alphas) - 1:
        return False
    left = curve.sid_values[i] - curve.sid_values[i - 1]
    right = curve.sid_values[i + 1] - curve.sid_values[i]
    return left >= 0.0 >= right and (left, right) != (0.0, 0.0)


# ---------------------------------------------------------------------------
# Closed-form optimum
# ---------------------------------------------------------------------------


def appendix_constants(geom: ChannelGeometry, t_s: float, alpha: float) -> AppendixConstants:
    if not t_s > 0:
        raise DomainError(f"t_s must be positive, got {t_s!r}")
    if not 0.0 <= alpha <= math.pi:
        raise DomainError(f"alpha must lie in [0, pi], got {alpha!r}")
    # F_hit / U = gamma * erfc(d/c) / U, formed without underflow
    Y = -2.0 * geom.rr * geom.gamma / U_to_erfc_ratio(geom, t_s)
    x = geom.r0**2 - 2.0 * geom.r0 * geom.rr * math.cos(alpha) + geom.rr**2
    return AppendixConstants(a=geom.D * t_s, Y=Y, M_const=geom.r0**2 / 2.0, x=x)


def _cap_angle(geom: ChannelGeometry, s_squared: float, method: str) -> float:
    argument = (geom.r0**2 + geom.rr**2 - s_squared) / (2.0 * geom.r0 * geom.rr)
    if argument > 1.0:
        raise NoInteriorOptimum(
            f"{method}: arccos argument {argument:.6g} > 1, optimum at alpha = 0",
            boundary_alpha=0.0,
            argument=argument,
        )
    if argument < -1.0:
        raise NoInteriorOptimum(
            f"{method}: arccos argument {argument:.6g} < -1, optimum saturates at alpha = pi",
            boundary_alpha=math.pi,
            argument=argument,
        )
    return math.acos(argument)


def alpha_star_closed_form(geom: ChannelGeometry, t_s: float) -> float:
    """SID maximiser from the exact stationarity condition.

    Raises NoInteriorOptimum (with ``boundary_alpha``) when SID is monotone
    on [0, pi].
    """
    if not t_s > 0:
        raise DomainError(f"t_s must be positive, got {t_s!r}")
    gamma = geom.gamma
    c = math.sqrt(4.0 * geom.D * t_s)
    level = (1.0 - gamma * gamma) * U_to_erfc_ratio(geom, t_s) / 4.0
    if level >= 1.0:
        s_star = 0.0
    else:
        try:
            s_star = c * erfc_inv(level)
        except DomainError:
            # level below double precision: s* is effectively infinite
            s_star = math.inf
    return _cap_angle(geom, s_star * s_star, "closed form")


def alpha_star_series(geom: ChannelGeometry, t_s: float) -> float:
    """Optimum from the small-x series expansion of SID.

    x* = pi a ((Y + M) / Y)^2, alpha* = arccos((r0^2 + rr^2 - x*) / (2 r0 rr)).
    """
    constants = appendix_constants(geom, t_s, 0.0)
    root = math.sqrt(math.pi * constants.a) * (constants.Y + constants.M_const) / constants.Y
    return _cap_angle(geom, root * root, "series")


def appendix_series_gap(geom: ChannelGeometry, t_s: float, alphas: Sequence[float]) -> float:
    """Largest relative error of the small-x SID_1 series over ``alphas``.

    Exact SID_1(x) = Y H(sqrt(x), t_s); series Y / sqrt(x) - Y ln(x) / (2 sqrt(pi a)).
    """
    worst = 0.0
    for alpha in alphas:
        constants = appendix_constants(geom, t_s, alpha)
        root_x = math.sqrt(constants.x)
        exact = constants.Y * cap_kernel_integral(root_x, t_s, geom.D)
        series = constants.Y / root_x - constants.Y * math.log(constants.x) / (2.0 * math.sqrt(math.pi * constants.a))
        if exact != 0.0:
            worst = max(worst, abs(series - exact) / abs(exact))
    return worst


# ---------------------------------------------------------------------------
# BER sweeps
# ---------------------------------------------------------------------------


def _ber_alpha_point(task: Tuple[ChannelGeometry, float, float, LinkParams, Optional[int], float, int]) -> tuple:
    geom, t_s, alpha, params, L, tol, max_taps = task
    vector = taps(geom, alpha, t_s, L=L, tol=tol, max_taps=max_taps)
    result = ber_monte_carlo(LinkConfig.from_params(vector, params), workers=1)
    log.info("ber_point_done", alpha=alpha, ber=result.ber, threshold=result.threshold)
    return (
        alpha,
        result.ber,
        result.confidence_halfwidth_95,
        result.threshold,
        result.errors,
        result.bits,
        vector.memory_length,
    )


def sweep_ber_vs_alpha(
    geom: ChannelGeometry,
    t_s: float,
    alphas: Sequence[float],
    params: LinkParams,
    L: Optional[int] = None,
    tol: float = DEFAULT_TRUNCATION_TOL,
    max_taps: int = DEFAULT_MAX_TAPS,
    workers: Optional[int] = None,
) -> SweepResult:
    """BER at each alpha with taps rebuilt and the threshold re-optimised per point.

    Every point uses the same bit sequence (same seed), so orderings across
    alpha compare like with like.
    """
    if not alphas:
        raise DomainError("alpha grid is empty")
    tasks = [(geom, t_s, float(a), params, L, tol, max_taps) for a in alphas]
    sweep = SweepResult(columns=BER_ALPHA_COLUMNS)
    for row in run_partitioned(_ber_alpha_point, tasks, workers):
        sweep.add_row(*row)
    sweep.meta.update({"r0": geom.r0, "rr": geom.rr, "D": geom.D, "t_s": t_s, "n1": params.n1, "seed": params.seed})
    return sweep


def _ber_m_point(task: Tuple[TapVector, int, LinkParams]) -> tuple:
    vector, m, params = task
    cfg = replace(LinkConfig.from_params(vector, params), n1=m)
    result = ber_monte_carlo(cfg, workers=1)
    log.info("ber_point_done", alpha=vector.alpha, m=m, ber=result.ber, threshold=result.threshold)
    return (
        vector.alpha,
        m,
        result.ber,
        result.confidence_halfwidth_95,
        result.threshold,
        result.errors,
        result.bits,
    )


def sweep_ber_vs_m(
    geom: ChannelGeometry,
    t_s: float,
    alpha: float,
    m_values: Sequence[int],
    params: LinkParams,
    L: Optional[int] = None,
    tol: float = DEFAULT_TRUNCATION_TOL,
    max_taps: int = DEFAULT_MAX_TAPS,
    workers: Optional[int] = None,
) -> SweepResult:
    """BER against the bit-1 amount M at one counting angle."""
    if not m_values:
        raise DomainError("M grid is empty")
    vector = taps(geom, alpha, t_s, L=L, tol=tol, max_taps=max_taps)
    tasks = [(vector, int(m), params) for m in m_values]
    sweep = SweepResult(columns=BER_M_COLUMNS)
    for row in run_partitioned(_ber_m_point, tasks, workers):
        sweep.add_row(*row)
    sweep.meta.update({"r0": geom.r0, "rr": geom.rr, "D": geom.D, "t_s": t_s, "alpha": alpha, "seed": params.seed})
    return sweep


def ber_grid_argmin(sweep: SweepResult) -> float:
    """Alpha with the lowest BER in an alpha sweep; ties go to the first row."""
    bers = sweep.column("ber")
    if not bers:
        raise DomainError("empty sweep")
    return float(sweep.column("alpha")[int(np.argmin(bers))])
