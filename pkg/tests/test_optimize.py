"""Tests for src/optimize/sid.py."""
from __future__ import annotations

import math

import pytest

from src.channel.model import F_alpha_inf, F_alpha_t
from src.errors import DomainError, NoInteriorOptimum
from src.models import ChannelGeometry, LinkParams, SweepResult
from src.optimize.sid import (
    BER_ALPHA_COLUMNS,
    BER_M_COLUMNS,
    alpha_grid,
    alpha_star_closed_form,
    alpha_star_series,
    appendix_constants,
    appendix_series_gap,
    ber_grid_argmin,
    sid,
    sid_curve,
    sid_derivative_changes_sign,
    sid_grid_argmax,
    sweep_ber_vs_alpha,
    sweep_ber_vs_m,
)


@pytest.fixture
def small_params():
    return LinkParams(n1=100, n0=0, n_bits=2000, seed=7)


class TestSid:
    def test_empty_cap(self, reference_geometry):
        assert sid(reference_geometry, 0.0, 0.15) == 0.0

    def test_full_sphere(self, reference_geometry):
        """2 fhit(0.15) - gamma for the (10, 5, 80) geometry."""
        assert sid(reference_geometry, math.pi, 0.15) == pytest.approx(-0.19256, abs=1e-4)

    def test_matches_definition(self, reference_geometry):
        alpha = math.pi / 5
        expected = 2.0 * F_alpha_t(reference_geometry, alpha, 0.15) - F_alpha_inf(reference_geometry, alpha)
        assert sid(reference_geometry, alpha, 0.15) == pytest.approx(expected)

    def test_non_positive_symbol_time(self, reference_geometry):
        with pytest.raises(DomainError):
            sid(reference_geometry, 1.0, 0.0)


class TestAlphaGrid:
    def test_exact_division(self):
        grid = alpha_grid(math.pi / 4)
        assert len(grid) == 5
        assert grid[0] == 0.0
        assert grid[-1] == math.pi

    def test_closed_with_pi(self):
        grid = alpha_grid(math.radians(50.0))
        assert len(grid) == 5
        assert grid[-1] == math.pi
        assert all(a < b for a, b in zip(grid, grid[1:]))

    def test_invalid_step(self):
        with pytest.raises(DomainError):
            alpha_grid(0.0)


class TestSidCurve:
    def test_argmax_interior_with_sign_change(self, reference_geometry):
        curve = sid_curve(reference_geometry, 0.15, alpha_grid(math.radians(1.0)))
        assert 0.0 < curve.argmax_alpha < math.pi
        assert sid_derivative_changes_sign(curve)
        assert curve.sid_values[0] == 0.0

    def test_monotone_curve_has_no_sign_change(self, reference_geometry):
        curve = sid_curve(reference_geometry, 1e4, alpha_grid(math.radians(10.0)))
        assert curve.argmax_alpha == math.pi
        assert not sid_derivative_changes_sign(curve)


class TestClosedForm:
    def test_matches_grid_argmax(self, reference_geometry):
        closed = alpha_star_closed_form(reference_geometry, 0.15)
        grid = sid_grid_argmax(reference_geometry, 0.15)
        assert abs(math.degrees(closed - grid)) < 0.25

    def test_stable_under_step_halving(self, reference_geometry):
        coarse = sid_grid_argmax(reference_geometry, 0.15, step=math.radians(0.2))
        fine = sid_grid_argmax(reference_geometry, 0.15, step=math.radians(0.1))
        assert abs(math.degrees(coarse - fine)) <= 0.2 + 1e-9

    def test_is_stationary(self, reference_geometry):
        alpha = alpha_star_closed_form(reference_geometry, 0.15)
        h = math.radians(0.5)
        centre = sid(reference_geometry, alpha, 0.15)
        assert centre >= sid(reference_geometry, alpha - h, 0.15)
        assert centre >= sid(reference_geometry, alpha + h, 0.15)

    def test_longer_symbols_widen_the_cap(self, reference_geometry):
        assert alpha_star_closed_form(reference_geometry, 0.2) > alpha_star_closed_form(reference_geometry, 0.1)

    def test_saturates_at_full_sphere(self, reference_geometry):
        with pytest.raises(NoInteriorOptimum) as excinfo:
            alpha_star_closed_form(reference_geometry, 1e4)
        assert excinfo.value.boundary_alpha == math.pi
        assert excinfo.value.argument < -1.0


class TestSeries:
    def test_appendix_constants(self, reference_geometry):
        constants = appendix_constants(reference_geometry, 0.15, 0.0)
        assert constants.a == pytest.approx(12.0)
        assert constants.Y < 0.0
        assert constants.M_const == 50.0
        assert constants.x == pytest.approx(25.0)
        assert appendix_constants(reference_geometry, 0.15, math.pi).x == pytest.approx(225.0)

    def test_series_leaves_domain(self, reference_geometry):
        with pytest.raises(NoInteriorOptimum) as excinfo:
            alpha_star_series(reference_geometry, 0.15)
        assert excinfo.value.boundary_alpha == math.pi
        assert excinfo.value.argument < -1.0

    def test_series_gap_reported(self, reference_geometry):
        gap = appendix_series_gap(reference_geometry, 0.15, [math.pi / 6, math.pi / 3, math.pi / 2])
        assert math.isfinite(gap)
        assert gap >= 0.0

    def test_invalid_alpha(self, reference_geometry):
        with pytest.raises(DomainError):
            appendix_constants(reference_geometry, 0.15, 4.0)


class TestBerSweeps:
    def test_alpha_sweep_rows(self, reference_geometry, small_params):
        alphas = [math.pi / 6, math.pi / 2, math.pi]
        sweep = sweep_ber_vs_alpha(reference_geometry, 0.15, alphas, small_params, L=10, workers=1)
        assert sweep.columns == BER_ALPHA_COLUMNS
        assert sweep.column("alpha") == alphas
        assert sweep.column("memory_length") == [10, 10, 10]
        assert all(0.0 <= b <= 1.0 for b in sweep.column("ber"))
        assert sweep.meta["seed"] == small_params.seed

    def test_alpha_sweep_worker_invariant(self, reference_geometry, small_params):
        alphas = [math.pi / 6, math.pi]
        one = sweep_ber_vs_alpha(reference_geometry, 0.15, alphas, small_params, L=10, workers=1)
        two = sweep_ber_vs_alpha(reference_geometry, 0.15, alphas, small_params, L=10, workers=2)
        assert one.rows == two.rows

    def test_m_sweep_rows(self, reference_geometry, small_params):
        sweep = sweep_ber_vs_m(reference_geometry, 0.15, math.pi / 4, [20, 60, 100], small_params, L=10, workers=1)
        assert sweep.columns == BER_M_COLUMNS
        assert sweep.column("m") == [20, 60, 100]

    def test_empty_grids(self, reference_geometry, small_params):
        with pytest.raises(DomainError):
            sweep_ber_vs_alpha(reference_geometry, 0.15, [], small_params)
        with pytest.raises(DomainError):
            sweep_ber_vs_m(reference_geometry, 0.15, math.pi, [], small_params)

    def test_ber_grid_argmin_first_tie(self):
        sweep = SweepResult(columns=BER_ALPHA_COLUMNS)
        sweep.add_row(0.5, 0.2, 0.01, 10, 40, 200, 5)
        sweep.add_row(1.0, 0.1, 0.01, 10, 20, 200, 5)
        sweep.add_row(1.5, 0.1, 0.01, 10, 20, 200, 5)
        assert ber_grid_argmin(sweep) == 1.0

    def test_ber_grid_argmin_empty(self):
        with pytest.raises(DomainError):
            ber_grid_argmin(SweepResult(columns=BER_ALPHA_COLUMNS))

    @pytest.mark.slow
    def test_optimal_cap_beats_full_sphere(self, reference_geometry):
        params = LinkParams(n1=100, n0=0, n_bits=50_000, seed=7)
        alpha = alpha_star_closed_form(reference_geometry, 0.15)
        sweep = sweep_ber_vs_alpha(reference_geometry, 0.15, [alpha, math.pi], params, workers=1)
        at_optimum, full = sweep.column("ber")
        assert at_optimum < full


class TestBerOrderings:
    """BER-minimising angle against the SID maximiser and across geometries."""

    @pytest.mark.slow
    def test_sid_argmax_near_ber_argmin(self, reference_geometry):
        params = LinkParams(n1=100, n0=0, n_bits=50_000, seed=7)
        sweep = sweep_ber_vs_alpha(reference_geometry, 0.15, alpha_grid(math.radians(5.0)), params, workers=2)
        gap = ber_grid_argmin(sweep) - sid_grid_argmax(reference_geometry, 0.15)
        assert abs(math.degrees(gap)) < 10.0

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "narrow,wide",
        [
            ((5.0, 80.0), (5.0, 160.0)),  # faster diffusion
            ((7.0, 80.0), (4.0, 80.0)),  # closer transmitter
        ],
        ids=["D", "d"],
    )
    def test_optimum_widens(self, narrow, wide):
        params = LinkParams(n1=100, n0=0, n_bits=20_000, seed=7)
        grid = alpha_grid(math.radians(5.0))
        optima = []
        for d, D in (narrow, wide):
            geom = ChannelGeometry.from_distance(d, 5.0, D)
            sweep = sweep_ber_vs_alpha(geom, 0.15, grid, params, L=60, workers=2)
            optima.append((sid_grid_argmax(geom, 0.15, step=math.radians(0.5)), ber_grid_argmin(sweep)))
        (sid_narrow, ber_narrow), (sid_wide, ber_wide) = optima
        assert sid_wide > sid_narrow
        assert ber_wide >= ber_narrow
