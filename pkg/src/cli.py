"""Command-line front end.

    python -m src.cli cdf --config default.yaml --format csv --out results/cdf.csv
    python -m src.cli ber --vary m --seed 11 --workers 4
    python -m src.cli optimize --skip-ber

Tables go to stdout (or ``--out``); logs go to stderr. Angles are in
radians except in ``optimize`` and ``angular``, whose columns say ``_deg``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
import yaml
from pydantic import ValidationError

from src.channel.model import (
    F_alpha_t,
    angular_normalization,
    fhit,
    full_sphere_peak_time,
    p_theta_inf_argmax,
    peak_time,
    taps,
)
from src.config import (
    ExperimentConfig,
    degrees_to_alpha,
    get_settings,
    load_experiment_config,
    resolve_config_path,
)
from src.errors import DomainError, NoInteriorOptimum, NoIntersectionError, NumericError
from src.logging_config import configure_logging
from src.models import REFERENCE_ANGULAR_MODES_DEG, ChannelGeometry, SweepResult
from src.optimize.sid import (
    BER_M_COLUMNS,
    alpha_grid,
    alpha_star_closed_form,
    alpha_star_series,
    appendix_series_gap,
    ber_grid_argmin,
    sid_grid_argmax,
    sweep_ber_vs_alpha,
    sweep_ber_vs_m,
)
from src.reporting import FORMATS, write_table
from src.simulation.montecarlo import RECORD_COLUMNS, empirical_cdf, empirical_taps, records_table_rows, simulate

log = structlog.get_logger()

EXIT_CODES = {
    "ok": 0,
    "config": 2,  # validation, YAML, out-of-domain input
    "numeric": 3,  # quadrature, bracketing, simulator state
    "io": 4,
}

CDF_COLUMNS = ("alpha", "t", "F_analytic", "F_empirical", "fhit", "n_molecules")
TAPS_COLUMNS = ("alpha", "source", "n", "p_n", "tail_mass")
OPTIMIZE_COLUMNS = (
    "r0",
    "rr",
    "D",
    "t_s",
    "alpha_star_closed_form_deg",
    "closed_form_status",
    "alpha_star_series_deg",
    "series_status",
    "alpha_star_sid_grid_deg",
    "alpha_star_ber_grid_deg",
    "gap_closed_form_sid_deg",
    "gap_sid_ber_deg",
    "series_gap",
)
PEAK_COLUMNS = ("d", "alpha", "t_peak", "t_peak_full_sphere", "slope")
ANGULAR_COLUMNS = ("r0", "rr", "gamma", "mode_deg", "reference_deg", "normalization", "normalization_error")

INTERIOR = "interior"
BOUNDARY = "boundary"


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _geometry_meta(config: ExperimentConfig, command: str) -> dict:
    g = config.geometry
    return {"command": command, "r0": g.r0, "rr": g.rr, "D": g.D, "t_s": config.timing.t_s}


def _bounded(fn: Callable[[ChannelGeometry, float], float], geom: ChannelGeometry, t_s: float) -> Tuple[float, str]:
    """Run an alpha* solver; a boundary outcome becomes (endpoint, "boundary")."""
    try:
        return fn(geom, t_s), INTERIOR
    except NoInteriorOptimum as exc:
        log.info("alpha_star_boundary", solver=fn.__name__, boundary_alpha=exc.boundary_alpha, argument=exc.argument)
        return exc.boundary_alpha, BOUNDARY


def _tap_alphas(config: ExperimentConfig) -> List[float]:
    alphas = list(config.region.alphas)
    if config.region.include_alpha_star:
        star, _ = _bounded(alpha_star_closed_form, config.geometry.to_geometry(), config.timing.t_s)
        if not any(math.isclose(star, a, abs_tol=1e-12) for a in alphas):
            alphas.append(star)
    return alphas


def _deg(value: Optional[float]) -> Optional[float]:
    return None if value is None else math.degrees(value)


def _gap_deg(a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None or b is None:
        return None
    return abs(math.degrees(a) - math.degrees(b))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_cdf(config: ExperimentConfig, args: argparse.Namespace) -> SweepResult:
    geom = config.geometry.to_geometry()
    alphas = config.region.alphas
    times = config.timing.times

    empirical = None
    if not args.analytic_only:
        sim = config.sim_config(horizon=max(times))
        records = simulate(sim, workers=args.workers)
        empirical = empirical_cdf(records, sim.n_molecules, alphas, times)

    table = SweepResult(columns=CDF_COLUMNS, meta=_geometry_meta(config, "cdf"))
    for i, alpha in enumerate(alphas):
        for j, t in enumerate(times):
            table.add_row(
                alpha,
                t,
                F_alpha_t(geom, alpha, t),
                empirical.cell(i, j) if empirical else None,
                fhit(geom, t),
                empirical.n_molecules if empirical else None,
            )
    return table


def cmd_taps(config: ExperimentConfig, args: argparse.Namespace) -> SweepResult:
    geom = config.geometry.to_geometry()
    t_s = config.timing.t_s
    vectors = [
        taps(
            geom,
            alpha,
            t_s,
            L=config.timing.memory_length,
            tol=config.timing.truncation_tol,
            max_taps=get_settings().MAX_TAPS,
        )
        for alpha in _tap_alphas(config)
    ]

    table = SweepResult(columns=TAPS_COLUMNS, meta=_geometry_meta(config, "taps"))
    for vector in vectors:
        for n, p in enumerate(vector.taps, start=1):
            table.add_row(vector.alpha, "analytic", n, p, vector.tail_mass)

    if args.empirical:
        longest = max(v.memory_length for v in vectors)
        sim = config.sim_config(horizon=longest * t_s)
        records = simulate(sim, workers=args.workers)
        for vector in vectors:
            measured = empirical_taps(records, sim.n_molecules, geom, vector.alpha, t_s, vector.memory_length)
            for n, p in enumerate(measured.taps, start=1):
                table.add_row(vector.alpha, "empirical", n, p, measured.tail_mass)
        table.meta["n_molecules"] = sim.n_molecules
    return table


def cmd_ber(config: ExperimentConfig, args: argparse.Namespace) -> SweepResult:
    geom = config.geometry.to_geometry()
    t_s = config.timing.t_s
    params = config.link.to_params()
    common = dict(
        params=params,
        L=config.timing.memory_length,
        tol=config.timing.truncation_tol,
        max_taps=get_settings().MAX_TAPS,
        workers=args.workers,
    )

    if config.sweep.vary == "alpha":
        grid = alpha_grid(math.radians(config.sweep.ber_alpha_step_deg))
        table = sweep_ber_vs_alpha(geom, t_s, grid, **common)
    else:
        table = SweepResult(columns=BER_M_COLUMNS)
        for alpha in _tap_alphas(config):
            table.extend(sweep_ber_vs_m(geom, t_s, alpha, config.link.m_values, **common))
    table.meta.update(_geometry_meta(config, "ber"))
    table.meta.update({"vary": config.sweep.vary, "n_bits": params.n_bits, "seed": params.seed})
    return table


def cmd_optimize(config: ExperimentConfig, args: argparse.Namespace) -> SweepResult:
    geom = config.geometry.to_geometry()
    t_s = config.timing.t_s

    closed, closed_status = _bounded(alpha_star_closed_form, geom, t_s)
    series, series_status = _bounded(alpha_star_series, geom, t_s)
    sid_best = sid_grid_argmax(geom, t_s, math.radians(config.sweep.sid_step_deg))

    ber_best = None
    if not args.skip_ber:
        sweep = sweep_ber_vs_alpha(
            geom,
            t_s,
            alpha_grid(math.radians(config.sweep.ber_alpha_step_deg)),
            config.link.to_params(),
            L=config.timing.memory_length,
            tol=config.timing.truncation_tol,
            max_taps=get_settings().MAX_TAPS,
            workers=args.workers,
        )
        ber_best = ber_grid_argmin(sweep)

    table = SweepResult(columns=OPTIMIZE_COLUMNS, meta=_geometry_meta(config, "optimize"))
    table.add_row(
        geom.r0,
        geom.rr,
        geom.D,
        t_s,
        _deg(closed),
        closed_status,
        _deg(series),
        series_status,
        _deg(sid_best),
        _deg(ber_best),
        _gap_deg(closed, sid_best),
        _gap_deg(sid_best, ber_best),
        appendix_series_gap(geom, t_s, config.region.alphas),
    )
    log.info("optimize_done", closed_form=closed, closed_form_status=closed_status, sid_grid=sid_best, ber_grid=ber_best)
    return table


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log y against log x; None for fewer than two points."""
    if len(x) < 2:
        return None
    slope, _ = np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)
    return float(slope)


def cmd_peak(config: ExperimentConfig, args: argparse.Namespace) -> SweepResult:
    g = config.geometry
    d_values = config.sweep.d_values
    table = SweepResult(columns=PEAK_COLUMNS, meta=_geometry_meta(config, "peak"))
    for alpha in (degrees_to_alpha(a) for a in config.sweep.peak_alphas_deg):
        geometries = [ChannelGeometry.from_distance(d, g.rr, g.D) for d in d_values]
        peaks = [peak_time(geom, alpha) for geom in geometries]
        slope = loglog_slope(d_values, peaks)
        for d, geom, t_peak in zip(d_values, geometries, peaks):
            table.add_row(d, alpha, t_peak, full_sphere_peak_time(geom), slope)
    return table


def cmd_simulate(config: ExperimentConfig, args: argparse.Namespace) -> SweepResult:
    sim = config.sim_config()
    records = simulate(sim, workers=args.workers)
    table = SweepResult(columns=RECORD_COLUMNS, meta=_geometry_meta(config, "simulate"))
    for row in records_table_rows(records):
        table.add_row(*row)
    table.meta.update({"n_molecules": sim.n_molecules, "dt": sim.dt, "t_max": sim.t_max, "seed": sim.seed})
    return table


def cmd_angular(config: ExperimentConfig, args: argparse.Namespace) -> SweepResult:
    g = config.geometry
    table = SweepResult(columns=ANGULAR_COLUMNS, meta=_geometry_meta(config, "angular"))
    for r0 in config.sweep.angular_r0:
        geom = ChannelGeometry(r0=r0, rr=g.rr, D=g.D)
        mode = math.degrees(p_theta_inf_argmax(geom.gamma))
        reference = min(REFERENCE_ANGULAR_MODES_DEG, key=lambda ref: abs(ref - mode))
        total = angular_normalization(geom)
        table.add_row(r0, g.rr, geom.gamma, mode, reference, total, abs(total - geom.gamma))
    return table


COMMANDS: Dict[str, Callable[[ExperimentConfig, argparse.Namespace], SweepResult]] = {
    "cdf": cmd_cdf,
    "taps": cmd_taps,
    "ber": cmd_ber,
    "optimize": cmd_optimize,
    "peak": cmd_peak,
    "simulate": cmd_simulate,
    "angular": cmd_angular,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML experiment config (bare names resolve in PCAR_CONFIG_DIR)")
    common.add_argument("--seed", type=int, default=None, help="Seed for both simulation and link streams")
    common.add_argument("--format", choices=FORMATS, default=None, help="Output format (default csv)")
    common.add_argument("--out", default=None, help="Output path (default stdout)")
    common.add_argument("--workers", type=int, default=None, help="Process-pool width (default WORKERS)")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="BLOCK.FIELD=VALUE",
        help="Override a config field; repeatable",
    )

    parser = argparse.ArgumentParser(description="Partially counting receiver channel toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cdf = sub.add_parser("cdf", parents=[common], help="Analytic vs empirical F(alpha, t)")
    p_cdf.add_argument("--analytic-only", action="store_true", help="Skip the Monte Carlo column")

    p_taps = sub.add_parser("taps", parents=[common], help="Channel taps per counting angle")
    p_taps.add_argument("--empirical", action="store_true", help="Add taps measured from simulated hits")

    p_ber = sub.add_parser("ber", parents=[common], help="Monte Carlo BER sweep")
    p_ber.add_argument("--vary", choices=("alpha", "m"), default=None, help="Sweep variable (default from config)")

    p_opt = sub.add_parser("optimize", parents=[common], help="Optimal counting angle estimates")
    p_opt.add_argument("--skip-ber", action="store_true", help="Leave the BER-grid estimate empty")

    sub.add_parser("peak", parents=[common], help="Peak hitting time over a distance grid")
    sub.add_parser("simulate", parents=[common], help="Raw Monte Carlo hit records")
    sub.add_parser("angular", parents=[common], help="Mode of the angular hit density")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = list(args.set)
    if args.seed is not None:
        overrides += [f"simulation.seed={args.seed}", f"link.seed={args.seed}"]
    if args.format is not None:
        overrides.append(f"output.format={args.format}")
    if args.out is not None:
        overrides.append(f"output.path={json.dumps(args.out)}")
    if getattr(args, "vary", None) is not None:
        overrides.append(f"sweep.vary={args.vary}")
    return load_experiment_config(resolve_config_path(args.config), overrides)


def _report_validation(exc: ValidationError) -> None:
    for error in exc.errors():
        path = ".".join(str(part) for part in error["loc"]) or "<root>"
        print(f"config error: {path}: {error['msg']}", file=sys.stderr)
    log.error("config_invalid", errors=exc.error_count())


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = get_settings()
    configure_logging(settings.LOG_LEVEL, settings.LOG_FILE or None, settings.LOG_FORMAT)
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CODES["config"]

    try:
        config = load_config(args)
        log.info("command_start", command=args.command, settings=settings.safe_config())
        table = COMMANDS[args.command](config, args)
        write_table(table, config.output.format, config.output.path)
    except ValidationError as exc:
        _report_validation(exc)
        return EXIT_CODES["config"]
    except yaml.YAMLError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        log.error("config_invalid", error=str(exc))
        return EXIT_CODES["config"]
    except (NumericError, NoIntersectionError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        log.error("numeric_failure", command=args.command, error=str(exc))
        return EXIT_CODES["numeric"]
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        log.error("domain_error", command=args.command, error=str(exc))
        return EXIT_CODES["config"]
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        log.error("io_failure", command=args.command, error=str(exc))
        return EXIT_CODES["io"]

    log.info("command_done", command=args.command, rows=len(table.rows))
    return EXIT_CODES["ok"]


if __name__ == "__main__":
    sys.exit(main())
