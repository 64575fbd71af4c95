"""BER-optimal counting angle under parameter changes.

Sweeps Monte Carlo BER over alpha for three diffusion coefficients, three
distances and three symbol durations, and prints the BER-minimising angle
next to the SID maximiser. Then compares BER at the optimum against the
full-sphere receiver over an M grid.

Usage:
    python scripts/ordering_report.py
    python scripts/ordering_report.py --n-bits 200000 --step-deg 2 --workers 8
"""
import argparse
import math
import os
import sys
from typing import List, Tuple

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import get_settings
from src.errors import NoInteriorOptimum
from src.logging_config import configure_logging
from src.models import ChannelGeometry, LinkParams
from src.optimize.sid import (
    alpha_grid,
    alpha_star_closed_form,
    ber_grid_argmin,
    sid_grid_argmax,
    sweep_ber_vs_alpha,
    sweep_ber_vs_m,
)

RR = 5.0
BASE_D = 80.0
BASE_DISTANCE = 5.0
BASE_TS = 0.15


def _cases() -> List[Tuple[str, str, ChannelGeometry, float]]:
    cases = []
    for D in (60.0, 80.0, 160.0):
        cases.append(("D", f"{D:g}", ChannelGeometry.from_distance(BASE_DISTANCE, RR, D), BASE_TS))
    for d in (7.0, 5.0, 4.0):
        cases.append(("d", f"{d:g}", ChannelGeometry.from_distance(d, RR, BASE_D), BASE_TS))
    for t_s in (0.10, 0.15, 0.20):
        cases.append(("t_s", f"{t_s:g}", ChannelGeometry.from_distance(BASE_DISTANCE, RR, BASE_D), t_s))
    return cases


def _alpha_star(geom: ChannelGeometry, t_s: float) -> float:
    try:
        return alpha_star_closed_form(geom, t_s)
    except NoInteriorOptimum as exc:
        return exc.boundary_alpha


def main() -> int:
    p = argparse.ArgumentParser(description="Optimal-angle orderings across D, d and t_s")
    p.add_argument("--n-bits", type=int, default=1_000_000)
    p.add_argument("--m", type=int, default=100, help="molecules per bit-1")
    p.add_argument("--step-deg", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--workers", type=int, default=None)
    args = p.parse_args()

    settings = get_settings()
    configure_logging(settings.LOG_LEVEL, settings.LOG_FILE or None, settings.LOG_FORMAT)
    params = LinkParams(n1=args.m, n_bits=args.n_bits, seed=args.seed)
    grid = alpha_grid(math.radians(args.step_deg))

    print(f"{'vary':>5} {'value':>6} {'alpha* BER':>11} {'alpha* SID':>11} {'alpha* closed':>14}")
    print("-" * 52)
    for vary, label, geom, t_s in _cases():
        sweep = sweep_ber_vs_alpha(geom, t_s, grid, params, max_taps=settings.MAX_TAPS, workers=args.workers)
        ber_best = ber_grid_argmin(sweep)
        sid_best = sid_grid_argmax(geom, t_s)
        closed = _alpha_star(geom, t_s)
        print(
            f"{vary:>5} {label:>6} {math.degrees(ber_best):>10.1f}° {math.degrees(sid_best):>10.1f}° "
            f"{math.degrees(closed):>13.1f}°"
        )

    print("\nBER at alpha* vs full sphere")
    print(f"{'M':>5} {'BER alpha*':>12} {'± CI':>10} {'BER pi':>12} {'± CI':>10} {'ok':>4}")
    geom = ChannelGeometry.from_distance(BASE_DISTANCE, RR, BASE_D)
    star = _alpha_star(geom, BASE_TS)
    m_values = [20, 40, 60, 80, 100]
    at_star = sweep_ber_vs_m(geom, BASE_TS, star, m_values, params, max_taps=settings.MAX_TAPS, workers=args.workers)
    at_pi = sweep_ber_vs_m(geom, BASE_TS, math.pi, m_values, params, max_taps=settings.MAX_TAPS, workers=args.workers)
    violations = 0
    for m, b_star, ci_star, b_pi, ci_pi in zip(
        m_values,
        at_star.column("ber"),
        at_star.column("ci_halfwidth"),
        at_pi.column("ber"),
        at_pi.column("ci_halfwidth"),
    ):
        ok = b_star - ci_star <= b_pi + ci_pi
        violations += not ok
        print(f"{m:>5} {b_star:>12.3e} {ci_star:>10.1e} {b_pi:>12.3e} {ci_pi:>10.1e} {'yes' if ok else 'NO':>4}")
    return 0 if violations == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
