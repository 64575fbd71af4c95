"""Monte Carlo check of the analytic counting CDF.

Simulates each parameter set, then compares the empirical F(alpha, t) with the
quadrature value on a 20-point grid up to 10 s for alpha = pi/3, pi/4, pi/6.

Usage:
    python scripts/validate_cdf.py
    python scripts/validate_cdf.py --molecules 20000 --workers 8 --tolerance 0.02
"""
import argparse
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.channel.model import F_alpha_t
from src.config import get_settings
from src.logging_config import configure_logging
from src.models import ChannelGeometry, SimConfig
from src.simulation.montecarlo import empirical_cdf, simulate

# (r0, rr, D)
PARAMETER_SETS = [(10.0, 5.0, 80.0), (9.0, 5.0, 80.0), (10.0, 5.0, 160.0), (20.0, 10.0, 80.0)]
ALPHAS = [math.pi / 3, math.pi / 4, math.pi / 6]
TIMES = [0.5 * i for i in range(1, 21)]


def main() -> int:
    p = argparse.ArgumentParser(description="Empirical vs analytic F(alpha, t)")
    p.add_argument("--molecules", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=0.01)
    args = p.parse_args()

    settings = get_settings()
    configure_logging(settings.LOG_LEVEL, settings.LOG_FILE or None, settings.LOG_FORMAT)

    failures = 0
    for r0, rr, D in PARAMETER_SETS:
        geom = ChannelGeometry(r0=r0, rr=rr, D=D)
        sim = SimConfig(
            geometry=geom,
            dt=args.dt,
            t_max=max(TIMES),
            n_molecules=args.molecules,
            seed=args.seed,
            chunk_molecules=settings.CHUNK_MOLECULES,
        )
        records = simulate(sim, workers=args.workers)
        cdf = empirical_cdf(records, sim.n_molecules, ALPHAS, TIMES)

        print(f"\n(r0, rr, D) = ({r0:g}, {rr:g}, {D:g})")
        print(f"{'alpha':>8} {'max |diff|':>12} {'at t':>8}")
        for i, alpha in enumerate(ALPHAS):
            diffs = [abs(cdf.cell(i, j) - F_alpha_t(geom, alpha, t)) for j, t in enumerate(TIMES)]
            worst = max(range(len(TIMES)), key=lambda j: diffs[j])
            flag = "" if diffs[worst] <= args.tolerance else "  FAIL"
            failures += bool(flag)
            print(f"{math.degrees(alpha):>7.1f}° {diffs[worst]:>12.5f} {TIMES[worst]:>8.2f}{flag}")

    print(f"\n{'All within' if failures == 0 else f'{failures} curve(s) outside'} ±{args.tolerance}")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
