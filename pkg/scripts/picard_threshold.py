#!/usr/bin/env python3
"""Within-step Picard residual ratios along a dt doubling ladder; reports dt*,
the first dt at which some ratio exceeds 1/2."""

import argparse
import math

from csstokes.checks import PICARD_RATIO_TOL, worst_picard_ratio
from csstokes.picard import SimulationAbort, run
from csstokes.presets import full_coupling


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--doublings", type=int, default=12)
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--n", type=int, default=2000)
    args = p.parse_args()

    dt_star = math.inf
    for k in range(args.doublings + 1):
        dt = args.dt * 2 ** k
        cfg = full_coupling(dt=dt, t_end=args.steps * dt, particle_count=args.n, picard_max_iter=50)
        try:
            res = run(cfg)
        except (SimulationAbort, FloatingPointError) as exc:
            print(f"dt {dt:8.4g}  failed: {exc}")
            dt_star = min(dt_star, dt)
            break
        w = worst_picard_ratio(res)
        iters = max(r.iterations for r in res.reports)
        print(f"dt {dt:8.4g}  worst ratio {w:.3e}  max iterations {iters}")
        if w > PICARD_RATIO_TOL:
            dt_star = min(dt_star, dt)
            break
    print(f"dt* = {dt_star:g}")


if __name__ == "__main__":
    main()
