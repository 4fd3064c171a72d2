#!/usr/bin/env python3
"""Energy-budget residual and momentum drift under dt halving on the full-coupling preset."""

import argparse

from csstokes.checks import momentum_drift
from csstokes.diagnostics import energy_budget
from csstokes.picard import run
from csstokes.presets import full_coupling


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--t-end", type=float, default=2.0)
    p.add_argument("--n", type=int, default=2000)
    args = p.parse_args()

    prev = None
    print(f"{'dt':>10}  {'residual':>10}  {'factor':>6}  {'momentum':>10}")
    for k in range(args.levels):
        dt = args.dt / 2 ** k
        res = run(full_coupling(dt=dt, t_end=args.t_end, particle_count=args.n))
        r = energy_budget(res.records).max_normalized
        factor = f"{prev / r:6.2f}" if prev else " " * 6
        print(f"{dt:10.5g}  {r:10.3e}  {factor}  {momentum_drift(res):10.2e}")
        prev = r


if __name__ == "__main__":
    main()
