#!/usr/bin/env python3
"""Run the seeded full-coupling preset and write its time series and checkpoint.

    python3 scripts/run_full_coupling.py --out runs/full --dt 0.01 --t-end 2
"""

import argparse
import time
from pathlib import Path

from csstokes.diagnostics import energy_budget, flocking_metrics, support_bound_check
from csstokes.io import write_checkpoint, write_timeseries
from csstokes.picard import run
from csstokes.presets import full_coupling


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/full_coupling")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-end", type=float, default=2.0)
    p.add_argument("--n", type=int, default=2000, help="particle count")
    args = p.parse_args()

    cfg = full_coupling(dt=args.dt, t_end=args.t_end, particle_count=args.n)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = run(cfg, out_dir=out)
    wall = time.perf_counter() - t0

    write_timeseries(res.records, out / "timeseries.csv")
    write_checkpoint(out / "checkpoint.npz", cfg, res.ensemble, res.fluid, res.step, res.time, res.bound_integral)
    (out / "config.txt").write_text(cfg.to_text())

    first, last = res.records[0], res.records[-1]
    print(f"steps {res.step}, wall {wall:.1f} s")
    print(f"energy {first.energy:.6g} -> {last.energy:.6g}")
    print(f"energy budget residual (max / E0): {energy_budget(res.records).max_normalized:.3e}")
    print(f"support bound holds: {support_bound_check(res.records, cfg.dt).passed}")
    fl = flocking_metrics(res.records)
    print(f"velocity variance {fl.variance[0]:.4g} -> {fl.variance[-1]:.4g} (tail rate {fl.decay_rate:.3g})")
    print(f"picard iterations per step: {min(r.iterations for r in res.reports)}-"
          f"{max(r.iterations for r in res.reports)}")


if __name__ == "__main__":
    main()
