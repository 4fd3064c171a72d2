"""Built-in invariant suite: the table printed by ``csstokes check``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Mode, SimConfig
from .diagnostics import energy_budget, moment_growth_monitor, support_bound_check
from .picard import RunResult, SimulationAbort, initial_state, run

ENERGY_RESIDUAL_TOL = 5e-3
ENERGY_REFINEMENT_FACTOR = 3.0
MOMENTUM_DRIFT_TOL = 1e-6
PICARD_RATIO_TOL = 0.5
# roundoff allowance for "E nonincreasing"
ENERGY_MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool | None  # None: not applicable to this mode
    value: str
    threshold: str

    @property
    def status(self) -> str:
        return {True: "PASS", False: "FAIL", None: "n/a"}[self.passed]


def mass_check(result: RunResult) -> CheckResult:
    masses = {r.mass for r in result.records}
    return CheckResult("mass", len(masses) == 1, f"{len(masses)} distinct value(s)", "exactly constant")


def positivity_check(result: RunResult) -> CheckResult:
    w = result.ensemble.weights
    ok = bool(np.all(w >= 0.0)) and not w.flags.writeable
    return CheckResult("positivity", ok, f"min weight {w.min():.3g}, read-only={not w.flags.writeable}",
                       "weights >= 0, immutable")


def momentum_scale(ensemble, fluid) -> float:
    """sum_i m_i |V_i| + int |u|: total momentum can cancel, this cannot."""
    s = float(ensemble.weights @ np.linalg.norm(ensemble.velocities, axis=1))
    s += float(fluid.grid.integrate(np.linalg.norm(fluid.velocity_grid, axis=0)))
    return s or 1.0


def momentum_drift(result: RunResult) -> float:
    """Largest component drift of total momentum, relative to the initial scale."""
    p = np.array([r.momentum for r in result.records])
    ens, fluid = initial_state(result.config)
    return float(np.max(np.abs(p - p[0])) / momentum_scale(ens, fluid))


def momentum_check(result: RunResult) -> CheckResult:
    if result.config.mode is Mode.FROZEN_FLUID:
        return CheckResult("momentum", None, "external fluid", "-")
    d = momentum_drift(result)
    return CheckResult("momentum", d <= MOMENTUM_DRIFT_TOL, f"relative drift {d:.3e}", f"<= {MOMENTUM_DRIFT_TOL:g}")


def energy_budget_check(coarse: RunResult, fine: RunResult | None) -> CheckResult:
    if coarse.config.mode is Mode.FROZEN_FLUID and coarse.fluid.max_speed > 0:
        return CheckResult("energy-budget", None, "external fluid", "-")
    r1 = energy_budget(coarse.records).max_normalized
    if fine is None:
        return CheckResult("energy-budget", r1 <= ENERGY_RESIDUAL_TOL, f"residual {r1:.3e}",
                           f"<= {ENERGY_RESIDUAL_TOL:g}")
    r2 = energy_budget(fine.records).max_normalized
    factor = r1 / r2 if r2 > 0 else math.inf
    ok = r1 <= ENERGY_RESIDUAL_TOL and factor >= ENERGY_REFINEMENT_FACTOR
    return CheckResult("energy-budget", ok, f"residual {r1:.3e}, dt/2 {r2:.3e} (x{factor:.2f})",
                       f"<= {ENERGY_RESIDUAL_TOL:g}, x>={ENERGY_REFINEMENT_FACTOR:g}")


def energy_monotone(result: RunResult) -> float:
    """Largest step-to-step energy increase relative to E(0)."""
    e = np.array([r.energy for r in result.records])
    if len(e) < 2:
        return -math.inf
    return float(np.max(np.diff(e)) / (e[0] or 1.0))


def energy_monotone_check(result: RunResult) -> CheckResult:
    if result.config.mode is Mode.FROZEN_FLUID and result.fluid.max_speed > 0:
        return CheckResult("energy-monotone", None, "external fluid", "-")
    inc = energy_monotone(result)
    return CheckResult("energy-monotone", inc <= ENERGY_MONOTONE_SLACK, f"max increase {inc:.3e}",
                       f"<= {ENERGY_MONOTONE_SLACK:g} E0")


def support_check(result: RunResult) -> CheckResult:
    s = support_bound_check(result.records, result.config.dt)
    return CheckResult("support-bound", s.passed, f"min margin {s.margins.min():.3e}",
                       "R <= bound + 10 dt (1 + bound)")


def worst_picard_ratio(result: RunResult) -> float:
    ratios = [x for rep in result.reports for x in rep.ratios]
    return max(ratios) if ratios else 0.0


def picard_check(result: RunResult, dt_star: float | None = None) -> CheckResult:
    w = worst_picard_ratio(result)
    star = "" if dt_star is None else (f"; dt* = {dt_star:g}" if math.isfinite(dt_star) else "; dt* > tested range")
    return CheckResult("picard-contraction", w <= PICARD_RATIO_TOL, f"worst ratio {w:.3e}{star}",
                       f"<= {PICARD_RATIO_TOL:g}")


def moment_check(result: RunResult) -> CheckResult:
    rep = moment_growth_monitor(result.records)
    ok = rep.finite and rep.envelope_monotone
    return CheckResult("moment-monitor", ok, f"M3 {rep.m3[0]:.4g} -> {rep.m3[-1]:.4g}, rate {rep.m3_log_rate:.3g}",
                       "finite")


def picard_threshold(config: SimConfig, steps: int = 3, max_doublings: int = 12) -> float:
    """Smallest dt in the doubling ladder dt, 2 dt, 4 dt, ... at which some
    within-step residual ratio exceeds 1/2 (or the step fails). inf if none."""
    if config.mode is not Mode.FULL_COUPLING:
        return math.inf
    for k in range(max_doublings + 1):
        dt = config.dt * 2 ** k
        cfg = config.replace(dt=dt, t_end=steps * dt, picard_max_iter=max(config.picard_max_iter, 50))
        try:
            res = run(cfg)
        except (SimulationAbort, FloatingPointError):
            return dt
        if worst_picard_ratio(res) > PICARD_RATIO_TOL:
            return dt
    return math.inf


def run_suite(config: SimConfig, refine: bool = True, threshold: bool = True):
    """Run ``config`` (and at dt/2 for the refinement study); returns (rows, results)."""
    coarse = run(config)
    fine = None
    if refine:
        fine = run(config.replace(dt=0.5 * config.dt))
    dt_star = picard_threshold(config) if threshold else None
    rows = [
        mass_check(coarse),
        positivity_check(coarse),
        momentum_check(coarse),
        energy_budget_check(coarse, fine),
        energy_monotone_check(coarse),
        support_check(coarse),
        picard_check(coarse, dt_star),
        moment_check(coarse),
    ]
    return rows, dict(coarse=coarse, fine=fine, dt_star=dt_star)


def format_table(rows) -> str:
    w = max(len(r.name) for r in rows)
    lines = [f"{'check':<{w}}  status  value / threshold"]
    for r in rows:
        lines.append(f"{r.name:<{w}}  {r.status:<6}  {r.value}  [{r.threshold}]")
    return "\n".join(lines)
