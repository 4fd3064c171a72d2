"""Coupled time stepping by fixed-point (Picard) iteration within each step.

One step from (X, V, u_old):

* Heun predictor for the particles using u_old at X (stage 1);
* each iteration k samples the current fluid guess u^(k-1) at the predictor
  (stage 2), finishes the particle update, deposits the drag reaction at both
  stages and integrates the Stokes flow from u_old, giving u^(k).

Particles and fluid see the same stage samples, so the momentum handed from one
to the other cancels exactly. The residual between iterates combines the fluid
L2 difference and the largest particle phase-space displacement.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .alignment import AlignmentFields, alignment_force, compute_fields
from .config import Mode, SimConfig
from .coupling import cic_stencil, deposit, interpolate_grid
from .diagnostics import DiagnosticsRecord, make_record
from .grid import get_grid
from .state import FluidState, ParticleEnsemble, init_ensemble, init_fluid
from .stokes import NonFiniteError, stokes_step

log = logging.getLogger(__name__)


class PicardNonConvergence(RuntimeError):
    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = residuals


class SimulationAbort(RuntimeError):
    """A step failed; ``dump_path`` points at the saved state (if any)."""

    def __init__(self, message, dump_path=None, residuals=None):
        super().__init__(message if dump_path is None else f"{message} (state dumped to {dump_path})")
        self.dump_path = dump_path
        self.residuals = residuals


@dataclass(frozen=True)
class PicardResidual:
    particle_part: float
    fluid_part: float
    relative: float

    @property
    def combined(self) -> float:
        return self.fluid_part ** 2 + self.particle_part ** 2


@dataclass
class StepReport:
    residuals: list = field(default_factory=list)  # PicardResidual per iteration
    retried: bool = False

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    @property
    def ratios(self) -> list:
        """F^(k+1) / F^(k) for successive iterations."""
        F = [r.combined for r in self.residuals]
        return [b / a if a > 0 else (0.0 if b == 0 else np.inf) for a, b in zip(F, F[1:])]


def _fluid_l2(grid, a, b) -> float:
    return float(np.sqrt(np.sum((a - b) ** 2) * grid.cell_volume))


def _single_step(ens: ParticleEnsemble, fluid: FluidState, fields0: AlignmentFields, dt: float,
                 config: SimConfig, guess: FluidState | None):
    """Returns (ensemble, fluid, StepReport); raises PicardNonConvergence."""
    mode = config.mode
    grid = fluid.grid
    x0, v0 = ens.positions, ens.velocities
    drag = mode is not Mode.PURE_KINETIC
    st0 = cic_stencil(grid, x0) if drag else None
    f1 = alignment_force(fields0, v0)
    if drag:
        f1 = f1 + interpolate_grid(fluid.velocity_grid, st0) - v0
    pred = ens.evolve(x0 + dt * v0, v0 + dt * f1)
    xs, vs = pred.positions, pred.velocities
    ls = alignment_force(compute_fields(pred, config.kernel), vs)
    x_new = x0 + 0.5 * dt * (v0 + vs)
    report = StepReport()

    if mode is Mode.PURE_KINETIC:
        report.residuals.append(PicardResidual(0.0, 0.0, 0.0))
        return ens.evolve(x_new, v0 + 0.5 * dt * (f1 + ls)), fluid, report

    sts = cic_stencil(grid, xs)
    if mode is Mode.FROZEN_FLUID:
        v_new = v0 + 0.5 * dt * (f1 + ls + interpolate_grid(fluid.velocity_grid, sts) - vs)
        report.residuals.append(PicardResidual(0.0, 0.0, 0.0))
        return ens.evolve(x_new, v_new), fluid, report

    mom0 = deposit(ens, grid, st0)
    moms = deposit(pred, grid, sts)
    g_half = 0.5 * (mom0.j - mom0.rho[None] * fluid.velocity_grid + moms.j)
    u_prev = guess if guess is not None else fluid
    x_prev = v_prev = None
    for _ in range(config.picard_max_iter):
        v_new = v0 + 0.5 * dt * (f1 + ls + interpolate_grid(u_prev.velocity_grid, sts) - vs)
        g = g_half - 0.5 * moms.rho[None] * u_prev.velocity_grid
        u_new = stokes_step(fluid, g, dt)
        fluid_part = _fluid_l2(grid, u_new.velocity_grid, u_prev.velocity_grid)
        if v_prev is None:
            particle_part = 0.0
        else:
            particle_part = float(np.max(np.linalg.norm(x_new - x_prev, axis=1)
                                         + np.linalg.norm(v_new - v_prev, axis=1)))
        F = fluid_part ** 2 + particle_part ** 2
        scale = 2.0 * u_new.energy + float(np.max(np.sum(v_new ** 2, axis=1)))
        rel = F / scale if scale > 0 else F
        report.residuals.append(PicardResidual(particle_part, fluid_part, rel))
        if not np.isfinite(rel):
            raise NonFiniteError("non-finite Picard residual")
        if rel <= config.picard_tol:
            return ens.evolve(x_new, v_new), u_new, report
        u_prev, x_prev, v_prev = u_new, x_new, v_new
    raise PicardNonConvergence(
        f"Picard iteration did not reach tol={config.picard_tol} in {config.picard_max_iter} iterations",
        [r.relative for r in report.residuals])


def coupled_step(ensemble: ParticleEnsemble, fluid: FluidState, config: SimConfig,
                 fields: AlignmentFields | None = None, dt: float | None = None,
                 guess: FluidState | None = None):
    """Advance the coupled system by one step.

    Returns (ensemble, fluid, StepReport). If the iteration stalls the step is
    redone as two half steps; a second failure raises PicardNonConvergence
    carrying both residual traces.
    """
    dt = config.dt if dt is None else dt
    fields = fields if fields is not None else compute_fields(ensemble, config.kernel)
    try:
        return _single_step(ensemble, fluid, fields, dt, config, guess)
    except PicardNonConvergence as first:
        log.warning("Picard stalled at dt=%g; retrying as two half steps", dt)
        try:
            e1, f1, r1 = _single_step(ensemble, fluid, fields, 0.5 * dt, config, None)
            e2, f2, r2 = _single_step(e1, f1, compute_fields(e1, config.kernel), 0.5 * dt, config, None)
        except PicardNonConvergence as second:
            raise PicardNonConvergence(
                f"{second} (after dt halving)", first.residuals + second.residuals) from None
        return e2, f2, StepReport(r1.residuals + r2.residuals, retried=True)


@dataclass
class RunResult:
    config: SimConfig
    records: list
    ensemble: ParticleEnsemble
    fluid: FluidState
    step: int
    time: float
    bound_integral: float
    reports: list
    history: list | None = None


def initial_state(config: SimConfig):
    ensemble = init_ensemble(config)
    if config.mode is Mode.PURE_KINETIC:
        fluid = FluidState.zeros(get_grid(config.box_length, config.grid_n))
    else:
        fluid = init_fluid(config)
    return ensemble, fluid


def _bound_integrand(fields: AlignmentFields, fluid: FluidState, mode: Mode) -> float:
    return fields.b_max + (fluid.max_speed if mode is not Mode.PURE_KINETIC else 0.0)


def _dump(out_dir, config, ensemble, fluid, step, time, bound) -> Path | None:
    if out_dir is None:
        return None
    from .io import write_checkpoint

    path = Path(out_dir) / f"abort_step{step:06d}.npz"
    write_checkpoint(path, config, ensemble, fluid, step, time, bound)
    return path


def run(config: SimConfig, out_dir=None, resume: dict | None = None, keep_history: bool = False,
        max_steps: int | None = None) -> RunResult:
    """Step from t=0 (or a checkpoint) to t_end, recording diagnostics every
    ``output_every`` steps. ``resume`` is the dict from ``io.read_checkpoint``.
    ``max_steps`` stops early (used to produce mid-run checkpoints)."""
    if resume is not None:
        ensemble, fluid = resume["ensemble"], resume["fluid"]
        step, bound = resume["step"], resume["bound_integral"]
    else:
        ensemble, fluid = initial_state(config)
        step, bound = 0, 0.0
    mode, dt = config.mode, config.dt
    grid = fluid.grid
    fields = compute_fields(ensemble, config.kernel)
    stencil = cic_stencil(grid, ensemble.positions)
    integrand = _bound_integrand(fields, fluid, mode)
    records: list[DiagnosticsRecord] = []
    reports: list[StepReport] = []
    history = [fluid] if keep_history else None

    def record(iters):
        records.append(make_record(step * dt, ensemble, fluid, fields, stencil, mode,
                                   ensemble.r0 + bound, iters))

    if step % config.output_every == 0:
        record(0)
    n_steps = config.n_steps if max_steps is None else min(config.n_steps, step + max_steps)
    while step < n_steps:
        try:
            new_ens, new_fluid, rep = coupled_step(ensemble, fluid, config, fields)
        except (PicardNonConvergence, NonFiniteError) as exc:
            path = _dump(out_dir, config, ensemble, fluid, step, step * dt, bound)
            raise SimulationAbort(f"step {step}: {exc}", path, getattr(exc, "residuals", None)) from exc
        ensemble, fluid = new_ens, new_fluid
        step += 1
        reports.append(rep)
        fields = compute_fields(ensemble, config.kernel)
        stencil = cic_stencil(grid, ensemble.positions)
        new_integrand = _bound_integrand(fields, fluid, mode)
        bound += 0.5 * dt * (integrand + new_integrand)
        integrand = new_integrand
        if keep_history:
            history.append(fluid)
        if step % config.output_every == 0:
            record(rep.iterations)
    return RunResult(config, records, ensemble, fluid, step, step * dt, bound, reports, history)
