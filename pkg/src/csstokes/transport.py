"""Particle characteristics: dX/dt = V, dV/dt = L[f](X, V) + u(t, X) - V."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentFields, alignment_force, compute_fields
from .config import KernelSpec
from .coupling import interpolate
from .state import FluidState, ParticleEnsemble
from .stokes import NonFiniteError


@dataclass(frozen=True, eq=False)
class ForceSample:
    alignment: np.ndarray
    drag: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.alignment + self.drag


def forces(ensemble: ParticleEnsemble, fluid_at_particles: np.ndarray, kernel: KernelSpec,
           drag: bool = True, fields: AlignmentFields | None = None) -> ForceSample:
    u = np.asarray(fluid_at_particles, dtype=float)
    if u.shape != ensemble.velocities.shape:
        raise ValueError(f"fluid samples {u.shape} do not match particles {ensemble.velocities.shape}")
    fields = fields if fields is not None else compute_fields(ensemble, kernel)
    align = alignment_force(fields, ensemble.velocities)
    d = u - ensemble.velocities if drag else np.zeros_like(u)
    return ForceSample(align, d)


def rhs(ensemble: ParticleEnsemble, fluid_at_particles: np.ndarray, kernel: KernelSpec,
        drag: bool = True, fields: AlignmentFields | None = None):
    """Return (dX/dt, dV/dt). ``drag=False`` drops the u - V term (pure kinetic model)."""
    f = forces(ensemble, fluid_at_particles, kernel, drag=drag, fields=fields)
    return ensemble.velocities.copy(), f.total


def _check_finite(ens: ParticleEnsemble):
    if not (np.all(np.isfinite(ens.positions)) and np.all(np.isfinite(ens.velocities))):
        raise NonFiniteError("non-finite particle state")


def step_rk2(ensemble: ParticleEnsemble, fluid: FluidState | None, dt: float, kernel: KernelSpec,
             drag: bool = True, fluid_end: FluidState | None = None) -> ParticleEnsemble:
    """One Heun step. Stage 1 samples ``fluid``, stage 2 samples ``fluid_end``
    (defaults to ``fluid``: a frozen field). ``fluid=None`` means u = 0.
    Alignment is re-evaluated at the predictor."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return ensemble
    fluid_end = fluid_end or fluid

    def sample(fl, pos):
        return np.zeros_like(pos) if fl is None else interpolate(fl, pos)

    x0, v0 = ensemble.positions, ensemble.velocities
    dx1, dv1 = rhs(ensemble, sample(fluid, x0), kernel, drag)
    pred = ensemble.evolve(x0 + dt * dx1, v0 + dt * dv1)
    dx2, dv2 = rhs(pred, sample(fluid_end, pred.positions), kernel, drag)
    out = ensemble.evolve(x0 + 0.5 * dt * (dx1 + dx2), v0 + 0.5 * dt * (dv1 + dv2))
    _check_finite(out)
    return out


def step_split_exponential(ensemble: ParticleEnsemble, fluid: FluidState | None, dt: float,
                           kernel: KernelSpec) -> ParticleEnsemble:
    """Strang splitting: exact relaxation V -> u + (V - u) e^{-t} for dt/2 around
    a Heun step of transport plus alignment. For stiff experiments only."""
    if dt == 0:
        return ensemble

    def relax(ens, h):
        u = np.zeros_like(ens.velocities) if fluid is None else interpolate(fluid, ens.positions)
        return ens.evolve(ens.positions, u + (ens.velocities - u) * np.exp(-h))

    mid = step_rk2(relax(ensemble, 0.5 * dt), fluid, dt, kernel, drag=False)
    out = relax(mid, 0.5 * dt)
    _check_finite(out)
    return out


def support_radius(ensemble: ParticleEnsemble) -> float:
    """Largest particle speed, the discrete velocity-support radius R(t)."""
    return float(np.sqrt(np.max(np.sum(ensemble.velocities ** 2, axis=1))))
