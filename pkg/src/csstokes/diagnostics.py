"""A priori quantities recorded along a run, and the checks built on them.

Energy E = 1/2 sum m |V|^2 + 1/2 int |u|^2 decreases through three
nonnegative dissipation rates: alignment, viscous and drag. Mass is carried by
immutable weights; velocity support grows at most by the integral of
max |b| + max |u|.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .alignment import AlignmentFields, alignment_dissipation
from .config import Mode, WeightSpec
from .coupling import Stencil, drag_dissipation
from .state import FluidState, ParticleEnsemble
from .stokes import viscous_dissipation
from .transport import support_radius

MOMENT_ORDERS = (2, 3, 6)


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    mass: float
    momentum: tuple
    energy_particles: float
    energy_fluid: float
    dissipation_viscous: float
    dissipation_drag: float
    dissipation_alignment: float
    support_radius: float
    support_bound_rhs: float
    moments: tuple  # M_k for k in MOMENT_ORDERS
    velocity_variance: float
    picard_iters: int = 0
    u_max: float = 0.0
    b_max: float = 0.0

    @property
    def energy(self) -> float:
        return self.energy_particles + self.energy_fluid

    @property
    def dissipation(self) -> float:
        return self.dissipation_alignment + self.dissipation_viscous + self.dissipation_drag

    @property
    def momentum_scale(self) -> float:
        return float(np.sum(np.abs(self.momentum)))


def weighted_moments(ensemble: ParticleEnsemble) -> tuple:
    v2 = np.sum(ensemble.velocities ** 2, axis=1)
    return tuple(float(ensemble.weights @ (1.0 + v2) ** (k / 2.0)) for k in MOMENT_ORDERS)


def velocity_variance(ensemble: ParticleEnsemble) -> float:
    m = ensemble.weights
    # shift by one particle's velocity first: a consensus state then gives exactly 0
    w = ensemble.velocities - ensemble.velocities[0]
    mean = (m @ w) / m.sum()
    return float(m @ np.sum((w - mean) ** 2, axis=1))


def make_record(time: float, ensemble: ParticleEnsemble, fluid: FluidState, fields: AlignmentFields,
                stencil: Stencil | None, mode: Mode, support_bound_rhs: float,
                picard_iters: int = 0) -> DiagnosticsRecord:
    m = ensemble.weights
    v = ensemble.velocities
    if mode is Mode.PURE_KINETIC:
        d_drag, d_visc = 0.0, 0.0
    else:
        d_drag = drag_dissipation(stencil, fluid.velocity_grid, v, m)
        d_visc = viscous_dissipation(fluid) if mode is Mode.FULL_COUPLING else 0.0
    momentum = m @ v + fluid.momentum
    return DiagnosticsRecord(
        time=float(time),
        mass=float(np.sum(m)),
        momentum=tuple(float(x) for x in momentum),
        energy_particles=0.5 * float(m @ np.sum(v * v, axis=1)),
        energy_fluid=fluid.energy,
        dissipation_viscous=d_visc,
        dissipation_drag=d_drag,
        dissipation_alignment=alignment_dissipation(fields, m),
        support_radius=support_radius(ensemble),
        support_bound_rhs=float(support_bound_rhs),
        moments=weighted_moments(ensemble),
        velocity_variance=velocity_variance(ensemble),
        picard_iters=int(picard_iters),
        u_max=fluid.max_speed if mode is not Mode.PURE_KINETIC else 0.0,
        b_max=fields.b_max,
    )


def _uniform_spacing(records) -> float:
    t = np.array([r.time for r in records])
    if len(t) < 2:
        return 0.0
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1e-300):
        raise ValueError("records are not uniformly spaced in time")
    return float(dt[0])


def _cumtrapz(y: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * h * (y[1:] + y[:-1]))
    return out


@dataclass(frozen=True)
class EnergyBudget:
    times: np.ndarray
    residual: np.ndarray
    e0: float

    @property
    def max_normalized(self) -> float:
        if self.e0 == 0.0:
            return float(np.max(np.abs(self.residual)))
        return float(np.max(np.abs(self.residual)) / self.e0)


def energy_budget(records, dt: float | None = None) -> EnergyBudget:
    """residual(T) = E(T) + int_0^T (D_align + D_visc + D_drag) dt - E(0), trapezoidal.

    ``dt`` is the record spacing; when given it must agree with the records.
    """
    if not records:
        raise ValueError("energy budget needs at least one record")
    h = _uniform_spacing(records)
    if dt is not None and len(records) > 1 and not math.isclose(h, dt, rel_tol=1e-9):
        raise ValueError(f"record spacing {h} differs from dt={dt}")
    e = np.array([r.energy for r in records])
    d = np.array([r.dissipation for r in records])
    res = e + _cumtrapz(d, h) - e[0]
    return EnergyBudget(np.array([r.time for r in records]), res, float(e[0]))


@dataclass(frozen=True)
class SupportBoundCheck:
    passed: bool
    margins: np.ndarray
    slack_dt: float


def support_bound_check(records, dt: float) -> SupportBoundCheck:
    """R(t) <= bound(t) + 10 dt (1 + bound(t)) at every record; margins are
    (bound + slack) - R."""
    R = np.array([r.support_radius for r in records])
    bound = np.array([r.support_bound_rhs for r in records])
    margins = bound + 10.0 * dt * (1.0 + bound) - R
    return SupportBoundCheck(bool(np.all(margins >= 0.0)), margins, dt)


@dataclass(frozen=True)
class MomentGrowthReport:
    times: np.ndarray
    m3: np.ndarray
    u_max_integral: np.ndarray
    m3_log_rate: float
    u_integral_log_rate: float
    finite: bool
    envelope_monotone: bool

    @property
    def m3_nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.m3) <= 1e-14 * self.m3[0]))


def _log_slope(t, y) -> float:
    ok = y > 0
    if ok.sum() < 2 or np.ptp(t[ok]) == 0:
        return 0.0
    return float(np.polyfit(t[ok], np.log(y[ok]), 1)[0])


def moment_growth_monitor(records) -> MomentGrowthReport:
    """Third velocity moment, running integral of max |u|, and fitted exponential
    growth rates of both. Only finiteness and envelope sanity are checked."""
    t = np.array([r.time for r in records])
    m3 = np.array([r.moments[MOMENT_ORDERS.index(3)] for r in records])
    umax = np.array([r.u_max for r in records])
    h = _uniform_spacing(records)
    uint = _cumtrapz(umax, h)
    envelope = np.maximum.accumulate(m3)
    finite = bool(np.all(np.isfinite(m3)) and np.all(np.isfinite(uint)))
    monotone = bool(np.all(np.diff(envelope) >= 0) and np.all(np.diff(uint) >= 0))
    return MomentGrowthReport(t, m3, uint, _log_slope(t, m3), _log_slope(t[1:], uint[1:]), finite, monotone)


@dataclass(frozen=True)
class FlockingReport:
    times: np.ndarray
    variance: np.ndarray
    decay_rate: float


def flocking_metrics(records) -> FlockingReport:
    """Velocity variance series and its exponential decay rate fitted over the
    final half of the run (0 when the variance vanishes)."""
    t = np.array([r.time for r in records])
    var = np.array([r.velocity_variance for r in records])
    tail = t >= t[0] + 0.5 * (t[-1] - t[0])
    return FlockingReport(t, var, -_log_slope(t[tail], var[tail]))


@dataclass(frozen=True)
class WeightedNormEstimate:
    norm_sq: float
    bins: int
    occupied_bins: int
    mean_count: float
    sparse: bool

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)


def weighted_norm_surrogate(ensemble: ParticleEnsemble, weight: WeightSpec, bins: int,
                            v_extent: float | None = None, unbiased: bool = True) -> WeightedNormEstimate:
    """Histogram estimate of int f^2 omega dx dv.

    Phase space is cut into ``bins`` cells per axis: positions over the box
    (measured from its center), velocities over [-v_extent, v_extent]^3
    (default: just past the support radius). The estimate is biased by binning
    and must not be read as a converged norm; ``sparse`` flags fewer than one
    expected particle per bin: for Poisson counts of mean lam the mean over
    occupied bins is lam / (1 - e^-lam), so the flag is mean_count < 1 / (1 - 1/e). With ``unbiased`` the self-pair term is
    removed from each bin, h^2 -> (S^2 - sum m^2) / vol^2.
    """
    if bins < 1:
        raise ValueError("bins must be positive")
    L = ensemble.box_length
    if v_extent is None:
        v_extent = support_radius(ensemble) * (1.0 + 1e-9) or 1.0
    x = ensemble.positions - 0.5 * L
    v = ensemble.velocities
    dx, dv = L / bins, 2.0 * v_extent / bins
    ix = np.clip(np.floor((x + 0.5 * L) / dx).astype(np.int64), 0, bins - 1)
    iv = np.clip(np.floor((v + v_extent) / dv).astype(np.int64), 0, bins - 1)
    if np.any(np.abs(v) > v_extent):
        warnings.warn("particles outside the velocity window were clipped into edge bins")
    flat = np.ravel_multi_index(tuple(np.concatenate([ix, iv], axis=1).T), (bins,) * 6)
    cells, inverse = np.unique(flat, return_inverse=True)
    m = ensemble.weights
    s1 = np.bincount(inverse, weights=m)
    s2 = np.bincount(inverse, weights=m * m)
    mass2 = s1 * s1 - s2 if unbiased and ensemble.n > 1 else s1 * s1
    vol = dx ** 3 * dv ** 3
    idx = np.array(np.unravel_index(cells, (bins,) * 6)).T
    xc = (idx[:, :3] + 0.5) * dx - 0.5 * L
    vc = (idx[:, 3:] + 0.5) * dv - v_extent
    om = weight.omega(np.sum(xc ** 2, axis=1), np.sum(vc ** 2, axis=1))
    norm_sq = float(np.sum(mass2 / vol * om))
    mean_count = ensemble.n / len(cells)
    sparse = mean_count < 1.0 / (1.0 - math.exp(-1.0))
    return WeightedNormEstimate(norm_sq, bins, len(cells), mean_count, sparse)


def record_field_names() -> list[str]:
    return [f.name for f in fields(DiagnosticsRecord)]
