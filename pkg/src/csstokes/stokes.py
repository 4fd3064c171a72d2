"""Forced non-stationary Stokes flow on the periodic box, integrated exactly per
Fourier mode with the force frozen over a step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .state import FluidState


class NonFiniteError(FloatingPointError):
    """Non-finite values appeared in the state."""


def leray_project(k, g_hat):
    """Divergence-free part of a single Fourier coefficient: g - k (k.g) / |k|^2."""
    k = np.asarray(k, dtype=float)
    g_hat = np.asarray(g_hat)
    k2 = float(k @ k)
    assert k2 > 0.0, "the k = 0 mode has no Leray projection"
    return g_hat - k * (k @ g_hat) / k2


def project_field(grid: Grid, g_hat: np.ndarray, return_gradient: bool = False):
    """Apply the Leray projector to every mode of a (3, ...) rfft field.

    The k = 0 mode passes through unchanged and Nyquist-plane modes are zeroed.
    With ``return_gradient`` also return the gradient part (I - P) g for the
    remaining modes (zero at k = 0 and on Nyquist planes).
    """
    k = grid.wavevector
    k2 = grid.k2.copy()
    k2[0, 0, 0] = 1.0
    kdotg = np.sum(k * g_hat, axis=0) / k2
    grad = k * kdotg[None]
    grad[:, grid.nyquist] = 0.0
    out = g_hat - grad
    out[:, grid.nyquist] = 0.0
    if return_gradient:
        return out, grad
    return out


def stokes_step(fluid: FluidState, force_grid: np.ndarray, dt: float) -> FluidState:
    """Advance u_t + grad P = Laplace u + g by dt with g held constant.

    Per mode k != 0: u <- e^{-|k|^2 dt} u + (1 - e^{-|k|^2 dt}) / |k|^2 P_k g.
    The mean mode gains dt * g_0. The returned state carries the pressure
    gradient (I - P) g and the applied force as byproducts.
    """
    grid = fluid.grid
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    g_hat = grid.fft(force_grid)
    if not (np.all(np.isfinite(g_hat)) and np.all(np.isfinite(fluid.velocity_spectral))):
        raise NonFiniteError("non-finite spectral data in Stokes step")
    pg, grad = project_field(grid, g_hat, return_gradient=True)
    k2 = grid.k2
    decay = np.exp(-k2 * dt)
    gain = np.empty_like(k2)
    nz = k2 > 0
    gain[nz] = -np.expm1(-k2[nz] * dt) / k2[nz]
    gain[~nz] = dt
    u_hat = decay * fluid.velocity_spectral + gain * pg
    return FluidState.from_spectral(grid, u_hat, pressure_gradient_grid=grid.ifft(grad),
                                    forcing_grid=np.array(force_grid, dtype=float))


def viscous_dissipation(fluid: FluidState) -> float:
    """Box integral of |grad u|^2, from the spectrum via Parseval."""
    grid = fluid.grid
    w = grid.half_weight * grid.k2
    s = np.sum(w * np.sum(np.abs(fluid.velocity_spectral) ** 2, axis=0))
    return float(s) * grid.box_length ** 3 / grid.n ** 6


def divergence_residual(fluid: FluidState) -> float:
    """max over nonzero modes of |k . u_k| / |u_k|."""
    u = fluid.velocity_spectral
    amp = np.sqrt(np.sum(np.abs(u) ** 2, axis=0))
    scale = amp.max()
    if scale == 0.0:
        return 0.0
    mask = amp > 1e-14 * scale
    mask[0, 0, 0] = False
    if not mask.any():
        return 0.0
    kdotu = np.abs(np.sum(fluid.grid.wavevector * u, axis=0))
    return float(np.max(kdotu[mask] / amp[mask]))


def h2_norm(fluid: FluidState) -> float:
    grid = fluid.grid
    w = grid.half_weight * (1.0 + grid.k2) ** 2
    s = np.sum(w * np.sum(np.abs(fluid.velocity_spectral) ** 2, axis=0))
    return float(np.sqrt(s * grid.box_length ** 3 / grid.n ** 6))


def lp_norm(grid: Grid, field: np.ndarray, p: float) -> float:
    """(h^3 sum_n |field_n|^p)^(1/p) for a field whose leading axes are components."""
    mag2 = np.sum(field.reshape((-1,) + grid.shape) ** 2, axis=0)
    return float((grid.cell_volume * np.sum(mag2 ** (p / 2.0))) ** (1.0 / p))


def hessian_grid(fluid: FluidState) -> np.ndarray:
    """All second derivatives d_a d_b u_c on the grid, shape (3, 3, 3, n, n, n)."""
    grid = fluid.grid
    k = grid.wavevector
    out = np.empty((3, 3, 3) + grid.shape)
    for a in range(3):
        for b in range(a, 3):
            d2 = grid.ifft(-(k[a] * k[b])[None] * fluid.velocity_spectral)
            out[a, b] = d2
            out[b, a] = d2
    return out


@dataclass(frozen=True)
class SpacetimeNormReport:
    p: float
    u_t: float
    hessian: float
    pressure_gradient: float
    u0_h2: float
    force: float

    @property
    def lhs(self) -> float:
        return self.u_t + self.hessian + self.pressure_gradient

    @property
    def rhs(self) -> float:
        return self.u0_h2 + self.force

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else np.inf
        return self.lhs / self.rhs


def spacetime_norm_report(history: list[FluidState], dt: float, p: float) -> SpacetimeNormReport:
    """Quadratures of the L^2-in-time, L^p-in-space norms of u_t, grad^2 u, grad P
    (left side) and of u_0 in H^2 plus g (right side) over a stored history.

    u_t uses forward differences at step midpoints; node-valued series use the
    trapezoid rule. State 0 carries no force or pressure.
    """
    if len(history) < 2:
        raise ValueError("spacetime norm report needs at least 2 stored states")
    if not (p == 2 or 3.0 < p <= 6.0):
        raise ValueError("p must be 2 or lie in (3, 6]")
    grid = history[0].grid

    def trap(values):
        v = np.asarray(values) ** 2
        return float(np.sqrt(dt * (np.sum(v) - 0.5 * (v[0] + v[-1]))))

    ut = [lp_norm(grid, (b.velocity_grid - a.velocity_grid) / dt, p) for a, b in zip(history, history[1:])]
    ut_norm = float(np.sqrt(dt * np.sum(np.asarray(ut) ** 2)))
    hess = trap([lp_norm(grid, hessian_grid(s), p) for s in history])
    press = trap([lp_norm(grid, s.pressure_gradient_grid, p) for s in history])
    force = trap([lp_norm(grid, s.forcing_grid, p) for s in history])
    return SpacetimeNormReport(p, ut_norm, hess, press, h2_norm(history[0]), force)
