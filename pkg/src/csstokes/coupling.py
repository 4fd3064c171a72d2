"""Particle <-> grid momentum exchange with the cloud-in-cell (trilinear) shape.

Deposition and interpolation use the same stencil, so they are adjoint:
h^3 sum_n rho_n w_n == sum_i m_i (interpolate w)(X_i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .state import FluidState, ParticleEnsemble


@dataclass(frozen=True, eq=False)
class Stencil:
    """Flat node indices (N, 8) and trilinear weights (N, 8) for each particle."""

    index: np.ndarray
    weight: np.ndarray


@dataclass(frozen=True, eq=False)
class DepositedMoments:
    rho: np.ndarray  # (n, n, n)
    j: np.ndarray  # (3, n, n, n)


def cic_stencil(grid: Grid, positions: np.ndarray) -> Stencil:
    n = grid.n
    s = positions / grid.h
    base = np.floor(s)
    frac = s - base
    i0 = base.astype(np.int64) % n
    i1 = (i0 + 1) % n
    index = np.empty((len(positions), 8), dtype=np.int64)
    weight = np.empty((len(positions), 8))
    corner = 0
    for cx in (0, 1):
        ix = i1[:, 0] if cx else i0[:, 0]
        wx = frac[:, 0] if cx else 1.0 - frac[:, 0]
        for cy in (0, 1):
            iy = i1[:, 1] if cy else i0[:, 1]
            wy = frac[:, 1] if cy else 1.0 - frac[:, 1]
            for cz in (0, 1):
                iz = i1[:, 2] if cz else i0[:, 2]
                wz = frac[:, 2] if cz else 1.0 - frac[:, 2]
                index[:, corner] = (ix * n + iy) * n + iz
                weight[:, corner] = wx * wy * wz
                corner += 1
    return Stencil(index, weight)


def deposit_values(grid: Grid, stencil: Stencil, values: np.ndarray) -> np.ndarray:
    """Scatter per-particle values (N,) or (N, k) onto nodes, divided by h^3."""
    idx = stencil.index.ravel()
    size = grid.n ** 3
    vol = grid.cell_volume
    if values.ndim == 1:
        out = np.bincount(idx, weights=(stencil.weight * values[:, None]).ravel(), minlength=size)
        return out.reshape(grid.shape) / vol
    cols = [np.bincount(idx, weights=(stencil.weight * values[:, c, None]).ravel(), minlength=size)
            for c in range(values.shape[1])]
    return np.stack(cols).reshape((values.shape[1],) + grid.shape) / vol


def deposit(ensemble: ParticleEnsemble, grid: Grid, stencil: Stencil | None = None) -> DepositedMoments:
    """Density rho and momentum density j on the grid."""
    stencil = stencil or cic_stencil(grid, ensemble.positions)
    m = ensemble.weights
    return DepositedMoments(
        rho=deposit_values(grid, stencil, m),
        j=deposit_values(grid, stencil, m[:, None] * ensemble.velocities),
    )


def interpolate_grid(field: np.ndarray, stencil: Stencil) -> np.ndarray:
    """Trilinear samples of a (3, n, n, n) field -> (N, 3), or (n, n, n) -> (N,)."""
    if field.ndim == 3:
        return np.sum(field.ravel()[stencil.index] * stencil.weight, axis=1)
    flat = field.reshape(field.shape[0], -1)
    return np.stack([np.sum(flat[c][stencil.index] * stencil.weight, axis=1)
                     for c in range(field.shape[0])], axis=1)


def interpolate(fluid: FluidState, positions: np.ndarray, stencil: Stencil | None = None) -> np.ndarray:
    stencil = stencil or cic_stencil(fluid.grid, positions)
    return interpolate_grid(fluid.velocity_grid, stencil)


def coupling_force(moments: DepositedMoments, fluid: FluidState | np.ndarray) -> np.ndarray:
    """Nodewise drag reaction on the fluid, g = j - rho u."""
    u = fluid.velocity_grid if isinstance(fluid, FluidState) else fluid
    if u.shape != moments.j.shape:
        raise ValueError(f"grid mismatch: moments {moments.j.shape} vs fluid {u.shape}")
    return moments.j - moments.rho[None] * u


def drag_dissipation(stencil: Stencil, u_grid: np.ndarray, velocities: np.ndarray,
                     weights: np.ndarray) -> float:
    """sum_i m_i sum_c W_ic |u_c - V_i|^2 over each particle's CIC stencil.

    This is the grid realization of the integral of f |u - v|^2 consistent with
    g = j - rho u: it equals sum m|V|^2 - 2 h^3 sum u.j + h^3 sum rho |u|^2.
    """
    flat = u_grid.reshape(3, -1)
    total = np.zeros(len(weights))
    for c in range(3):
        diff = flat[c][stencil.index] - velocities[:, c, None]
        total += np.sum(stencil.weight * diff * diff, axis=1)
    return float(weights @ total)
