"""Nonlocal alignment moments a_i, b_i and the alignment force L_i = b_i - a_i V_i."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .config import KernelSpec
from .state import ParticleEnsemble


@dataclass(frozen=True, eq=False)
class AlignmentFields:
    """Kernel-weighted local mass ``a`` (N,) and momentum ``b`` (N, 3).

    ``spread`` holds sum_j m_j phi_ij |V_j - V_i|^2 per particle, a byproduct of
    the same pair loop used for the alignment dissipation.
    """

    a: np.ndarray
    b: np.ndarray
    spread: np.ndarray | None = None

    @property
    def b_max(self) -> float:
        return float(np.sqrt(np.max(np.sum(self.b ** 2, axis=1))))


@njit(cache=True, inline="always", error_model="numpy")
def _min_image(d, L, half):
    # branch-free: random pair geometry defeats branch prediction
    return d - L * ((d > half) * 1.0) + L * ((d < -half) * 1.0)


@njit(cache=True, inline="always", error_model="numpy")
def _phi(r2, code, c):
    if code == 0:
        return 1.0 / (1.0 + r2)
    return c


@njit(cache=True, error_model="numpy")
def _direct_pairs(pos, vel, w, L, code, c, a, b, spread):
    # each unordered pair once, accumulated into both ends in fixed (i, j>i) order
    n = pos.shape[0]
    half = 0.5 * L
    phi0 = _phi(0.0, code, c)
    for i in range(n):
        a[i] = w[i] * phi0
        b[i, 0] = w[i] * phi0 * vel[i, 0]
        b[i, 1] = w[i] * phi0 * vel[i, 1]
        b[i, 2] = w[i] * phi0 * vel[i, 2]
        spread[i] = 0.0
    for i in range(n):
        xi, yi, zi = pos[i, 0], pos[i, 1], pos[i, 2]
        ui, vi, wi = vel[i, 0], vel[i, 1], vel[i, 2]
        mi = w[i]
        sa = 0.0
        sb0 = 0.0
        sb1 = 0.0
        sb2 = 0.0
        ss = 0.0
        for j in range(i + 1, n):
            dx = _min_image(pos[j, 0] - xi, L, half)
            dy = _min_image(pos[j, 1] - yi, L, half)
            dz = _min_image(pos[j, 2] - zi, L, half)
            p = _phi(dx * dx + dy * dy + dz * dz, code, c)
            wj = w[j] * p
            wi_ = mi * p
            sa += wj
            sb0 += wj * vel[j, 0]
            sb1 += wj * vel[j, 1]
            sb2 += wj * vel[j, 2]
            e0 = vel[j, 0] - ui
            e1 = vel[j, 1] - vi
            e2 = vel[j, 2] - wi
            e = e0 * e0 + e1 * e1 + e2 * e2
            ss += wj * e
            a[j] += wi_
            b[j, 0] += wi_ * ui
            b[j, 1] += wi_ * vi
            b[j, 2] += wi_ * wi
            spread[j] += wi_ * e
        a[i] += sa
        b[i, 0] += sb0
        b[i, 1] += sb1
        b[i, 2] += sb2
        spread[i] += ss


@njit(cache=True, error_model="numpy")
def _cell_pairs(pos, vel, w, L, code, c, cutoff2, ncell, order, start, cell_of, a, b, spread):
    n = pos.shape[0]
    half = 0.5 * L
    offsets = np.empty(3, dtype=np.int64)
    for i in range(n):
        xi, yi, zi = pos[i, 0], pos[i, 1], pos[i, 2]
        ui, vi, wi = vel[i, 0], vel[i, 1], vel[i, 2]
        cx = cell_of[i, 0]
        cy = cell_of[i, 1]
        cz = cell_of[i, 2]
        sa = 0.0
        sb0 = 0.0
        sb1 = 0.0
        sb2 = 0.0
        ss = 0.0
        # fewer than 3 cells per axis: neighbour offsets would revisit cells
        m = 3 if ncell >= 3 else ncell
        for t in range(m):
            offsets[t] = t - 1 if ncell >= 3 else t
        for ox in range(m):
            gx = (cx + offsets[ox]) % ncell
            for oy in range(m):
                gy = (cy + offsets[oy]) % ncell
                for oz in range(m):
                    gz = (cz + offsets[oz]) % ncell
                    cell = (gx * ncell + gy) * ncell + gz
                    for s in range(start[cell], start[cell + 1]):
                        j = order[s]
                        dx = _min_image(pos[j, 0] - xi, L, half)
                        dy = _min_image(pos[j, 1] - yi, L, half)
                        dz = _min_image(pos[j, 2] - zi, L, half)
                        r2 = dx * dx + dy * dy + dz * dz
                        if r2 >= cutoff2:
                            continue
                        wp = w[j] * _phi(r2, code, c)
                        sa += wp
                        sb0 += wp * vel[j, 0]
                        sb1 += wp * vel[j, 1]
                        sb2 += wp * vel[j, 2]
                        e0 = vel[j, 0] - ui
                        e1 = vel[j, 1] - vi
                        e2 = vel[j, 2] - wi
                        ss += wp * (e0 * e0 + e1 * e1 + e2 * e2)
        a[i] = sa
        b[i, 0] = sb0
        b[i, 1] = sb1
        b[i, 2] = sb2
        spread[i] = ss


def compute_fields(ensemble: ParticleEnsemble, kernel: KernelSpec) -> AlignmentFields:
    """All-pairs evaluation with minimum-image distances, self term included.

    Pairs are visited in a fixed order, so results are bitwise reproducible.
    """
    n = ensemble.n
    a, b, spread = np.empty(n), np.empty((n, 3)), np.empty(n)
    _direct_pairs(ensemble.positions, ensemble.velocities, ensemble.weights,
                  float(ensemble.box_length), kernel.code, float(kernel.c), a, b, spread)
    return AlignmentFields(a, b, spread)


def compute_fields_celllist(ensemble: ParticleEnsemble, kernel: KernelSpec, cutoff: float) -> AlignmentFields:
    """Cell-list evaluation with phi truncated to zero for r >= cutoff.

    The error against :func:`compute_fields` is at most ``M * phi(cutoff)`` in
    each a_i. ``cutoff=inf`` disables truncation (a single cell).
    """
    L = float(ensemble.box_length)
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    if math.isinf(cutoff):
        ncell, cutoff2 = 1, math.inf
    else:
        if cutoff > 0.5 * L:
            raise ValueError(f"cutoff {cutoff} exceeds L/2 = {0.5 * L}; minimum image is ambiguous")
        ncell, cutoff2 = max(1, int(L // cutoff)), cutoff * cutoff
    cell_of = np.minimum((ensemble.positions * (ncell / L)).astype(np.int64), ncell - 1)
    flat = (cell_of[:, 0] * ncell + cell_of[:, 1]) * ncell + cell_of[:, 2]
    order = np.argsort(flat, kind="stable")
    start = np.zeros(ncell ** 3 + 1, dtype=np.int64)
    np.cumsum(np.bincount(flat, minlength=ncell ** 3), out=start[1:])
    n = ensemble.n
    a, b, spread = np.empty(n), np.empty((n, 3)), np.empty(n)
    _cell_pairs(ensemble.positions, ensemble.velocities, ensemble.weights, L, kernel.code,
                float(kernel.c), cutoff2, ncell, order, start, cell_of, a, b, spread)
    return AlignmentFields(a, b, spread)


def alignment_force(fields: AlignmentFields, velocities: np.ndarray) -> np.ndarray:
    """L_i = b_i - a_i V_i."""
    if len(fields.a) != len(velocities):
        raise ValueError("fields and velocities come from ensembles of different size")
    return fields.b - fields.a[:, None] * velocities


def alignment_dissipation(fields: AlignmentFields, weights: np.ndarray) -> float:
    """1/2 sum_ij m_i m_j phi_ij |V_i - V_j|^2, nonnegative by construction."""
    return 0.5 * float(weights @ fields.spread)
