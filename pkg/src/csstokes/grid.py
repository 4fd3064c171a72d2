"""Periodic collocation grid and its real-FFT wavevector tables."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np


@dataclass(frozen=True)
class Grid:
    """``n^3`` collocation nodes x = (i, j, k) * h on the box [0, L)^3."""

    box_length: float
    n: int

    @property
    def h(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** 3

    @property
    def shape(self) -> tuple:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple:
        return (self.n, self.n, self.n // 2 + 1)

    def nodes(self):
        x = np.arange(self.n) * self.h
        return np.meshgrid(x, x, x, indexing="ij")

    @cached_property
    def wavevector(self) -> np.ndarray:
        """Array (3, n, n, n//2+1) of physical wavevectors 2 pi m / L."""
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        kr = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.h)
        kx, ky, kz = np.meshgrid(k1, k1, kr, indexing="ij")
        return np.stack([kx, ky, kz])

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.wavevector ** 2, axis=0)

    @cached_property
    def nyquist(self) -> np.ndarray:
        """Modes on any Nyquist plane; their wavevector has no conjugate-symmetric
        sign, so the projection zeroes them."""
        m = self.n // 2
        idx = np.fft.fftfreq(self.n, d=1.0 / self.n)
        ix, iy, iz = np.meshgrid(np.abs(idx), np.abs(idx), np.arange(m + 1), indexing="ij")
        return (ix == m) | (iy == m) | (iz == m)

    @cached_property
    def half_weight(self) -> np.ndarray:
        """Multiplicity of each rfft coefficient in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., -1] = 1.0
        return w

    def fft(self, field: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(field, axes=(-3, -2, -1))

    def ifft(self, spectral: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(spectral, s=self.shape, axes=(-3, -2, -1))

    def spectral_inner(self, a_hat: np.ndarray, b_hat: np.ndarray) -> float:
        """Real part of the box integral of a . b from rfft coefficients (Parseval)."""
        s = np.sum(self.half_weight * np.real(np.conj(a_hat) * b_hat))
        return float(s) * self.box_length ** 3 / self.n ** 6

    def integrate(self, field: np.ndarray) -> np.ndarray:
        """Cell-volume weighted node sum over the trailing three axes."""
        return np.sum(field, axis=(-3, -2, -1)) * self.cell_volume


@lru_cache(maxsize=16)
def get_grid(box_length: float, n: int) -> Grid:
    return Grid(float(box_length), int(n))
