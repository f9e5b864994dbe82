"""Periodic box discretization of R^3.

The box is [-L/2, L/2)^3 sampled at N points per axis.  Fields are plain
numpy arrays whose last three axes are the spatial axes: a scalar field has
shape (N, N, N), a vector field (3, N, N, N), a tensor field (3, 3, N, N, N).
Spectral arrays use the real-FFT layout (N, N, N//2 + 1) on the last axes.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

AXES = (-3, -2, -1)


def worker_count() -> int:
    """Number of FFT threads, read from ``WNSLAB_WORKERS`` (default 1)."""
    return max(1, int(os.environ.get("WNSLAB_WORKERS", "1")))


@dataclass(frozen=True)
class Grid:
    n: int
    box_length: float

    def __post_init__(self):
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** 3

    @cached_property
    def x(self) -> np.ndarray:
        """1-D node coordinates, -L/2 + j h."""
        return -0.5 * self.box_length + self.spacing * np.arange(self.n)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable (N,1,1), (1,N,1), (1,1,N) coordinate arrays."""
        x = self.x
        return x[:, None, None], x[None, :, None], x[None, None, :]

    @cached_property
    def radius_sq(self) -> np.ndarray:
        x1, x2, x3 = self.coords
        return x1 ** 2 + x2 ** 2 + x3 ** 2

    @cached_property
    def _mode_index(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m_full = np.fft.fftfreq(self.n, 1.0 / self.n)
        m_half = np.fft.rfftfreq(self.n, 1.0 / self.n)
        return m_full[:, None, None], m_full[None, :, None], m_half[None, None, :]

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-axis wavenumbers 2 pi m / L with the Nyquist mode set to zero.

        These are the symbols of first derivatives.  Zeroing the Nyquist
        wavenumber keeps odd-order multipliers real-valued on real data.
        """
        scale = 2.0 * np.pi / self.box_length
        out = []
        for m in self._mode_index:
            k = scale * m
            k = np.where(np.abs(m) == self.n // 2, 0.0, k)
            out.append(k)
        return tuple(out)

    @cached_property
    def k_sq(self) -> np.ndarray:
        """|k|^2 including Nyquist wavenumbers (symbol of -Laplacian)."""
        scale = 2.0 * np.pi / self.box_length
        m1, m2, m3 = self._mode_index
        return scale ** 2 * (m1 ** 2 + m2 ** 2 + m3 ** 2)

    @cached_property
    def k_odd_sq(self) -> np.ndarray:
        """|k|^2 built from the Nyquist-free wavenumbers."""
        k1, k2, k3 = self.wavenumbers
        return k1 ** 2 + k2 ** 2 + k3 ** 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep integer modes with |m_j| < N/3 on every axis."""
        cut = self.n / 3.0
        m1, m2, m3 = self._mode_index
        return (np.abs(m1) < cut) & (np.abs(m2) < cut) & (np.abs(m3) < cut)

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum mode in the full spectrum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w[None, None, :]

    # transforms -----------------------------------------------------------

    def fft(self, f: np.ndarray) -> np.ndarray:
        return sfft.rfftn(f, axes=AXES, workers=worker_count())

    def ifft(self, f_hat: np.ndarray) -> np.ndarray:
        return sfft.irfftn(f_hat, s=self.shape, axes=AXES, workers=worker_count())

    def spectral_l2_sq(self, f_hat: np.ndarray, symbol: np.ndarray | None = None) -> float:
        """Box L^2 norm squared via Parseval, optionally with a weight symbol."""
        power = np.abs(f_hat) ** 2
        if symbol is not None:
            power = power * symbol
        power = power * self.rfft_weights
        return float(power.sum() * self.box_length ** 3 / self.n ** 6)

    def integrate(self, f: np.ndarray) -> float:
        """Midpoint-rule integral over the box (cell volume h^3)."""
        return float(np.sum(f) * self.cell_volume)

    def inner_mask(self, fraction: float = 0.5) -> np.ndarray:
        """Boolean mask of nodes with max |x_j| < fraction * L/2."""
        half = fraction * 0.5 * self.box_length
        x1, x2, x3 = self.coords
        return (np.abs(x1) < half) & (np.abs(x2) < half) & (np.abs(x3) < half)
