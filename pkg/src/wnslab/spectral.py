"""Spectral operators on the periodic box.

All operators act on the last three axes, so they apply componentwise to
scalar, vector and tensor fields alike.  Functions with a ``_hat`` suffix take
and return arrays in the real-FFT layout; the others work on physical arrays.
"""
from __future__ import annotations

import numpy as np

from .grid import Grid


def _check_finite(f: np.ndarray, name: str = "field") -> None:
    if not np.all(np.isfinite(f)):
        raise FloatingPointError(f"{name} contains non-finite values")


def dealias(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Apply the 2/3-rule truncation to a physical field."""
    return grid.ifft(grid.fft(f) * grid.dealias_mask)


def derivative(f: np.ndarray, axis: int, grid: Grid) -> np.ndarray:
    """Spectral derivative along spatial ``axis`` (0, 1 or 2)."""
    return grid.ifft(1j * grid.wavenumbers[axis] * grid.fft(f))


def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Gradient stacked on a new leading axis: out[j] = d_j f."""
    f_hat = grid.fft(f)
    return np.stack([grid.ifft(1j * k * f_hat) for k in grid.wavenumbers])


def laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    return grid.ifft(-grid.k_sq * grid.fft(f))


def divergence_hat(u_hat: np.ndarray, grid: Grid) -> np.ndarray:
    k1, k2, k3 = grid.wavenumbers
    return 1j * (k1 * u_hat[0] + k2 * u_hat[1] + k3 * u_hat[2])


def divergence_field(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral divergence sum_i d_i u_i of a vector field."""
    return grid.ifft(divergence_hat(grid.fft(u), grid))


def divergence_residual(u: np.ndarray, grid: Grid) -> float:
    """||div u||_2 / ||u||_2 on the box (0 for the zero field)."""
    u_hat = grid.fft(u)
    norm = grid.spectral_l2_sq(u_hat)
    if norm == 0.0:
        return 0.0
    return float(np.sqrt(grid.spectral_l2_sq(divergence_hat(u_hat, grid)) / norm))


def tensor_divergence_hat(F_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """(Div F)_j = sum_i d_i F_ij in spectral space; F_hat has shape (3, 3, ...)."""
    k = grid.wavenumbers
    return np.stack([1j * sum(k[i] * F_hat[i, j] for i in range(3)) for j in range(3)])


def divergence_of_tensor(F: np.ndarray, grid: Grid) -> np.ndarray:
    """Row-contracted divergence (Div F)_j = sum_i d_i F_ij."""
    return grid.ifft(tensor_divergence_hat(grid.fft(F), grid))


tensor_divergence = divergence_of_tensor


def leray_hat(u_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Apply Id - k k^T / |k|^2; modes with |k| = 0 pass through unchanged."""
    k = grid.wavenumbers
    ksq = grid.k_odd_sq
    inv = np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)
    k_dot_u = (k[0] * u_hat[0] + k[1] * u_hat[1] + k[2] * u_hat[2]) * inv
    return np.stack([u_hat[j] - k[j] * k_dot_u for j in range(3)])


def leray_project(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Leray projection onto divergence-free fields."""
    _check_finite(u)
    return grid.ifft(leray_hat(grid.fft(u), grid))


def riesz_symbol(i: int, grid: Grid) -> np.ndarray:
    """Symbol i k_i / |k| of the Riesz transform R_i, zero on the |k| = 0 modes."""
    ksq = grid.k_odd_sq
    knorm = np.sqrt(ksq)
    inv = np.divide(1.0, knorm, out=np.zeros_like(knorm), where=knorm > 0)
    return 1j * grid.wavenumbers[i] * inv


def riesz(f: np.ndarray, i: int, grid: Grid) -> np.ndarray:
    """Riesz transform R_i = d_i (-Laplacian)^(-1/2) of a scalar field."""
    return grid.ifft(riesz_symbol(i, grid) * grid.fft(f))


def heat_factor(t: float, grid: Grid) -> np.ndarray:
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    return np.exp(-grid.k_sq * t)


def heat_semigroup(u: np.ndarray, t: float, grid: Grid) -> np.ndarray:
    """e^{t Laplacian} u: each Fourier mode damped by exp(-|k|^2 t)."""
    factor = heat_factor(t, grid)
    if t == 0:
        return np.array(u, dtype=float, copy=True)
    return grid.ifft(factor * grid.fft(u))


def oseen_apply(F: np.ndarray, t: float, grid: Grid) -> np.ndarray:
    """e^{t Laplacian} P Div F for a tensor field F of shape (3, 3, N, N, N)."""
    factor = heat_factor(t, grid)
    out_hat = leray_hat(tensor_divergence_hat(grid.fft(F), grid), grid)
    return grid.ifft(factor * out_hat)


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    components: int | None = 3,
    band_limited: bool = True,
) -> np.ndarray:
    """White noise, optionally filtered to the dealiased band.

    The band-limited version carries no Nyquist content, so every spectral
    identity in this module holds for it to round-off.
    """
    shape = grid.shape if components is None else (components, *grid.shape)
    f = rng.standard_normal(shape)
    if band_limited:
        f = dealias(f, grid)
    return f
