"""Polynomial weights and weighted Lebesgue/Sobolev norms on the box.

The weight Phi_gamma(x) = (1 + |x|^2)^(-gamma/2) is sampled on the box
coordinates, it is never periodized.  Integrals use the midpoint rule with
cell volume h^3.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np
import scipy.fft as sfft

from .grid import Grid, worker_count

GAMMA_RANGE = (-8.0, 8.0)


@dataclass(frozen=True)
class NormReport:
    value: float
    p_or_s: float
    gamma: float
    kind: str  # "lebesgue" or "sobolev"

    def __float__(self) -> float:
        return self.value


def weight_value(gamma: float, x) -> np.ndarray | float:
    """(1 + |x|^2)^(-gamma/2) for a point (last axis of length 3) or array of points."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    out = (1.0 + r2) ** (-0.5 * gamma)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def _weight_grid(grid: Grid, gamma: float) -> np.ndarray:
    w = (1.0 + grid.radius_sq) ** (-0.5 * gamma)
    w.setflags(write=False)
    return w


def weight_on_grid(gamma: float, grid: Grid, check: bool = True) -> np.ndarray:
    """Phi_gamma sampled at the grid nodes (read-only, cached).

    ``check=False`` lifts the exponent range, for threshold profiles.
    """
    if check:
        _check_gamma(gamma)
    return _weight_grid(grid, float(gamma))


def _check_gamma(gamma: float) -> None:
    if not GAMMA_RANGE[0] <= gamma <= GAMMA_RANGE[1]:
        raise ValueError(f"gamma must lie in {GAMMA_RANGE}, got {gamma}")


def magnitude(u: np.ndarray) -> np.ndarray:
    """Pointwise Euclidean (Frobenius for tensors) magnitude over leading axes."""
    u = np.asarray(u)
    if u.ndim == 3:
        return np.abs(u)
    lead = tuple(range(u.ndim - 3))
    return np.sqrt(np.sum(u * u, axis=lead))


def weighted_lp_norm(u: np.ndarray, p: float, gamma: float, grid: Grid) -> NormReport:
    """(int |u|^p Phi_gamma dx)^(1/p) by midpoint quadrature; p = inf is the grid max."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    _check_gamma(gamma)
    mag = magnitude(u)
    if math.isinf(p):
        if gamma != 0:
            raise ValueError("p = inf is only defined for gamma = 0")
        return NormReport(float(mag.max()), p, gamma, "lebesgue")
    integrand = mag ** p
    if gamma != 0:
        integrand = integrand * weight_on_grid(gamma, grid)
    value = grid.integrate(integrand) ** (1.0 / p)
    return NormReport(float(value), p, gamma, "lebesgue")


def lp_norm(u: np.ndarray, p: float, grid: Grid) -> float:
    """Unweighted box L^p norm."""
    return weighted_lp_norm(u, p, 0.0, grid).value


def sobolev_symbol(s: float, grid: Grid) -> np.ndarray:
    return (1.0 + grid.k_sq) ** s


def weighted_hs_norm(u: np.ndarray, s: float, gamma: float, grid: Grid) -> NormReport:
    """|| (1 + |k|^2)^(s/2) F[Phi^(gamma/2) u] ||_2 on the box."""
    if abs(s) > 8:
        raise ValueError(f"|s| must be <= 8, got {s}")
    _check_gamma(gamma)
    f = np.asarray(u, dtype=float)
    if gamma != 0:
        f = f * weight_on_grid(gamma / 2.0, grid)
    f_hat = grid.fft(f)
    symbol = None if s == 0 else sobolev_symbol(s, grid)
    value = math.sqrt(grid.spectral_l2_sq(f_hat, symbol))
    return NormReport(value, s, gamma, "sobolev")


# ---------------------------------------------------------------------------
# convolution kernel (sqrt(t) + |z|)^(-4)


def _kernel(s: float, r: np.ndarray) -> np.ndarray:
    return (s + r) ** -4


def _subcell_offsets(m: int, h: float) -> np.ndarray:
    return ((np.arange(m) + 0.5) / m - 0.5) * h


def cell_kernel(t: float, grid: Grid, coarse: int = 3, fine: int = 24, near: int = 2) -> np.ndarray:
    """Cell averages times h^3 of (sqrt(t)+|z|)^(-4) on the 2N-periodic offset lattice.

    Entry j approximates the integral of the kernel over the cell centred at
    offset j*h.  Cells within ``near`` of the origin use ``fine`` sub-points per
    axis, the rest ``coarse``.
    """
    n, h = grid.n, grid.spacing
    s = math.sqrt(t)
    idx = np.fft.fftfreq(2 * n, 1.0 / (2 * n))
    z = idx * h
    z1, z2, z3 = z[:, None, None], z[None, :, None], z[None, None, :]
    acc = np.zeros((2 * n,) * 3)
    sub = _subcell_offsets(coarse, h)
    for a in sub:
        for b in sub:
            for c in sub:
                acc += _kernel(s, np.sqrt((z1 + a) ** 2 + (z2 + b) ** 2 + (z3 + c) ** 2))
    acc *= grid.cell_volume / coarse ** 3

    offs = np.arange(-near, near + 1)
    sf = _subcell_offsets(fine, h)
    q1, q2, q3 = np.meshgrid(sf, sf, sf, indexing="ij")
    for i in offs:
        for j in offs:
            for k in offs:
                r = np.sqrt((i * h + q1) ** 2 + (j * h + q2) ** 2 + (k * h + q3) ** 2)
                acc[i, j, k] = _kernel(s, r).mean() * grid.cell_volume
    return acc


def kernel_convolve(f: np.ndarray, t: float, grid: Grid, kernel: np.ndarray | None = None) -> np.ndarray:
    """Non-periodic (zero padded) discrete convolution of f with the cell kernel."""
    if kernel is None:
        kernel = cell_kernel(t, grid)
    n = grid.n
    big = (2 * n,) * 3
    w = worker_count()
    f_hat = sfft.rfftn(f, s=big, workers=w)
    k_hat = sfft.rfftn(kernel, workers=w)
    g = sfft.irfftn(f_hat * k_hat, s=big, workers=w)
    return g[:n, :n, :n]


def kernel_ratio(f: np.ndarray, t: float, p: float, gamma: float, grid: Grid,
                 kernel: np.ndarray | None = None) -> float:
    """sqrt(t) ||K_t * f||_{L^p(Phi_gamma)} / ||f||_{L^p(Phi_gamma)} (0 for f = 0)."""
    denom = weighted_lp_norm(f, p, gamma, grid).value
    if denom == 0.0:
        return 0.0
    g = kernel_convolve(f, t, grid, kernel)
    return math.sqrt(t) * weighted_lp_norm(g, p, gamma, grid).value / denom


def kernel_bound_check(
    t: float,
    p: float,
    gamma: float,
    trials: int,
    grid: Grid | None = None,
    rng: np.random.Generator | None = None,
    fields: Iterable[np.ndarray] | None = None,
) -> float:
    """Largest convolution ratio over random nonnegative fields.

    The fields are supported in the inner half of the box so the weighted
    norm of K_t * f is not polluted by the box boundary.  Pass ``fields`` to
    use specific data instead of random draws.
    """
    if not 0 < t <= 1:
        raise ValueError(f"t must lie in (0, 1], got {t}")
    if not 0 <= gamma <= 4:
        raise ValueError(f"gamma must lie in [0, 4], got {gamma}")
    grid = grid or Grid(32, 16.0)
    kernel = cell_kernel(t, grid)
    if fields is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        mask = grid.inner_mask(0.5)
        fields = (rng.random(grid.shape) * mask for _ in range(trials))
    best = 0.0
    for f in fields:
        best = max(best, kernel_ratio(f, t, p, gamma, grid, kernel))
    return best


def ball_kernel_integral(t: float, radius: float) -> float:
    """sqrt(t) * int_{|y|<R} (sqrt(t)+|y|)^(-4) dy in closed form."""
    s = math.sqrt(t)
    R = radius
    # antiderivative of r^2/(s+r)^4 is -(1/(s+r)) + s/(s+r)^2 - s^2/(3(s+r)^3)
    def F(r):
        u = s + r
        return -1.0 / u + s / u ** 2 - s * s / (3 * u ** 3)
    return s * 4.0 * math.pi * (F(R) - F(0.0))


# ---------------------------------------------------------------------------
# CSV diagnostics

CSV_COLUMNS = ("time", "kind", "p_or_s", "gamma", "value")


def append_norm_rows(path: str | os.PathLike, time: float, reports: Iterable[NormReport]) -> None:
    """Append (time, kind, p_or_s, gamma, value) rows, writing a header for new files."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(CSV_COLUMNS)
        for rep in reports:
            writer.writerow([repr(float(time)), rep.kind, repr(float(rep.p_or_s)),
                             repr(float(rep.gamma)), repr(rep.value)])


def read_norm_rows(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("time", "p_or_s", "gamma", "value"):
            row[key] = float(row[key])
    return rows
