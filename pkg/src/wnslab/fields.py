"""Divergence-free test data."""
from __future__ import annotations

import math

import numpy as np

from .grid import Grid
from .mollified import plateau
from .spectral import dealias, leray_project

KINDS = ("zero", "taylor_green", "bump", "heavy_tail", "random")


def _gaussian(grid: Grid, sigma: float) -> np.ndarray:
    return np.exp(-grid.radius_sq / (2.0 * sigma ** 2))


def outer_shell_fraction(u: np.ndarray, grid: Grid, shell: float = 0.1) -> float:
    """max |u| on the outer ``shell`` fraction of the box, relative to max |u|."""
    from .weighted import magnitude

    mag = magnitude(u)
    top = mag.max()
    if top == 0:
        return 0.0
    outer = ~grid.inner_mask(1.0 - 2.0 * shell)
    return float(mag[outer].max() / top)


def taylor_green(grid: Grid, amplitude: float = 1.0, mode: int = 1, sigma: float | None = None) -> np.ndarray:
    """(sin x1 cos x2, -cos x1 sin x2, 0) at wavenumber 2 pi mode / L, optionally windowed.

    Windowing by a Gaussian of width ``sigma`` is followed by Leray projection.
    """
    k = 2.0 * math.pi * mode / grid.box_length
    x1, x2, _ = grid.coords
    ones = np.ones(grid.shape)
    u = amplitude * np.stack([
        np.sin(k * x1) * np.cos(k * x2) * ones,
        -np.cos(k * x1) * np.sin(k * x2) * ones,
        np.zeros(grid.shape),
    ])
    if sigma is not None:
        u = leray_project(u * _gaussian(grid, sigma), grid)
    return u


def _swirl(grid: Grid, sigma: float, axis, center) -> np.ndarray:
    c = np.asarray(axis, dtype=float)
    c = c / np.linalg.norm(c)
    x = [xi - ci for xi, ci in zip(grid.coords, center)]
    G = np.exp(-(x[0] ** 2 + x[1] ** 2 + x[2] ** 2) / (2.0 * sigma ** 2))
    gx = [-xi / sigma ** 2 * G for xi in x]
    return np.stack([
        gx[1] * c[2] - gx[2] * c[1],
        gx[2] * c[0] - gx[0] * c[2],
        gx[0] * c[1] - gx[1] * c[0],
    ])


def gaussian_bump(grid: Grid, amplitude: float = 1.0, sigma: float = 1.0, axis=(1.0, 1.0, 1.0),
                  offset: float = 0.0) -> np.ndarray:
    """Swirl u = grad G x c with G = exp(-|x|^2 / (2 sigma^2)), c a unit vector.

    On R^3 its squared L^2 norm is amplitude^2 pi^(3/2) sigma.  A single swirl
    is nearly steady (its self-advection is a gradient), so ``offset > 0``
    instead places two swirls at +-offset e_1 with axes e_3 and e_2, which
    interact nontrivially.
    """
    if offset == 0:
        u = _swirl(grid, sigma, axis, (0.0, 0.0, 0.0))
    else:
        u = _swirl(grid, sigma, (0, 0, 1), (offset, 0.0, 0.0)) + _swirl(grid, sigma, (0, 1, 0), (-offset, 0.0, 0.0))
    return leray_project(amplitude * u, grid)


def heavy_tail(grid: Grid, amplitude: float = 1.0, decay: float = 0.6, component: int = 0,
               window: float = 0.5) -> np.ndarray:
    """P(c (1+|x|)^(-a) e_j), cut off smoothly at radius ``window`` * L/2."""
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    R = 0.25 * window * grid.box_length
    r = np.sqrt(grid.radius_sq)
    w = np.zeros((3, *grid.shape))
    w[component] = amplitude * (1.0 + r) ** (-decay) * plateau(r / R)
    return leray_project(w, grid)


def random_solenoidal(grid: Grid, rng: np.random.Generator, amplitude: float = 1.0, sigma: float = 2.0) -> np.ndarray:
    """Band-limited noise, Gaussian-windowed and projected."""
    f = dealias(rng.standard_normal((3, *grid.shape)), grid)
    u = leray_project(f * _gaussian(grid, sigma), grid)
    peak = np.abs(u).max()
    return amplitude * u / peak if peak > 0 else u


def make_test_field(kind: str, grid: Grid, **params) -> np.ndarray:
    """Build a named divergence-free vector field on ``grid``.

    kinds: zero, taylor_green, bump, heavy_tail, random (needs ``seed``).
    """
    if kind == "zero":
        return np.zeros((3, *grid.shape))
    if kind == "taylor_green":
        return taylor_green(grid, **params)
    if kind == "bump":
        sigma = params.get("sigma", 1.0)
        if 2.0 * sigma + abs(params.get("offset", 0.0)) > 0.25 * grid.box_length:
            raise ValueError(f"bump width {sigma} does not fit the inner half of the box")
        return gaussian_bump(grid, **params)
    if kind == "heavy_tail":
        return heavy_tail(grid, **params)
    if kind == "random":
        params = dict(params)
        rng = np.random.default_rng(params.pop("seed", 0))
        return random_solenoidal(grid, rng, **params)
    raise ValueError(f"unknown field kind {kind!r}; expected one of {KINDS}")
