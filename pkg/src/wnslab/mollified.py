"""Mollified Navier-Stokes: smoothing operator, nonlinear term and time stepping.

The advecting velocity is replaced by phi_eps * (theta_alpha u), where phi_eps
is a unit-mass bump of radius eps and theta_alpha a smooth cutoff equal to one
on |x| <= 1/alpha and zero beyond 2/alpha.  Diffusion is integrated exactly
by an integrating factor; the nonlinear term uses classical RK4 (Lawson).

Internally the state is kept in the real-FFT layout, which brings one
nonlinear evaluation down to 18 scalar transforms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .grid import Grid
from .spectral import (
    divergence_residual,
    heat_factor,
    leray_hat,
    tensor_divergence_hat,
)
from .weighted import NormReport, lp_norm, magnitude, weighted_lp_norm

BLOWUP_FACTOR = 1e8


# ---------------------------------------------------------------------------
# profiles


def bump(r: np.ndarray) -> np.ndarray:
    """Unnormalized standard bump exp(-1/(1-r^2)) on r < 1, zero elsewhere."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _radial_integral(g) -> float:
    val, _ = integrate.quad(lambda r: 4.0 * math.pi * r * r * g(r), 0.0, 1.0, epsabs=0, epsrel=1e-13, limit=200)
    return val


_BUMP_MASS = _radial_integral(lambda r: math.exp(-1.0 / (1.0 - r * r)) if r < 1 else 0.0)


def bump_lq_norm(q: float) -> float:
    """L^q norm of the continuous unit-mass bump on R^3."""
    c = 1.0 / _BUMP_MASS
    if math.isinf(q):
        return c * math.exp(-1.0)
    val = _radial_integral(lambda r: math.exp(-q / (1.0 - r * r)) if r < 1 else 0.0)
    return c * val ** (1.0 / q)


def smoothstep5(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)


def plateau(s: np.ndarray) -> np.ndarray:
    """Radial cutoff profile: 1 on [0, 1], 0 on [2, inf), quintic in between."""
    return 1.0 - smoothstep5(np.asarray(s, dtype=float) - 1.0)


# ---------------------------------------------------------------------------
# mollifier


@dataclass(eq=False)
class MollifierSpec:
    epsilon: float
    alpha: float
    grid: Grid
    phi_hat: np.ndarray
    theta_grid: np.ndarray
    phi_samples: np.ndarray

    @classmethod
    def create(cls, grid: Grid, epsilon: float, alpha: float) -> "MollifierSpec":
        """Sample phi_eps on the grid offsets and theta_alpha on the nodes.

        The sampled kernel is renormalized to unit discrete mass, so when
        eps <= h it collapses to the discrete delta and mollification is the
        identity on the grid.
        """
        if not epsilon > 0 or not alpha > 0:
            raise ValueError("epsilon and alpha must be positive")
        if 2.0 / alpha + epsilon > 0.5 * grid.box_length:
            raise ValueError(
                f"cutoff support 2/alpha + eps = {2 / alpha + epsilon:.3g} exceeds the box half-width "
                f"{0.5 * grid.box_length:.3g}"
            )
        off = np.fft.fftfreq(grid.n, 1.0 / grid.n) * grid.spacing
        o1, o2, o3 = off[:, None, None], off[None, :, None], off[None, None, :]
        r = np.sqrt(o1 ** 2 + o2 ** 2 + o3 ** 2) / epsilon
        kern = bump(r)
        kern /= kern.sum() * grid.cell_volume
        phi_hat = np.ascontiguousarray(grid.fft(kern).real * grid.cell_volume)
        theta = plateau(alpha * np.sqrt(grid.radius_sq))
        return cls(epsilon, alpha, grid, phi_hat, theta, kern)

    def kernel_lq_norm(self, q: float) -> float:
        """Discrete L^q norm of the sampled phi_eps."""
        return lp_norm(self.phi_samples, q, self.grid)

    def is_delta(self) -> bool:
        return self.epsilon <= self.grid.spacing


def mollify(u: np.ndarray, m: MollifierSpec) -> np.ndarray:
    """phi_eps * (theta_alpha u) with the convolution done in Fourier space."""
    g = m.grid
    return g.ifft(m.phi_hat * g.fft(m.theta_grid * u))


def troncatur_bound(u: np.ndarray, p: float, gamma: float, m: MollifierSpec) -> float:
    """Right side of ||phi_eps * (theta_alpha u)||_inf <= ||phi||_q eps^(-3/p) (1+2/alpha)^(gamma/p) ||u||_{L^p(Phi_gamma)}."""
    q = p / (p - 1.0)
    norm = weighted_lp_norm(u, p, gamma, m.grid).value
    return bump_lq_norm(q) * m.epsilon ** (-3.0 / p) * (1.0 + 2.0 / m.alpha) ** (gamma / p) * norm


def product_flux_hat(a: np.ndarray, w: np.ndarray, grid: Grid, dealias: bool = True) -> np.ndarray:
    """Spectral P Div(a (x) w), no mollification."""
    F_hat = grid.fft(a[:, None] * w[None, :])
    if dealias:
        F_hat *= grid.dealias_mask
    return leray_hat(tensor_divergence_hat(F_hat, grid), grid)


def _flux_hat(v: np.ndarray, w: np.ndarray, m: MollifierSpec, dealias: bool) -> np.ndarray:
    """Spectral P Div(mollify(v) (x) w) for physical v, w."""
    return product_flux_hat(mollify(v, m), w, m.grid, dealias)


def nonlinear_term(v: np.ndarray, w: np.ndarray, m: MollifierSpec, dealias: bool = True) -> np.ndarray:
    """P Div((phi_eps * (theta_alpha v)) (x) w), with Div(F)_j = sum_i d_i F_ij."""
    return m.grid.ifft(_flux_hat(v, w, m, dealias))


# ---------------------------------------------------------------------------
# solver


@dataclass
class SolverConfig:
    grid: Grid
    mollifier: MollifierSpec
    dt: float
    t_end: float
    snapshot_stride: int = 1
    dealias: bool = True
    nonlinear: bool = True

    def __post_init__(self):
        if self.mollifier.grid != self.grid:
            raise ValueError("mollifier was built on a different grid")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt > self.max_dt:
            raise ValueError(f"dt = {self.dt} exceeds the stability bound {self.max_dt:.4g}")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    @property
    def max_dt(self) -> float:
        return 0.9 * self.grid.spacing ** 2 / 6.0

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9)) if self.t_end > 0 else 0

    @property
    def step_size(self) -> float:
        """Actual step: t_end split evenly into n_steps."""
        n = self.n_steps
        return self.t_end / n if n else self.dt


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list[np.ndarray]
    diagnostics: list[dict[str, NormReport | float]]
    grid: Grid
    blowup: bool = False
    last_valid_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.snapshots)

    def series(self, key: str) -> np.ndarray:
        return np.array([float(d[key]) for d in self.diagnostics])

    def stacked(self) -> np.ndarray:
        return np.stack(self.snapshots)


class _Stepper:
    """Lawson RK4 in spectral space for du/dt = Lap u - P Div(mollify(u) (x) u)."""

    def __init__(self, m: MollifierSpec, dt: float, dealias: bool, nonlinear: bool):
        self.m = m
        self.g = m.grid
        self.dt = dt
        self.dealias = dealias
        self.nonlinear = nonlinear
        self.e_half = heat_factor(0.5 * dt, self.g)
        self.e_full = heat_factor(dt, self.g)

    def rhs(self, u_hat: np.ndarray) -> np.ndarray:
        u = self.g.ifft(u_hat)
        return -_flux_hat(u, u, self.m, self.dealias)

    def __call__(self, u_hat: np.ndarray) -> np.ndarray:
        eh, ef, dt = self.e_half, self.e_full, self.dt
        if not self.nonlinear:
            return ef * u_hat
        k1 = self.rhs(u_hat)
        eu = eh * u_hat
        k2 = self.rhs(eu + 0.5 * dt * eh * k1)
        k3 = self.rhs(eu + 0.5 * dt * k2)
        k4 = self.rhs(ef * u_hat + dt * eh * k3)
        return ef * u_hat + (dt / 6.0) * (ef * k1 + 2.0 * eh * (k2 + k3) + k4)


def step(u: np.ndarray, m: MollifierSpec, dt: float, dealias: bool = True, nonlinear: bool = True) -> np.ndarray:
    """One integrating-factor RK4 step of the mollified equations."""
    g = m.grid
    limit = 0.9 * g.spacing ** 2 / 6.0
    if not 0 < dt <= limit:
        raise ValueError(f"dt must lie in (0, {limit:.4g}], got {dt}")
    out = g.ifft(_Stepper(m, dt, dealias, nonlinear)(g.fft(u)))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite values after step")
    return out


def star_components(b: np.ndarray, t: float, r: float, grid: Grid) -> dict[str, float]:
    """||b||_r, sqrt(t)||grad (x) b||_r and t^(3/(2r))||b||_inf at one time."""
    b_hat = grid.fft(b)
    grad = np.stack([grid.ifft(1j * k * b_hat) for k in grid.wavenumbers])
    return {
        "star_r": lp_norm(b, r, grid),
        "star_grad": math.sqrt(t) * lp_norm(grad, r, grid),
        "star_inf": t ** (1.5 / r) * float(magnitude(b).max()),
    }


def _snapshot_diagnostics(u: np.ndarray, grid: Grid, t: float, star_r: float | None) -> dict:
    d = {
        "l2": weighted_lp_norm(u, 2, 0, grid),
        "l2_phi2": weighted_lp_norm(u, 2, 2, grid),
        "l2_phi4": weighted_lp_norm(u, 2, 4, grid),
        "linf": weighted_lp_norm(u, math.inf, 0, grid),
        "div": divergence_residual(u, grid),
    }
    if star_r is not None:
        d.update(star_components(u, t, star_r, grid))
    return d


def _integrate(u0: np.ndarray, cfg: SolverConfig, allow_divergent: bool, star_r: float | None, kind: str) -> Trajectory:
    g = cfg.grid
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (3, *g.shape):
        raise ValueError(f"expected a vector field of shape {(3, *g.shape)}, got {u0.shape}")
    if not np.all(np.isfinite(u0)):
        raise FloatingPointError("u0 contains non-finite values")
    if not allow_divergent:
        res = divergence_residual(u0, g)
        if res > 1e-10:
            raise ValueError(f"u0 is not divergence-free (relative residual {res:.2e})")
    dt = cfg.step_size
    n_steps = cfg.n_steps
    stepper = _Stepper(cfg.mollifier, dt, cfg.dealias, cfg.nonlinear)

    u_hat = g.fft(u0)
    norm0 = math.sqrt(g.spectral_l2_sq(u_hat))
    times = [0.0]
    snaps = [u0.copy()]
    diags = [_snapshot_diagnostics(u0, g, 0.0, star_r)]
    blowup = False
    last_t = 0.0
    for n in range(1, n_steps + 1):
        new_hat = stepper(u_hat)
        norm = math.sqrt(g.spectral_l2_sq(new_hat)) if np.all(np.isfinite(new_hat)) else math.inf
        if not math.isfinite(norm) or (norm0 > 0 and norm > BLOWUP_FACTOR * norm0):
            blowup = True
            break
        u_hat = new_hat
        last_t = n * dt
        if n % cfg.snapshot_stride == 0 or n == n_steps:
            u = g.ifft(u_hat)
            times.append(last_t)
            snaps.append(u)
            diags.append(_snapshot_diagnostics(u, g, last_t, star_r))
    meta = {
        "kind": kind,
        "epsilon": cfg.mollifier.epsilon,
        "alpha": cfg.mollifier.alpha,
        "dt": dt,
        "t_end": cfg.t_end,
        "snapshot_stride": cfg.snapshot_stride,
        "dealias": cfg.dealias,
        "nonlinear": cfg.nonlinear,
    }
    if star_r is not None:
        meta["r"] = star_r
    return Trajectory(np.array(times), snaps, diags, g, blowup, last_t, meta)


def solve_mollified(u0: np.ndarray, cfg: SolverConfig, allow_divergent: bool = False) -> Trajectory:
    """Integrate the mollified equations from u0 on [0, t_end].

    On blow-up (non-finite values or growth by 1e8 in L^2) integration stops
    and the partial trajectory is returned with ``blowup`` set and
    ``last_valid_time`` holding the empirical maximal time.
    """
    return _integrate(u0, cfg, allow_divergent, None, "u")


def solve_b(b0: np.ndarray, cfg: SolverConfig, r: float = 6.0) -> Trajectory:
    """Same integration as :func:`solve_mollified`, also recording the star-norm pieces."""
    if not r > 3:
        raise ValueError("r must exceed 3")
    return _integrate(b0, cfg, False, r, "b")


# ---------------------------------------------------------------------------
# a posteriori Duhamel checks


def _duhamel_series(times, states, forcing_hat, grid: Grid, gamma: float):
    """Max weighted norm of R(t) = u(t) - e^{t Lap}u(0) + int_0^t e^{(t-s)Lap} F(s) ds.

    ``forcing_hat(i)`` returns the spectral integrand at snapshot i; the time
    integral is the trapezoid rule between snapshots.
    """
    u0_hat = grid.fft(states[0])
    I_hat = np.zeros_like(u0_hat)
    f_prev = forcing_hat(0)
    worst_r = 0.0
    worst_u = weighted_lp_norm(states[0], 2, gamma, grid).value
    for i in range(1, len(times)):
        delta = times[i] - times[i - 1]
        e = heat_factor(delta, grid)
        f_next = forcing_hat(i)
        I_hat = e * I_hat + 0.5 * delta * (e * f_prev + f_next)
        f_prev = f_next
        R = states[i] - grid.ifft(heat_factor(times[i], grid) * u0_hat - I_hat)
        worst_r = max(worst_r, weighted_lp_norm(R, 2, gamma, grid).value)
        worst_u = max(worst_u, weighted_lp_norm(states[i], 2, gamma, grid).value)
    if worst_u == 0.0:
        return 0.0
    return worst_r / worst_u


def duhamel_residual(traj: Trajectory, u0: np.ndarray, m: MollifierSpec, gamma: float = 4.0) -> float:
    """max_t ||R(t)||_{L^2(Phi_gamma)} / max_t ||u(t)||_{L^2(Phi_gamma)} for the mild formulation."""
    g = traj.grid
    dealias = traj.meta.get("dealias", True)
    nonlinear = traj.meta.get("nonlinear", True)
    states = [np.asarray(u0, dtype=float)] + traj.snapshots[1:]

    def forcing(i):
        if not nonlinear:
            return np.zeros((3, *g.spectral_shape), dtype=complex)
        u = states[i]
        return _flux_hat(u, u, m, dealias)

    return _duhamel_series(traj.times, states, forcing, g, gamma)


def v_residual(u_traj: Trajectory, b_traj: Trajectory, m: MollifierSpec, gamma: float = 2.0) -> float:
    """Duhamel residual of v = u - b under v' = Lap v - [N(b,v) + N(v,b) + N(v,v)]."""
    if len(u_traj.times) != len(b_traj.times) or not np.allclose(u_traj.times, b_traj.times, rtol=0, atol=1e-12):
        raise ValueError("u and b trajectories have different time axes")
    g = u_traj.grid
    dealias = u_traj.meta.get("dealias", True)
    nonlinear = u_traj.meta.get("nonlinear", True)
    vs = [u - b for u, b in zip(u_traj.snapshots, b_traj.snapshots)]
    bs = b_traj.snapshots

    def forcing(i):
        if not nonlinear:
            return np.zeros((3, *g.spectral_shape), dtype=complex)
        v, b = vs[i], bs[i]
        return _flux_hat(b, v, m, dealias) + _flux_hat(v, b, m, dealias) + _flux_hat(v, v, m, dealias)

    return _duhamel_series(u_traj.times, vs, forcing, g, gamma)
