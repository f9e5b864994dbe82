"""Splitting of weighted-L^p data into a weighted-L^2 part and a small L^r part.

The split is a pointwise threshold tau(x) = A * Phi(x)^mu with
mu = (2 - gamma)/(p - 2).  Where |u0| <= tau the value goes to the L^r part,
elsewhere to the weighted-L^2 part.  Two elementary bounds follow for every A:

    ||b_raw||_r             <= A^((r-p)/r) ||u0||_{L^p(Phi_gamma)}^(p/r)   (r >= r0)
    ||v_raw||_{L^2(Phi_2)}  <= A^((2-p)/2) ||u0||_{L^p(Phi_gamma)}^(p/2)

so shrinking A shrinks the L^r part.  The L^r part is then projected onto
divergence-free fields and the other part is defined by subtraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .spectral import dealias as dealias_filter
from .spectral import divergence_residual, leray_project
from .weighted import lp_norm, magnitude, weight_on_grid, weighted_lp_norm

DIV_TOL = 1e-10


@dataclass(frozen=True)
class SplitConfig:
    p: float
    gamma: float
    r: float
    eta: float

    def __post_init__(self):
        if not 2 < self.p < math.inf:
            raise ValueError(f"p must lie in (2, inf), got {self.p}")
        if not 0 < self.gamma < 2:
            raise ValueError(f"gamma must lie in (0, 2), got {self.gamma}")
        # r = r0 is admitted: the threshold bound on b_raw holds for every r >= r0.
        if not (self.r > 3.0 and self.r >= self.r0 * (1 - 1e-12)):
            raise ValueError(f"r must satisfy r > 3 and r >= r0 = {self.r0}, got {self.r}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")

    @property
    def r0(self) -> float:
        return 2.0 * (self.p - self.gamma) / (2.0 - self.gamma)

    @property
    def delta(self) -> float:
        """Interpolation exponent; reported only, the split does not use it."""
        return (0.5 - 1.0 / self.r0) / (0.5 - 1.0 / self.r)

    @property
    def mu(self) -> float:
        return (2.0 - self.gamma) / (self.p - 2.0)


@dataclass
class SplitResult:
    v0: np.ndarray
    b0: np.ndarray
    threshold_A: float
    mu: float
    achieved_b_norm: float
    achieved_v_norm: float
    eta: float
    trace: list[tuple[float, float, float]] = field(default_factory=list)
    """(A, ||b_raw||_r, ||P b_raw||_r) for every threshold evaluated."""
    config: SplitConfig | None = None


def threshold_split(u0: np.ndarray, cfg: SplitConfig, A: float, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Exact pointwise partition u0 = v_raw + b_raw at threshold A."""
    if not A > 0:
        raise ValueError(f"threshold A must be positive, got {A}")
    if not np.all(np.isfinite(u0)):
        raise FloatingPointError("u0 contains non-finite values")
    tau = A * weight_on_grid(cfg.mu, grid, check=False)
    keep = magnitude(u0) <= tau
    b_raw = np.where(keep, u0, 0.0)
    return u0 - b_raw, b_raw


def raw_b_bound(A: float, u0_norm: float, cfg: SplitConfig) -> float:
    return A ** ((cfg.r - cfg.p) / cfg.r) * u0_norm ** (cfg.p / cfg.r)


def raw_v_bound(A: float, u0_norm: float, cfg: SplitConfig) -> float:
    return A ** ((2.0 - cfg.p) / 2.0) * u0_norm ** (cfg.p / 2.0)


def _project_b(b_raw: np.ndarray, grid: Grid, dealias: bool) -> np.ndarray:
    if dealias:
        b_raw = dealias_filter(b_raw, grid)
    return leray_project(b_raw, grid)


def choose_threshold(
    u0: np.ndarray,
    cfg: SplitConfig,
    grid: Grid,
    dealias: bool = True,
    max_iter: int = 80,
) -> tuple[float, list[tuple[float, float, float]]]:
    """Log-bisection for A with ||P b_raw||_r inside [0.5 eta, 0.9 eta].

    Returns the threshold and the evaluation trace.  If the data is already
    small in L^r the largest meaningful threshold is accepted at once.
    """
    mag = magnitude(u0)
    if not np.any(mag > 0):
        raise ValueError("choose_threshold needs nonzero data")
    eta = cfg.eta
    trace: list[tuple[float, float, float]] = []

    def evaluate(A: float) -> float:
        _, b_raw = threshold_split(u0, cfg, A, grid)
        proj = lp_norm(_project_b(b_raw, grid, dealias), cfg.r, grid)
        trace.append((A, lp_norm(b_raw, cfg.r, grid), proj))
        return proj

    a_hi = float(np.max(mag / weight_on_grid(cfg.mu, grid, check=False)))
    n_hi = evaluate(a_hi)
    if n_hi < 0.9 * eta:
        return a_hi, trace
    a_lo = 1e-12 * a_hi
    n_lo = evaluate(a_lo)
    if n_lo >= eta:
        raise RuntimeError(
            f"projected L^r norm {n_lo:.3e} >= eta = {eta:.3e} even at A = {a_lo:.3e}; "
            "grid too coarse or eta too small"
        )
    if n_lo >= 0.5 * eta:
        return a_lo, trace
    lo, hi = a_lo, a_hi
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        val = evaluate(mid)
        if 0.5 * eta <= val <= 0.9 * eta:
            return mid, trace
        if val > 0.9 * eta:
            hi = mid
        else:
            lo = mid
        if hi / lo < 1 + 1e-12:
            break
    ok = [(A, proj) for A, _, proj in trace if proj < 0.9 * eta]
    return max(ok)[0], trace


def calderon_split(
    u0: np.ndarray,
    cfg: SplitConfig,
    grid: Grid,
    dealias: bool = True,
    check_divergence: bool = True,
) -> SplitResult:
    """Split divergence-free u0 into v0 + b0 with ||b0||_r < eta, both divergence-free.

    With ``dealias`` the thresholded part is band-limited by the 2/3 rule
    before projection, so b0 carries no aliasing-prone high modes.
    """
    u0 = np.asarray(u0, dtype=float)
    if check_divergence:
        res = divergence_residual(u0, grid)
        if res > DIV_TOL:
            raise ValueError(f"u0 is not divergence-free (relative residual {res:.2e})")
    mu = cfg.mu
    if not np.any(u0 != 0):
        zero = np.zeros_like(u0)
        return SplitResult(zero, zero.copy(), math.inf, mu, 0.0, 0.0, cfg.eta, config=cfg)
    A, trace = choose_threshold(u0, cfg, grid, dealias)
    _, b_raw = threshold_split(u0, cfg, A, grid)
    b0 = _project_b(b_raw, grid, dealias)
    v0 = u0 - b0
    return SplitResult(
        v0=v0,
        b0=b0,
        threshold_A=A,
        mu=mu,
        achieved_b_norm=lp_norm(b0, cfg.r, grid),
        achieved_v_norm=weighted_lp_norm(v0, 2, 2, grid).value,
        eta=cfg.eta,
        trace=trace,
        config=cfg,
    )
