"""A priori quantities for the split dynamics: star norms, weighted energy budget,
existence-time bounds, constant calibration and parabolic rescaling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from .calderon import SplitResult
from .grid import Grid
from .mollified import (
    MollifierSpec,
    SolverConfig,
    Trajectory,
    mollify,
    nonlinear_term,
    solve_mollified,
    star_components,
)
from .spectral import divergence_field, leray_project
from .weighted import magnitude, weight_on_grid, weighted_lp_norm


# ---------------------------------------------------------------------------
# heat kernel constants


@lru_cache(maxsize=None)
def heat_grad_l1() -> float:
    """||grad W_1||_1 for W_1(x) = (4 pi)^(-3/2) exp(-|x|^2/4), by radial quadrature."""
    c = (4.0 * math.pi) ** -1.5
    val, _ = integrate.quad(lambda r: 4.0 * math.pi * r * r * 0.5 * r * c * math.exp(-r * r / 4.0),
                            0.0, math.inf, epsabs=0, epsrel=1e-13)
    return val


@lru_cache(maxsize=None)
def heat_lq_norm(q: float) -> float:
    """||W_1||_q by radial quadrature."""
    c = (4.0 * math.pi) ** -1.5
    if math.isinf(q):
        return c
    val, _ = integrate.quad(lambda r: 4.0 * math.pi * r * r * (c * math.exp(-r * r / 4.0)) ** q,
                            0.0, math.inf, epsabs=0, epsrel=1e-13)
    return val ** (1.0 / q)


# ---------------------------------------------------------------------------
# star norms


@dataclass
class StarNormReport:
    sup_r: float
    sup_grad: float
    sup_inf: float
    w1_grad_l1: float
    w1_dual_norm: float
    eta: float | None = None

    @property
    def bounds(self) -> tuple[float, float, float] | None:
        if self.eta is None:
            return None
        e = self.eta
        return 2.0 * e, 2.0 * self.w1_grad_l1 * e, 2.0 * self.w1_dual_norm * e

    @property
    def flags(self) -> tuple[bool, bool, bool] | None:
        b = self.bounds
        if b is None:
            return None
        return self.sup_r <= b[0], self.sup_grad <= b[1], self.sup_inf <= b[2]

    @property
    def all_pass(self) -> bool:
        f = self.flags
        return bool(f is not None and all(f))


def star_series(traj: Trajectory, r: float) -> dict[str, np.ndarray]:
    """Per-snapshot star-norm components, reusing recorded values when r matches."""
    keys = ("star_r", "star_grad", "star_inf")
    if traj.meta.get("r") == r and traj.diagnostics and keys[0] in traj.diagnostics[0]:
        return {k: traj.series(k) for k in keys}
    rows = [star_components(b, float(t), r, traj.grid) for t, b in zip(traj.times, traj.snapshots)]
    return {k: np.array([row[k] for row in rows]) for k in keys}


def star_norms(b_traj: Trajectory, r: float, eta: float | None = None, t_max: float | None = None) -> StarNormReport:
    """Sup over the trajectory of ||b||_r, sqrt(t)||grad b||_r and t^(3/(2r))||b||_inf.

    ``eta`` defaults to the value stored in the trajectory metadata; with
    ``t_max`` only snapshots with t <= t_max count.
    """
    if not r > 3:
        raise ValueError("r must exceed 3")
    s = star_series(b_traj, r)
    sel = np.ones(len(b_traj.times), bool) if t_max is None else b_traj.times <= t_max * (1 + 1e-12)
    if eta is None:
        eta = b_traj.meta.get("eta")
    return StarNormReport(
        sup_r=float(s["star_r"][sel].max()),
        sup_grad=float(s["star_grad"][sel].max()),
        sup_inf=float(s["star_inf"][sel].max()),
        w1_grad_l1=heat_grad_l1(),
        w1_dual_norm=heat_lq_norm(r / (r - 1.0)),
        eta=eta,
    )


def star_flag_horizon(b_traj: Trajectory, r: float, eta: float) -> tuple[float, bool]:
    """Last snapshot time up to which all three star bounds hold, and whether the run was censored."""
    s = star_series(b_traj, r)
    rep = StarNormReport(0, 0, 0, heat_grad_l1(), heat_lq_norm(r / (r - 1.0)), eta)
    b1, b2, b3 = rep.bounds
    ok = (np.maximum.accumulate(s["star_r"]) <= b1) & (np.maximum.accumulate(s["star_grad"]) <= b2) \
        & (np.maximum.accumulate(s["star_inf"]) <= b3)
    if ok.all():
        return float(b_traj.times[-1]), True
    first_bad = int(np.argmin(ok))
    return float(b_traj.times[max(first_bad - 1, 0)]), False


# ---------------------------------------------------------------------------
# pressure and energy budget


def riesz_pair_symbol(i: int, j: int, grid: Grid) -> np.ndarray:
    """Symbol of R_i R_j: -k_i k_j / |k|^2, zero on the mean mode."""
    k = grid.wavenumbers
    ksq = grid.k_odd_sq
    inv = np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)
    return -k[i] * k[j] * inv


def pressure_q(v: np.ndarray, m: MollifierSpec, dealias: bool = True) -> np.ndarray:
    """q = sum_ij R_i R_j ((phi_eps * (theta_alpha v_i)) v_j)."""
    g = m.grid
    mv = mollify(v, m)
    F_hat = g.fft(mv[:, None] * v[None, :])
    if dealias:
        F_hat *= g.dealias_mask
    q_hat = sum(riesz_pair_symbol(i, j, g) * F_hat[i, j] for i in range(3) for j in range(3))
    return g.ifft(q_hat)


@dataclass
class EnergyBudget:
    times: np.ndarray
    energy: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    A4: np.ndarray
    A5: np.ndarray
    A6: np.ndarray
    lhs_rate: np.ndarray
    grad_term: np.ndarray
    residual: np.ndarray
    bound_A23: np.ndarray | None = None

    @property
    def A_sum(self) -> np.ndarray:
        return self.A1 + self.A2 + self.A3 + self.A4 + self.A5 + self.A6

    def relative_residual(self, interior: bool = True) -> float:
        """max |residual| / max |lhs_rate|, over interior snapshots by default."""
        sl = slice(1, -1) if interior and len(self.times) > 2 else slice(None)
        denom = np.max(np.abs(self.lhs_rate[sl]))
        num = np.max(np.abs(self.residual[sl]))
        if denom == 0:
            return 0.0 if num == 0 else math.inf
        return float(num / denom)

    def a1_constant(self) -> float:
        """max_t |A1| / ||v||^2_{L^2(Phi_2)} (the |Lap Phi^2| <= C Phi^2 constant, measured)."""
        mask = self.energy > 0
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(self.A1[mask]) / self.energy[mask]))

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"time": self.times, "energy": self.energy, "lhs_rate": self.lhs_rate,
                "grad_term": self.grad_term}
        for k in range(1, 7):
            cols[f"A{k}"] = getattr(self, f"A{k}")
        cols["residual"] = self.residual
        return cols


def _budget_terms(v: np.ndarray, b: np.ndarray, m: MollifierSpec, dealias: bool, nonlinear: bool) -> dict[str, float]:
    g = m.grid
    w2 = weight_on_grid(2.0, g)
    dV = g.cell_volume
    v_hat = g.fft(v)
    grad = np.stack([g.ifft(1j * k * v_hat) for k in g.wavenumbers])  # grad[i, j] = d_i v_j
    lap = g.ifft(-g.k_sq * v_hat)
    vv = np.sum(v * v, axis=0)
    grad_sq = np.sum(grad * grad, axis=(0, 1))
    out = {
        "energy": float(np.sum(w2 * vv) * dV),
        "grad_term": float(2.0 * np.sum(w2 * grad_sq) * dV),
        "A1": float(np.sum(w2 * (2.0 * np.sum(v * lap, axis=0) + 2.0 * grad_sq)) * dV),
    }
    if not nonlinear:
        out.update(A2=0.0, A3=0.0, A4=0.0, A5=0.0, A6=0.0)
        return out
    n_vb = nonlinear_term(v, b, m, dealias)
    n_bv = nonlinear_term(b, v, m, dealias)
    out["A2"] = float(-2.0 * np.sum(w2 * np.sum(v * n_vb, axis=0)) * dV)
    out["A3"] = float(-2.0 * np.sum(w2 * np.sum(v * n_bv, axis=0)) * dV)
    mv = mollify(v, m)
    div_m = divergence_field(mv, g)
    # m . grad |v|^2 = 2 sum_j v_j (m . grad) v_j
    transport = 2.0 * np.einsum("jxyz,ixyz,ijxyz->xyz", v, mv, grad, optimize=True)
    out["A4"] = float(-np.sum(w2 * (transport + vv * div_m)) * dV)
    q = pressure_q(v, m, dealias)
    q_hat = g.fft(q)
    grad_q = np.stack([g.ifft(1j * k * q_hat) for k in g.wavenumbers])
    div_v = g.ifft(1j * sum(k * vh for k, vh in zip(g.wavenumbers, v_hat)))
    out["A5"] = float(-2.0 * np.sum(w2 * (np.sum(v * grad_q, axis=0) + q * div_v)) * dV)
    out["A6"] = float(-np.sum(w2 * vv * div_m) * dV)
    return out


def energy_budget(v_traj: Trajectory, b_traj: Trajectory, m: MollifierSpec,
                  eta: float | None = None, r: float | None = None) -> EnergyBudget:
    """Weighted energy balance of v = u - b, one row per snapshot.

    ``v_traj`` holds the v snapshots (for instance from :func:`difference`).
    The rate d/dt ||v||^2_{L^2(Phi_2)} is a second-order finite difference of
    the energy series.  With ``eta`` and ``r`` the bound-side quantity
    ||v||^2 (1 + eta^2 t^(-3/r)) used for A2 and A3 is reported too.
    """
    if len(v_traj.times) != len(b_traj.times) or not np.allclose(v_traj.times, b_traj.times, rtol=0, atol=1e-12):
        raise ValueError("v and b trajectories have different time axes")
    dealias = v_traj.meta.get("dealias", True)
    nonlinear = v_traj.meta.get("nonlinear", True)
    rows = [_budget_terms(v, b, m, dealias, nonlinear) for v, b in zip(v_traj.snapshots, b_traj.snapshots)]
    times = np.asarray(v_traj.times, dtype=float)
    series = {k: np.array([row[k] for row in rows]) for k in rows[0]}
    energy = series["energy"]
    if len(times) >= 3:
        lhs = np.gradient(energy, times, edge_order=2)
    elif len(times) == 2:
        lhs = np.full(2, (energy[1] - energy[0]) / (times[1] - times[0]))
    else:
        lhs = np.zeros(1)
    A_sum = sum(series[f"A{k}"] for k in range(1, 7))
    residual = lhs + series["grad_term"] - A_sum
    bound = None
    if eta is not None and r is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = 1.0 + eta ** 2 * np.where(times > 0, times, 0.0) ** (-3.0 / r)
            bound = np.where(energy > 0, energy * factor, 0.0)
    return EnergyBudget(times, energy, series["A1"], series["A2"], series["A3"], series["A4"],
                        series["A5"], series["A6"], lhs, series["grad_term"], residual, bound)


def difference(u_traj: Trajectory, b_traj: Trajectory) -> Trajectory:
    """The trajectory v = u - b, snapshot by snapshot."""
    if len(u_traj.times) != len(b_traj.times) or not np.allclose(u_traj.times, b_traj.times, rtol=0, atol=1e-12):
        raise ValueError("u and b trajectories have different time axes")
    g = u_traj.grid
    snaps = [u - b for u, b in zip(u_traj.snapshots, b_traj.snapshots)]
    diags = [{"l2_phi2": weighted_lp_norm(v, 2, 2, g)} for v in snaps]
    meta = dict(u_traj.meta, kind="v")
    return Trajectory(np.array(u_traj.times), snaps, diags, g, u_traj.blowup or b_traj.blowup,
                      min(u_traj.last_valid_time, b_traj.last_valid_time), meta)


# ---------------------------------------------------------------------------
# existence-time bounds


@dataclass(frozen=True)
class ExistenceBounds:
    C0: float
    C1: float
    C2: float
    T_eps_alpha: float
    T_eta: float
    T_eta_eps_alpha: float
    lambda_T: float
    alpha_T: float


def t_eps_alpha(epsilon: float, alpha: float, u0_norm: float, C0: float = 1.0) -> float:
    """min(1, eps^3 alpha^4 / (C0 ||u0||^2 (2 + alpha)^4))."""
    if u0_norm == 0:
        return 1.0
    return min(1.0, epsilon ** 3 * alpha ** 4 / (C0 * u0_norm ** 2 * (2.0 + alpha) ** 4))


def t_eta(eta: float, r: float, C1: float = 1.0) -> float:
    """T with T^(1/2 - 3/(2r)) = 1/(C1 eta)."""
    if not r > 3:
        raise ValueError("r must exceed 3")
    return (C1 * eta) ** (-2.0 * r / (r - 3.0))


def t_v(alpha: float, v0_norm: float, C2: float = 1.0) -> float:
    return 1.0 / (C2 * (1.0 + max(1.0, alpha) ** 6 * v0_norm ** 4))


def existence_bounds(
    u0_norm: float,
    split: SplitResult,
    m: MollifierSpec,
    consts: tuple[float, float, float] = (1.0, 1.0, 1.0),
    r: float | None = None,
    horizon: float = 1.0,
) -> ExistenceBounds:
    """Closed-form lower bounds on the existence times plus the rescaling choice.

    ``u0_norm`` is ||u0||_{L^p(Phi_gamma)}; ``r`` defaults to the split's
    configuration; ``horizon`` is the target time T for lambda_T.
    """
    C0, C1, C2 = consts
    if min(consts) <= 0:
        raise ValueError("constants must be positive")
    if r is None:
        if split.config is None:
            raise ValueError("r is needed when the split carries no configuration")
        r = split.config.r
    te = t_eps_alpha(m.epsilon, m.alpha, u0_norm, C0)
    tn = t_eta(split.eta, r, C1)
    tv = t_v(m.alpha, split.achieved_v_norm, C2)
    lam = choose_lambda(split.v0, horizon, C2, m.grid).lambda_T
    return ExistenceBounds(C0, C1, C2, te, tn, min(te, tn / C2, tv), lam, 1.0 / lam)


# ---------------------------------------------------------------------------
# calibration


@dataclass
class Calibration:
    C0: float | None = None
    C1: float | None = None
    C2: float | None = None
    residuals: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)


def _fit_log_constant(log_c: np.ndarray, predictors: np.ndarray, name: str) -> tuple[float, float]:
    if len(log_c) < 3:
        raise ValueError(f"{name}: at least 3 runs are needed, got {len(log_c)}")
    if len(np.unique(np.round(predictors, 12))) < 2:
        raise ValueError(f"{name}: degenerate sweep, all runs share the same parameters")
    if not np.all(np.isfinite(log_c)):
        raise ValueError(f"{name}: non-finite horizons in sweep")
    mean = float(np.mean(log_c))
    rms = float(np.sqrt(np.mean((log_c - mean) ** 2)))
    return math.exp(mean), rms


def calibrate_constants(
    c0_runs: Sequence[dict] | None = None,
    c1_runs: Sequence[dict] | None = None,
    c2_runs: Sequence[dict] | None = None,
) -> Calibration:
    """Fit C0, C1, C2 from observed horizons by least squares in log space.

    Each bound is a power law with known exponents, so only the constant is
    free and the fit is the mean log offset.  Run records:

    * C0: epsilon, alpha, u0_norm, horizon with horizon = eps^3 alpha^4 / (C0 ||u0||^2 (2+alpha)^4)
    * C1: eta, r, horizon with horizon = (C1 eta)^(-2r/(r-3))
    * C2: alpha, v0_norm, horizon with horizon = 1 / (C2 (1 + max(1,alpha)^6 ||v0||^4))
    """
    out = Calibration()
    if c0_runs:
        pred = np.array([run["epsilon"] ** 3 * run["alpha"] ** 4 / (run["u0_norm"] ** 2 * (2 + run["alpha"]) ** 4)
                         for run in c0_runs])
        h = np.array([run["horizon"] for run in c0_runs])
        out.C0, out.residuals["C0"] = _fit_log_constant(np.log(pred) - np.log(h), pred, "C0")
        out.counts["C0"] = len(h)
    if c1_runs:
        eta = np.array([run["eta"] for run in c1_runs])
        r = np.array([run["r"] for run in c1_runs])
        h = np.array([run["horizon"] for run in c1_runs])
        log_c = -(r - 3.0) / (2.0 * r) * np.log(h) - np.log(eta)
        out.C1, out.residuals["C1"] = _fit_log_constant(log_c, eta * 1e3 + r, "C1")
        out.counts["C1"] = len(h)
    if c2_runs:
        pred = np.array([1.0 + max(1.0, run["alpha"]) ** 6 * run["v0_norm"] ** 4 for run in c2_runs])
        h = np.array([run["horizon"] for run in c2_runs])
        out.C2, out.residuals["C2"] = _fit_log_constant(-np.log(h) - np.log(pred), pred, "C2")
        out.counts["C2"] = len(h)
    return out


def c1_from_run(b_traj: Trajectory, r: float, eta: float) -> tuple[float, bool]:
    """C1 from one b run: the horizon where the star flags stop holding (censored at run end)."""
    horizon, censored = star_flag_horizon(b_traj, r, eta)
    if horizon <= 0:
        raise ValueError("star bounds fail at the first snapshot after t = 0")
    return 1.0 / (eta * horizon ** ((r - 3.0) / (2.0 * r))), censored


def v_growth_horizon(v_traj: Trajectory) -> tuple[float, bool]:
    """Last time with ||v(t)||_{L^2(Phi_2)} <= 2 ||v(0)||, and whether the run was censored."""
    e = np.array([weighted_lp_norm(v, 2, 2, v_traj.grid).value for v in v_traj.snapshots])
    ok = np.maximum.accumulate(e) <= 2.0 * e[0]
    if ok.all():
        return float(v_traj.times[-1]), True
    return float(v_traj.times[max(int(np.argmin(ok)) - 1, 0)]), False


# ---------------------------------------------------------------------------
# rescaling


def _trig_matrix(n: int, box_length: float, y: np.ndarray) -> np.ndarray:
    """Rows evaluate the periodic trigonometric interpolant of n samples at points y."""
    h = box_length / n
    x = -0.5 * box_length + h * np.arange(n)
    z = (y[:, None] - x[None, :]) * (2.0 * np.pi / box_length)
    m = np.arange(1, n // 2)
    D = 1.0 + 2.0 * np.cos(z[..., None] * m).sum(-1) + np.cos(0.5 * n * z)
    return D / n


def _axis_map(grid: Grid, lam: float) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
    """Per-axis sampling of x/lam: (exact indices or None, interpolation matrix or None, inside mask)."""
    y = grid.x / lam
    inside = np.abs(y) < 0.5 * grid.box_length - 1e-12
    inv = 1.0 / lam
    if abs(inv - round(inv)) < 1e-12:
        k = int(round(inv))
        idx = grid.n // 2 + k * (np.arange(grid.n) - grid.n // 2)
        inside = (idx >= 0) & (idx < grid.n)
        return np.where(inside, idx, 0), None, inside
    M = _trig_matrix(grid.n, grid.box_length, y)
    M[~inside] = 0.0
    return None, M, inside


def _support_checks(u: np.ndarray, lam: float, grid: Grid, tol: float) -> None:
    mag = magnitude(u)
    top = mag.max()
    if top == 0 or lam == 1.0:
        return
    outer = ~grid.inner_mask(0.8)
    shell = mag[outer].max() / top
    if shell > tol:
        raise ValueError(f"field is not negligible near the box edge (shell/max = {shell:.2e} > {tol:.0e})")
    # content above lam * Nyquist maps past the grid's Nyquist after rescaling
    u_hat = grid.fft(u)
    cut = lam * grid.n / 2.0
    m1, m2, m3 = (np.abs(mi) for mi in grid._mode_index)
    high = (m1 >= cut) | (m2 >= cut) | (m3 >= cut)
    total = grid.spectral_l2_sq(u_hat)
    frac = math.sqrt(grid.spectral_l2_sq(u_hat * high) / total)
    if frac > tol:
        raise ValueError(f"rescaled field is under-resolved (high-mode fraction {frac:.2e} > {tol:.0e})")


def rescale_field(u: np.ndarray, lam: float, grid: Grid, tol: float = 1e-3) -> np.ndarray:
    """u_lam(x) = u(x/lam) / lam sampled on the same grid.

    Exact index selection when 1/lam is an integer, separable trigonometric
    interpolation otherwise.  Points whose preimage leaves the box are zero.
    """
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    u = np.asarray(u, dtype=float)
    if lam == 1.0:
        return u.copy()
    _support_checks(u, lam, grid, tol)
    idx, M, inside = _axis_map(grid, lam)
    if idx is not None:
        out = u[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]]
        mask = inside[:, None, None] & inside[None, :, None] & inside[None, None, :]
        out = np.where(mask, out, 0.0)
    else:
        out = np.einsum("ai,...ijk->...ajk", M, u, optimize=True)
        out = np.einsum("bj,...ajk->...abk", M, out, optimize=True)
        out = np.einsum("ck,...abk->...abc", M, out, optimize=True)
    return out / lam


def rescaled_v_energy(v0: np.ndarray, lam: float, grid: Grid) -> float:
    """||v_lam||^2_{L^2(Phi_2)} via the change of variables int |v(y)|^2 lam / (1 + lam^2 |y|^2) dy."""
    vv = np.sum(np.asarray(v0) ** 2, axis=0)
    return float(np.sum(vv * lam / (1.0 + lam * lam * grid.radius_sq)) * grid.cell_volume)


@dataclass
class LambdaChoice:
    lambda_T: float
    trace: list[tuple[float, float]]
    decreasing: bool


def choose_lambda(v0: np.ndarray, T: float, C2: float, grid: Grid, max_halvings: int = 200) -> LambdaChoice:
    """Largest lam = 2^-j (j >= 1) with lam^2 (1 + ||v_lam||^4_{L^2(Phi_2)}) < 1/(C2 T).

    The rescaled energy is computed from v0 by change of variables, which
    avoids resampling at every trial.
    """
    if not (T > 0 and C2 > 0):
        raise ValueError("T and C2 must be positive")
    if not np.all(np.isfinite(v0)):
        raise FloatingPointError("v0 contains non-finite values")
    target = 1.0 / (C2 * T)
    trace = []
    for j in range(1, max_halvings + 1):
        lam = 2.0 ** -j
        Q = lam * lam * (1.0 + rescaled_v_energy(v0, lam, grid) ** 2)
        trace.append((lam, Q))
        if Q < target:
            qs = [q for _, q in trace]
            return LambdaChoice(lam, trace, all(b < a for a, b in zip(qs, qs[1:])))
    raise RuntimeError(f"no lambda >= 2^-{max_halvings} satisfies the rescaling inequality")


def rescale_consistency(
    u0: np.ndarray,
    m: MollifierSpec,
    lam: float,
    cfg: SolverConfig,
    return_runs: bool = False,
):
    """Compare the rescaled (eps, alpha) run with the (lam eps, alpha/lam) run.

    Run (a) integrates u0 with ``m`` on [0, T]; run (b) integrates
    rescale_field(u0, lam) with parameters (lam eps, alpha/lam), step
    lam^2 dt, horizon lam^2 T.  Returns the largest relative L^2(Phi_4)
    distance between rescale(u_a(t)) and u_b(lam^2 t) over the snapshots.
    """
    g = cfg.grid
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    try:
        m_b = MollifierSpec.create(g, lam * m.epsilon, m.alpha / lam)
    except ValueError as exc:
        raise ValueError(f"rescaled parameters are infeasible: {exc}") from exc
    cfg_a = replace(cfg, mollifier=m)
    cfg_b = replace(cfg, mollifier=m_b, dt=lam * lam * cfg.step_size, t_end=lam * lam * cfg.t_end)
    run_a = solve_mollified(u0, cfg_a)
    # sampling u0(x/lam) aliases a trace of divergence; the continuum field is solenoidal
    ub0 = rescale_field(u0, lam, g)
    run_b = solve_mollified(leray_project(ub0, g) if lam != 1.0 else ub0, cfg_b)
    if len(run_a.times) != len(run_b.times) or run_a.blowup or run_b.blowup:
        raise RuntimeError("rescaled runs do not share a snapshot schedule or blew up")
    worst = 0.0
    for ua, ub in zip(run_a.snapshots, run_b.snapshots):
        diff = rescale_field(ua, lam, g, tol=math.inf) - ub
        ref = weighted_lp_norm(ub, 2, 4, g).value
        if ref > 0:
            worst = max(worst, weighted_lp_norm(diff, 2, 4, g).value / ref)
    if return_runs:
        return worst, run_a, run_b
    return worst
