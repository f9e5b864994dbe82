"""End-to-end experiment pipeline and the vanishing-mollifier convergence study."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .calderon import SplitConfig, calderon_split
from .estimates import (
    difference,
    energy_budget,
    existence_bounds,
    star_norms,
)
from .fields import make_test_field
from .grid import Grid
from .io import load_field, save_field, save_trajectory, sha256_file, write_manifest
from .mollified import (
    MollifierSpec,
    SolverConfig,
    Trajectory,
    product_flux_hat,
    duhamel_residual,
    solve_b,
    solve_mollified,
    v_residual,
)
from .spectral import leray_project
from .weighted import weighted_hs_norm, weighted_lp_norm


def grid_from(cfg: dict) -> Grid:
    return Grid(int(cfg["n"]), float(cfg["box_length"]))


def initial_field(cfg: dict, grid: Grid) -> np.ndarray:
    """Initial data from ``cfg['u0']`` (a snapshot path) or the named generator."""
    if cfg.get("u0"):
        loaded = load_field(cfg["u0"])
        if loaded.grid != grid:
            raise ValueError(f"u0 grid {loaded.grid} differs from the configured grid {grid}")
        return loaded.data
    kind = cfg["field"]
    if kind == "bump":
        return make_test_field("bump", grid, amplitude=cfg["amplitude"], sigma=cfg["sigma"], offset=cfg["offset"])
    if kind == "heavy_tail":
        return make_test_field("heavy_tail", grid, amplitude=cfg["amplitude"], decay=cfg["decay"])
    if kind == "taylor_green":
        return make_test_field("taylor_green", grid, amplitude=cfg["amplitude"], sigma=cfg["sigma"])
    if kind == "random":
        return make_test_field("random", grid, amplitude=cfg["amplitude"], sigma=cfg["sigma"], seed=cfg["seed"])
    return make_test_field(kind, grid)


def solver_config(cfg: dict, grid: Grid, epsilon: float | None = None, alpha: float | None = None) -> SolverConfig:
    m = MollifierSpec.create(grid, cfg["epsilon"] if epsilon is None else epsilon,
                             cfg["alpha"] if alpha is None else alpha)
    return SolverConfig(grid, m, float(cfg["dt"]), float(cfg["t_end"]), int(cfg["snapshot_stride"]),
                        bool(cfg["dealias"]), bool(cfg["nonlinear"]))


@dataclass
class PipelineResult:
    directory: Path
    stages: dict[str, str]
    summary: dict
    checks: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(s == "ok" for s in self.stages.values()) and all(self.checks.values())


def pipeline(cfg: dict, out_dir: str | Path) -> PipelineResult:
    """split -> solve u and b -> v = u - b -> diagnostics -> manifest.

    A failing stage is recorded with its error and every later stage is
    marked skipped.
    """
    start = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = grid_from(cfg)
    stages: dict[str, str] = {}
    summary: dict = {}
    checks: dict[str, bool] = {}
    outputs: dict[str, str] = {}
    inputs: dict[str, str] = {}
    if cfg.get("u0"):
        inputs["u0"] = sha256_file(cfg["u0"])
    state: dict = {}

    def u0_stage():
        u0 = leray_project(initial_field(cfg, grid), grid)
        state["u0"] = u0
        outputs["u0.field"] = save_field(out / "u0.field", u0, grid, {"stage": "u0"})
        summary["u0_lp_weighted"] = weighted_lp_norm(u0, cfg["p"], cfg["gamma"], grid).value

    def split_stage():
        scfg = SplitConfig(cfg["p"], cfg["gamma"], cfg["r"], cfg["eta"])
        res = calderon_split(state["u0"], scfg, grid)
        state["split"] = res
        outputs["v0.field"] = save_field(out / "v0.field", res.v0, grid, {"stage": "split"})
        outputs["b0.field"] = save_field(out / "b0.field", res.b0, grid, {"stage": "split"})
        summary["split"] = {"A": res.threshold_A, "mu": res.mu, "eta": res.eta,
                            "b_norm_r": res.achieved_b_norm, "v_norm_l2_phi2": res.achieved_v_norm,
                            "r0": scfg.r0, "delta": scfg.delta}
        (out / "split.json").write_text(json.dumps(summary["split"], indent=1))
        checks["split_b_below_eta"] = bool(res.achieved_b_norm < res.eta)

    def solve_stage():
        scfg = solver_config(cfg, grid)
        state["mollifier"] = scfg.mollifier
        u_traj = solve_mollified(state["u0"], scfg)
        b_traj = solve_b(state["split"].b0, scfg, cfg["r"])
        b_traj.meta["eta"] = cfg["eta"]
        state["u"], state["b"] = u_traj, b_traj
        for name, tr in (("u", u_traj), ("b", b_traj)):
            for k, v in save_trajectory(out / name, tr).items():
                outputs[f"{name}/{k}"] = v
        summary["blowup"] = bool(u_traj.blowup or b_traj.blowup)
        checks["no_blowup"] = not summary["blowup"]

    def diagnose_stage():
        m = state["mollifier"]
        u_traj, b_traj = state["u"], state["b"]
        v_traj = difference(u_traj, b_traj)
        stars = star_norms(b_traj, cfg["r"], cfg["eta"])
        budget = energy_budget(v_traj, b_traj, m, cfg["eta"], cfg["r"])
        write_budget_csv(out / "budget.csv", budget)
        outputs["budget.csv"] = sha256_file(out / "budget.csv")
        div = max(max(u_traj.series("div")), max(b_traj.series("div")))
        summary["diagnostics"] = {
            "star": {"sup_r": stars.sup_r, "sup_grad": stars.sup_grad, "sup_inf": stars.sup_inf,
                     "flags": [bool(f) for f in stars.flags]},
            "energy_relative_residual": budget.relative_residual() if len(budget.times) > 2 else 0.0,
            "duhamel_residual": duhamel_residual(u_traj, state["u0"], m),
            "v_residual": v_residual(u_traj, b_traj, m),
            "max_divergence": div,
        }
        d = summary["diagnostics"]
        checks["divergence"] = bool(div <= cfg["tol_div"])
        checks["duhamel"] = bool(d["duhamel_residual"] <= cfg["tol_duhamel"])
        checks["v_residual"] = bool(d["v_residual"] <= cfg["tol_v_residual"])
        checks["energy"] = bool(d["energy_relative_residual"] <= cfg["tol_energy"])

    def bounds_stage():
        eb = existence_bounds(summary["u0_lp_weighted"], state["split"], state["mollifier"],
                              (cfg["C0"], cfg["C1"], cfg["C2"]), cfg["r"], cfg["horizon"])
        summary["bounds"] = asdict(eb)

    failed = False
    for name, fn in (("u0", u0_stage), ("split", split_stage), ("solve", solve_stage),
                     ("diagnose", diagnose_stage), ("bounds", bounds_stage)):
        if failed:
            stages[name] = "skipped"
            continue
        try:
            fn()
            stages[name] = "ok"
        except Exception as exc:  # recorded, downstream skipped
            stages[name] = f"failed: {type(exc).__name__}: {exc}"
            failed = True
    summary["stages"] = stages
    summary["checks"] = checks
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True, default=_jsonable))
    outputs["summary.json"] = sha256_file(out / "summary.json")
    write_manifest(out / "manifest.json", cfg, inputs, outputs, time.perf_counter() - start)
    return PipelineResult(out, stages, summary, checks)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return str(x)


def write_budget_csv(path: str | Path, budget) -> None:
    cols = budget.columns()
    names = list(cols)
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(len(budget.times)):
            fh.write(",".join(repr(float(cols[k][i])) for k in names) + "\n")


# ---------------------------------------------------------------------------
# convergence study


@dataclass
class ConvergenceReport:
    epsilons: list[float]
    alphas: list[float]
    distances: np.ndarray
    nse_residuals: list[float]
    cauchy_tail: list[float] = field(default_factory=list)
    blowup: list[bool] = field(default_factory=list)

    @property
    def consecutive(self) -> list[float]:
        return [float(self.distances[i, i + 1]) for i in range(len(self.epsilons) - 1)]

    @property
    def consecutive_decreasing(self) -> bool:
        c = self.consecutive
        return all(b < a for a, b in zip(c, c[1:]))

    @property
    def cauchy(self) -> bool:
        """max_{m,n >= k} d(m, n) decreasing in k."""
        t = self.cauchy_tail
        return all(b <= a for a, b in zip(t, t[1:]))

    @property
    def residual_ratio(self) -> float:
        """NSE residual of the coarsest level over that of the finest."""
        fine = self.nse_residuals[-1]
        return math.inf if fine == 0 else self.nse_residuals[0] / fine


def time_l2(times: np.ndarray, values: np.ndarray) -> float:
    """sqrt of the trapezoid integral of values^2 over times."""
    return float(math.sqrt(integrate.trapezoid(np.asarray(values) ** 2, times)))


def trajectory_distance(a: Trajectory, b: Trajectory, gamma: float = 4.0) -> float:
    """||a - b||_{L^2((0,T), L^2(Phi_gamma))} on the shared snapshot times."""
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories have different time axes")
    norms = [weighted_lp_norm(x - y, 2, gamma, a.grid).value for x, y in zip(a.snapshots, b.snapshots)]
    return time_l2(a.times, norms)


def nse_residual(traj: Trajectory, dealias: bool = True) -> float:
    """|| d_t u - Lap u + P Div(u (x) u) ||_{L^2(t, H^-4(Phi_8))} over interior snapshots.

    d_t u is a centred difference of neighbouring snapshots; the endpoints
    are excluded.
    """
    g = traj.grid
    t = traj.times
    if len(t) < 3:
        raise ValueError("need at least three snapshots")
    vals = []
    for i in range(1, len(t) - 1):
        u = traj.snapshots[i]
        dudt = (traj.snapshots[i + 1] - traj.snapshots[i - 1]) / (t[i + 1] - t[i - 1])
        u_hat = g.fft(u)
        res = dudt - g.ifft(-g.k_sq * u_hat) + g.ifft(product_flux_hat(u, u, g, dealias))
        vals.append(weighted_hs_norm(res, -4.0, 8.0, g).value)
    return time_l2(t[1:-1], vals)


def convergence_study(cfg: dict, n_levels: int | None = None, u0: np.ndarray | None = None,
                      frozen_mollifier: bool = False) -> ConvergenceReport:
    """Solve with (eps_n, alpha_n) = (eps0 2^-n, alpha0 2^-n) and compare levels.

    ``frozen_mollifier`` keeps eps fixed (the control case).
    """
    n_levels = int(cfg["n_levels"] if n_levels is None else n_levels)
    if n_levels < 3:
        raise ValueError("n_levels must be at least 3")
    grid = grid_from(cfg)
    if u0 is None:
        u0 = leray_project(initial_field(cfg, grid), grid)
    eps = [cfg["epsilon"] * (1.0 if frozen_mollifier else 2.0 ** -n) for n in range(n_levels)]
    alphas = [cfg["alpha"] * 2.0 ** -n for n in range(n_levels)]
    trajs = []
    for e, a in zip(eps, alphas):
        trajs.append(solve_mollified(u0, solver_config(cfg, grid, e, a)))
    if any(len(tr.times) != len(trajs[0].times) for tr in trajs):
        raise RuntimeError("a level blew up before the common horizon")
    D = np.zeros((n_levels, n_levels))
    for i in range(n_levels):
        for j in range(i + 1, n_levels):
            D[i, j] = D[j, i] = trajectory_distance(trajs[i], trajs[j])
    tail = [float(D[k:, k:].max()) for k in range(n_levels - 1)]
    nse = [nse_residual(tr, bool(cfg["dealias"])) for tr in trajs]
    return ConvergenceReport(eps, alphas, D, nse, tail, [tr.blowup for tr in trajs])
