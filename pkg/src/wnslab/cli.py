"""Command line entry point: ``wnslab <subcommand> ...`` (or ``python3 -m wnslab``).

Subcommands mirror the library: gen-field, split, solve, diagnose, bounds,
rescale-check and converge.  Settings come from a key=value config file; FFT
threads from the ``WNSLAB_WORKERS`` environment variable.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .calderon import SplitConfig, calderon_split
from .estimates import difference, energy_budget, existence_bounds, rescale_consistency, star_norms
from .fields import KINDS, make_test_field
from .grid import Grid
from .io import (
    DEFAULTS,
    load_config,
    load_trajectory,
    save_field,
    save_trajectory,
    sha256_file,
    write_manifest,
)
from .runner import convergence_study, grid_from, initial_field, pipeline, solver_config, write_budget_csv
from .mollified import solve_mollified
from .spectral import leray_project
from .weighted import weighted_lp_norm


def _config(args) -> dict:
    cfg = load_config(args.config) if getattr(args, "config", None) else dict(DEFAULTS)
    if getattr(args, "u0", None):
        cfg["u0"] = str(args.u0)
    return cfg


def _u0(cfg: dict, grid: Grid) -> np.ndarray:
    return leray_project(initial_field(cfg, grid), grid)


def _print(obj) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True, default=float))


def cmd_gen_field(args) -> int:
    params = {}
    for item in args.param or []:
        key, _, value = item.partition("=")
        params[key] = float(value) if key != "seed" else int(value)
    grid = Grid(args.n, args.box_length)
    u = make_test_field(args.kind, grid, **params)
    digest = save_field(args.out, u, grid, {"kind": args.kind, **params})
    _print({"out": str(args.out), "sha256": digest, "l2": weighted_lp_norm(u, 2, 0, grid).value})
    return 0


def cmd_split(args) -> int:
    start = time.perf_counter()
    cfg = _config(args)
    grid = grid_from(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    u0 = _u0(cfg, grid)
    res = calderon_split(u0, SplitConfig(cfg["p"], cfg["gamma"], cfg["r"], cfg["eta"]), grid)
    outputs = {
        "v0.field": save_field(out / "v0.field", res.v0, grid, {"part": "v0"}),
        "b0.field": save_field(out / "b0.field", res.b0, grid, {"part": "b0"}),
    }
    info = {"A": res.threshold_A, "mu": res.mu, "eta": res.eta, "b_norm_r": res.achieved_b_norm,
            "v_norm_l2_phi2": res.achieved_v_norm, "trace": res.trace}
    (out / "split.json").write_text(json.dumps(info, indent=1))
    outputs["split.json"] = sha256_file(out / "split.json")
    inputs = {"u0": sha256_file(cfg["u0"])} if cfg.get("u0") else {}
    write_manifest(out / "manifest.json", cfg, inputs, outputs, time.perf_counter() - start)
    _print({k: v for k, v in info.items() if k != "trace"})
    return 0


def cmd_solve(args) -> int:
    start = time.perf_counter()
    cfg = _config(args)
    grid = grid_from(cfg)
    scfg = solver_config(cfg, grid)
    traj = solve_mollified(_u0(cfg, grid), scfg)
    outputs = save_trajectory(args.out, traj)
    inputs = {"u0": sha256_file(cfg["u0"])} if cfg.get("u0") else {}
    write_manifest(Path(args.out) / "manifest.json", cfg, inputs, outputs, time.perf_counter() - start)
    _print({"snapshots": len(traj), "blowup": traj.blowup, "last_valid_time": traj.last_valid_time})
    return 1 if traj.blowup else 0


def cmd_diagnose(args) -> int:
    """Reads a pipeline run directory (u/ and b/ trajectories plus manifest)."""
    run = Path(args.traj)
    cfg = json.loads((run / "manifest.json").read_text())["config"]
    u_traj = load_trajectory(run / "u")
    b_traj = load_trajectory(run / "b")
    m = solver_config(cfg, u_traj.grid).mollifier
    budget = energy_budget(difference(u_traj, b_traj), b_traj, m, cfg["eta"], cfg["r"])
    write_budget_csv(args.out, budget)
    stars = star_norms(b_traj, cfg["r"], cfg["eta"])
    _print({"energy_relative_residual": budget.relative_residual() if len(budget.times) > 2 else 0.0,
            "star_flags": [bool(f) for f in stars.flags], "out": str(args.out)})
    return 0


def cmd_bounds(args) -> int:
    cfg = _config(args)
    grid = grid_from(cfg)
    u0 = _u0(cfg, grid)
    split = calderon_split(u0, SplitConfig(cfg["p"], cfg["gamma"], cfg["r"], cfg["eta"]), grid)
    m = solver_config(cfg, grid).mollifier
    norm = weighted_lp_norm(u0, cfg["p"], cfg["gamma"], grid).value
    eb = existence_bounds(norm, split, m, (cfg["C0"], cfg["C1"], cfg["C2"]), cfg["r"], cfg["horizon"])
    _print(asdict(eb))
    return 0


def cmd_rescale_check(args) -> int:
    cfg = _config(args)
    grid = grid_from(cfg)
    scfg = solver_config(cfg, grid)
    lam = args.lam if args.lam is not None else cfg["rescale_lambda"]
    d = rescale_consistency(_u0(cfg, grid), scfg.mollifier, lam, scfg)
    _print({"lambda": lam, "discrepancy": d, "pass": bool(d <= cfg["tol_rescale"])})
    return 0


def cmd_converge(args) -> int:
    start = time.perf_counter()
    cfg = _config(args)
    rep = convergence_study(cfg, args.levels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {"epsilons": rep.epsilons, "alphas": rep.alphas, "distances": rep.distances.tolist(),
              "consecutive": rep.consecutive, "consecutive_decreasing": rep.consecutive_decreasing,
              "cauchy_tail": rep.cauchy_tail, "cauchy": rep.cauchy,
              "nse_residuals": rep.nse_residuals, "residual_ratio": rep.residual_ratio}
    (out / "convergence.json").write_text(json.dumps(report, indent=1))
    write_manifest(out / "manifest.json", cfg, {}, {"convergence.json": sha256_file(out / "convergence.json")},
                   time.perf_counter() - start)
    _print(report)
    return 0


def cmd_pipeline(args) -> int:
    res = pipeline(_config(args), args.out)
    _print({"stages": res.stages, "checks": res.checks})
    return 0 if res.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wnslab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-field", help="write a divergence-free test field")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--box-length", type=float, default=16.0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen_field)

    for name, fn, helptext in (("split", cmd_split, "split u0 into v0 + b0"),
                               ("solve", cmd_solve, "integrate the mollified equations")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", type=Path)
        p.add_argument("--u0", type=Path)
        p.add_argument("--out", type=Path, required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("diagnose", help="energy budget and star norms of a pipeline run")
    p.add_argument("--traj", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("budget.csv"))
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("bounds", help="existence-time bounds for configured data")
    p.add_argument("--config", type=Path)
    p.add_argument("--u0", type=Path)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("rescale-check", help="parabolic rescaling consistency")
    p.add_argument("--config", type=Path)
    p.add_argument("--u0", type=Path)
    p.add_argument("--lambda", dest="lam", type=float)
    p.set_defaults(func=cmd_rescale_check)

    p = sub.add_parser("converge", help="vanishing-mollifier convergence study")
    p.add_argument("--config", type=Path)
    p.add_argument("--u0", type=Path)
    p.add_argument("--levels", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("pipeline", help="split, solve, diagnose and bound in one run directory")
    p.add_argument("--config", type=Path)
    p.add_argument("--u0", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_pipeline)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
