"""Exit criteria of the laboratory, one test per criterion.

Each test prints a PASS/FAIL line; the lines are collected again in the
terminal summary.  Run only these with ``pytest -m acceptance -s``.
"""
import math
import time

import numpy as np
import pytest

from wnslab.calderon import SplitConfig, calderon_split
from wnslab.estimates import (
    c1_from_run,
    calibrate_constants,
    difference,
    energy_budget,
    existence_bounds,
    rescale_consistency,
    star_norms,
    v_growth_horizon,
)
from wnslab.fields import gaussian_bump, make_test_field
from wnslab.grid import Grid
from wnslab.io import DEFAULTS
from wnslab.mollified import (
    MollifierSpec,
    SolverConfig,
    duhamel_residual,
    mollify,
    solve_b,
    solve_mollified,
    troncatur_bound,
)
from wnslab.runner import convergence_study
from wnslab.spectral import (
    divergence_field,
    divergence_residual,
    gradient,
    heat_semigroup,
    leray_project,
    random_field,
    riesz,
)
from wnslab.weighted import kernel_bound_check, lp_norm, magnitude, weighted_lp_norm

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]


def _rel(a, b):
    den = np.sqrt(np.sum(np.abs(b) ** 2))
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2)) / den)


@pytest.fixture(scope="module")
def heavy32():
    g = Grid(32, 16.0)
    u = make_test_field("heavy_tail", g)
    return g, u / lp_norm(u, 6, g)


def test_c01_spectral_identities(report):
    g = Grid(32, 16.0)
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = dict(leray=0.0, gradient=0.0, riesz=0.0, heat=0.0)
    for _ in range(100):
        u = random_field(g, rng)
        p = leray_project(u, g)
        worst["leray"] = max(worst["leray"], _rel(leray_project(p, g), p))
        phi = random_field(g, rng, components=None)
        grad = gradient(phi, g)
        worst["gradient"] = max(worst["gradient"], _rel(leray_project(grad, g) + grad, grad))
        f = phi - phi.mean()
        rr = sum(riesz(riesz(f, j, g), j, g) for j in range(3))
        worst["riesz"] = max(worst["riesz"], _rel(rr, -f))
        mode = rng.integers(-g.n // 3 + 1, g.n // 3, size=3)
        k = 2 * math.pi * mode / g.box_length
        x1, x2, x3 = g.coords
        wave = np.cos(k[0] * x1 + k[1] * x2 + k[2] * x3 + rng.uniform(0, 2 * math.pi))
        # keep exp(-|k|^2 t) >= e^-10 so round-off in other modes cannot dominate the relative error
        t = rng.uniform(0.0, 1.0) * min(1.0, 10.0 / max(k @ k, 1e-300))
        worst["heat"] = max(worst["heat"], _rel(heat_semigroup(wave, t, g), math.exp(-t * k @ k) * wave))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-10 and elapsed < 10.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert report("C1", ok, f"spectral identities over 100 fields: {detail}; {elapsed:.1f} s (N=32)")


def test_c02_weight_integral_oracle(report):
    vals = {}
    for L in (32.0, 64.0):
        g = Grid(int(2 * L), L)
        vals[L] = weighted_lp_norm(np.ones(g.shape), 2, 4, g).value ** 2
    extrapolated = 2 * vals[64.0] - vals[32.0]
    err = abs(extrapolated - math.pi ** 2) / math.pi ** 2
    raw = abs(vals[64.0] - math.pi ** 2) / math.pi ** 2
    assert report("C2", err < 0.01,
                  f"||1||^2 in L2(Phi_4): Richardson {extrapolated:.5f} vs pi^2 (rel {err:.1e}; raw L=64 rel {raw:.1e})")


def test_c03_kernel_uniform_in_t(report):
    g = Grid(32, 16.0)
    ratios = {t: kernel_bound_check(t, 2, 4, 20, g, np.random.default_rng(3)) for t in (1.0, 0.25, 1 / 16)}
    spread = max(ratios.values()) / min(ratios.values())
    detail = ", ".join(f"t={t:g}: {r:.3f}" for t, r in ratios.items())
    assert report("C3", spread < 2.0, f"kernel ratio {detail}; spread {spread:.2f}x")


def test_c04_mollifier_sup_bound(report):
    g = Grid(64, 20.0)
    rng = np.random.default_rng(4)
    violations, worst = 0, 0.0
    for eps in (0.25, 0.5):
        for alpha in (0.25, 0.5):
            m = MollifierSpec.create(g, eps, alpha)
            for i in range(25):
                u = random_field(g, rng) * rng.uniform(0.1, 10.0)
                if i % 2:
                    # concentrated data: a few large spikes on top of noise
                    idx = tuple(rng.integers(0, g.n, size=(3, 4)))
                    u[(0, *idx)] += rng.uniform(10, 1000)
                lhs = float(magnitude(mollify(u, m)).max())
                rhs = troncatur_bound(u, 4.0, 1.0, m)
                worst = max(worst, lhs / rhs)
                violations += lhs > rhs
    assert report("C4", violations == 0,
                  f"sup bound over 100 fields x (eps, alpha) grid: {violations} violations, max lhs/rhs {worst:.3f}")


def test_c05_calderon_split(report, heavy32):
    g, u0 = heavy32
    b_norms, v_norms, worst_part, worst_div = [], [], 0.0, 0.0
    for eta in (0.2, 0.1, 0.05):
        res = calderon_split(u0, SplitConfig(4.0, 1.0, 6.0, eta), g)
        assert res.achieved_b_norm < eta
        b_norms.append(res.achieved_b_norm)
        v_norms.append(res.achieved_v_norm)
        worst_part = max(worst_part, float(np.abs(res.v0 + res.b0 - u0).max() / np.abs(u0).max()))
        worst_div = max(worst_div, divergence_residual(res.v0, g), divergence_residual(res.b0, g))
    ok = (all(b < e for b, e in zip(b_norms, (0.2, 0.1, 0.05))) and worst_part <= 1e-12 and worst_div <= 1e-10
          and all(np.isfinite(v_norms)) and all(b >= a for a, b in zip(v_norms, v_norms[1:])))
    assert report("C5", ok, f"||b0||_6 {['%.3f' % b for b in b_norms]}, ||v0|| {['%.3f' % v for v in v_norms]}, "
                            f"partition {worst_part:.1e}, div {worst_div:.1e}")


@pytest.fixture(scope="module")
def swirl_setup():
    g = Grid(32, 16.0)
    return g, gaussian_bump(g, amplitude=8.0, sigma=1.2, offset=1.2), MollifierSpec.create(g, 0.75, 0.5)


def test_c06_duhamel_residual(report, swirl_setup):
    g, u0, m = swirl_setup
    res = []
    for dt in (1e-3, 5e-4, 2.5e-4):
        res.append(duhamel_residual(solve_mollified(u0, SolverConfig(g, m, dt, 0.05)), u0, m))
    orders = [math.log2(a / b) for a, b in zip(res, res[1:])]
    ok = res[0] <= 1e-4 and min(orders) >= 1.95
    assert report("C6", ok, f"Duhamel residual {['%.2e' % r for r in res]} at dt=1e-3/2^k, "
                            f"orders {['%.2f' % o for o in orders]}")


def test_c07_energy_identity(report):
    g = Grid(48, 24.0)
    u0 = gaussian_bump(g, amplitude=8.0, sigma=1.2, offset=1.2)
    m = MollifierSpec.create(g, 0.75, 0.5)
    eta = 0.25 * lp_norm(u0, 6, g)
    split = calderon_split(u0, SplitConfig(4.0, 1.0, 6.0, eta), g)
    res = {}
    for dt in (1e-3, 5e-4):
        cfg = SolverConfig(g, m, dt, 0.05)
        u = solve_mollified(u0, cfg)
        b = solve_b(split.b0, cfg)
        res[dt] = energy_budget(difference(u, b), b, m).relative_residual()
    ok = res[5e-4] < 0.01 and res[5e-4] < res[1e-3]
    assert report("C7", ok, f"energy residual {res[1e-3]:.2e} (dt=1e-3) -> {res[5e-4]:.2e} (dt=5e-4), N=48")


@pytest.fixture(scope="module")
def split_runs(heavy32):
    """b and v runs for the heavy-tailed data at four eta values, T = 1."""
    g, u0 = heavy32
    m = MollifierSpec.create(g, 0.5, 0.5)
    cfg = SolverConfig(g, m, 0.01, 1.0)
    u = solve_mollified(u0, cfg)
    runs = {}
    for eta in (0.2, 0.1, 0.05, 0.025):
        split = calderon_split(u0, SplitConfig(4.0, 1.0, 6.0, eta), g)
        b = solve_b(split.b0, cfg, 6.0)
        runs[eta] = (split, b, difference(u, b))
    return g, u0, m, cfg, runs


def test_c08_star_bounds_held_out(report, split_runs):
    g, _, m, cfg, runs = split_runs
    C1, censored = c1_from_run(runs[0.2][1], 6.0, 0.2)
    lines, ok = [], True
    for eta in (0.1, 0.05, 0.025):
        horizon = min((C1 * eta) ** (-2 * 6.0 / 3.0), 1.0)
        rep = star_norms(runs[eta][1], 6.0, eta, t_max=horizon)
        ok &= rep.all_pass
        lines.append(f"eta={eta}: flags {tuple(int(f) for f in rep.flags)} to t={horizon:.2g}")
    assert report("C8", ok, f"C1={C1:.2f} (censored={censored}); " + "; ".join(lines))


def test_c09_v_growth_bound(report, split_runs):
    g, u0, m, cfg, runs = split_runs
    c2_runs = []
    for split, _, v in runs.values():
        horizon, _ = v_growth_horizon(v)
        c2_runs.append(dict(alpha=m.alpha, v0_norm=split.achieved_v_norm, horizon=horizon))
    C2 = calibrate_constants(c2_runs=c2_runs).C2
    C1, _ = c1_from_run(runs[0.2][1], 6.0, 0.2)
    u0_norm = weighted_lp_norm(u0, 4.0, 1.0, g).value
    ok, worst, t_min = True, 0.0, math.inf
    for split, _, v in runs.values():
        eb = existence_bounds(u0_norm, split, m, (1.0, C1, C2), 6.0)
        t_min = min(t_min, eb.T_eta_eps_alpha)
        e = v.series("l2_phi2")
        sel = v.times <= eb.T_eta_eps_alpha
        ratio = e[sel].max() / e[0]
        worst = max(worst, ratio)
        ok &= ratio <= 2.0
    full = max(v.series("l2_phi2").max() / v.series("l2_phi2")[0] for _, _, v in runs.values())
    assert report("C9", ok, f"C2={C2:.3g}; sup ||v||/||v0|| on [0, T_eta_eps_alpha] {worst:.3f} "
                            f"(T >= {t_min:.2e}); on [0, 1] {full:.3f}")


def test_c10_scaling_identity(report):
    ds = []
    for n in (32, 48, 64):
        g = Grid(n, 16.0)
        u0 = gaussian_bump(g, amplitude=0.1, sigma=1.4, offset=0.6)
        m = MollifierSpec.create(g, 0.25, 0.5)
        ds.append(rescale_consistency(u0, m, 0.5, SolverConfig(g, m, 0.008, 0.1)))
    ok = ds[0] > ds[1] > ds[2] and ds[2] <= 1e-3
    assert report("C10", ok, f"rescale discrepancy at lambda=1/2, N=32/48/64: {['%.2e' % d for d in ds]}")


def test_c11_vanishing_mollifier(report):
    cfg = dict(DEFAULTS, n=48, box_length=24.0, epsilon=1.0, alpha=1.4, dt=5e-3, t_end=0.5,
               field="bump", amplitude=8.0, sigma=1.2, offset=1.2)
    rep = convergence_study(cfg, 4)
    ok = rep.consecutive_decreasing and rep.residual_ratio >= 4.0
    assert report("C11", ok, f"d(n,n+1) {['%.4f' % d for d in rep.consecutive]}, "
                             f"NSE residual coarse/fine {rep.residual_ratio:.1f}")


def test_c12_divergence_propagation(report, swirl_setup):
    g, u0, m = swirl_setup
    cfg = SolverConfig(g, m, 2e-3, 0.1)
    zero_branch = max(solve_mollified(u0, cfg).series("div"))
    phi = np.exp(-g.radius_sq / 2.0)
    w0 = u0 + 3.0 * gradient(phi, g)
    traj = solve_mollified(w0, cfg, allow_divergent=True)
    d0 = divergence_field(w0, g)
    nonzero_branch = max(_rel(divergence_field(w, g), heat_semigroup(d0, t, g))
                         for t, w in zip(traj.times, traj.snapshots))
    ok = zero_branch <= 1e-8 and nonzero_branch <= 1e-8
    assert report("C12", ok, f"div-free data: max residual {zero_branch:.1e}; "
                             f"divergent data: div u vs heat(div u0) {nonzero_branch:.1e}")
