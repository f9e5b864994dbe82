import math

import numpy as np
import pytest

from wnslab.grid import Grid
from wnslab.spectral import gradient, random_field
from wnslab.weighted import (
    NormReport,
    append_norm_rows,
    ball_kernel_integral,
    cell_kernel,
    kernel_bound_check,
    kernel_ratio,
    read_norm_rows,
    weight_on_grid,
    weight_value,
    weighted_hs_norm,
    weighted_lp_norm,
)


class TestWeight:
    @pytest.mark.parametrize("gamma, x, expected", [
        (2, (0, 0, 0), 1.0),
        (2, (1, 0, 0), 0.5),
        (4, (0, 3, 0), 0.01),
        (4, (1, 2, 2), 0.01),
    ])
    def test_values(self, gamma, x, expected):
        assert weight_value(gamma, x) == pytest.approx(expected, rel=1e-15)

    def test_bounded_by_one_for_nonnegative_gamma(self, grid16):
        w = weight_on_grid(3.5, grid16)
        assert np.all(w > 0) and np.all(w <= 1)

    def test_vectorised(self):
        pts = np.array([[0, 0, 0], [1, 0, 0]])
        assert np.allclose(weight_value(2, pts), [1.0, 0.5])

    def test_out_of_range_gamma(self, grid16):
        with pytest.raises(ValueError):
            weighted_lp_norm(np.ones(grid16.shape), 2, 9, grid16)


class TestLebesgue:
    def test_zero_field(self, grid16):
        rep = weighted_lp_norm(np.zeros((3, *grid16.shape)), 3, 2, grid16)
        assert rep.value == 0 and rep.kind == "lebesgue"

    def test_gamma_zero_is_plain_quadrature(self, grid16, rng):
        u = rng.standard_normal((3, *grid16.shape))
        plain = (np.sum(np.sqrt(np.sum(u * u, 0)) ** 3) * grid16.cell_volume) ** (1 / 3)
        assert weighted_lp_norm(u, 3, 0, grid16).value == pytest.approx(plain, rel=1e-14)

    def test_p_below_one_rejected(self, grid16):
        with pytest.raises(ValueError):
            weighted_lp_norm(np.ones(grid16.shape), 0.5, 0, grid16)

    def test_sup_norm(self, grid16, rng):
        f = rng.standard_normal(grid16.shape)
        assert weighted_lp_norm(f, math.inf, 0, grid16).value == np.abs(f).max()
        with pytest.raises(ValueError):
            weighted_lp_norm(f, math.inf, 2, grid16)

    def test_constant_approaches_radial_integral(self):
        # int (1+|x|^2)^-2 over R^3 is pi^2; Richardson removes the 1/L tail
        vals = {}
        for L in (16.0, 32.0):
            g = Grid(int(2 * L), L)
            vals[L] = weighted_lp_norm(np.ones(g.shape), 2, 4, g).value ** 2
        extrapolated = 2 * vals[32.0] - vals[16.0]
        assert abs(extrapolated - math.pi ** 2) / math.pi ** 2 < 0.01

    def test_report_is_float_convertible(self, grid16):
        assert float(weighted_lp_norm(np.ones(grid16.shape), 2, 0, grid16)) > 0


class TestSobolev:
    def test_s_zero_matches_lebesgue(self, grid16, rng):
        u = rng.standard_normal((3, *grid16.shape))
        a = weighted_hs_norm(u, 0, 3, grid16).value
        b = weighted_lp_norm(u, 2, 3, grid16).value
        assert a == pytest.approx(b, rel=1e-12)

    def test_single_mode(self, grid32):
        k = 2 * math.pi * 3 / grid32.box_length
        x2 = grid32.coords[1]
        f = np.sin(k * x2) * np.ones(grid32.shape)
        for s in (-2.0, 1.0, 2.5):
            expected = (1 + k * k) ** (s / 2) * weighted_lp_norm(f, 2, 0, grid32).value
            assert weighted_hs_norm(f, s, 0, grid32).value == pytest.approx(expected, rel=1e-12)

    def test_s_range(self, grid16):
        with pytest.raises(ValueError):
            weighted_hs_norm(np.ones(grid16.shape), 9, 0, grid16)

    def test_gradient_bound_constant(self, grid16, rng):
        """||grad u||_{H^{s-1}(Phi_g)} <= C ||u||_{H^s(Phi_g)}; C measured over 50 fields."""
        ratios = []
        for _ in range(50):
            u = random_field(grid16, rng, components=None)
            num = weighted_hs_norm(gradient(u, grid16), 0.0, 4, grid16).value
            ratios.append(num / weighted_hs_norm(u, 1.0, 4, grid16).value)
        assert max(ratios) < 3.0
        # unweighted case: the constant is exactly at most one
        u = random_field(grid16, rng, components=None)
        assert weighted_hs_norm(gradient(u, grid16), 0.5, 0, grid16).value <= weighted_hs_norm(u, 1.5, 0, grid16).value


class TestKernelBound:
    def test_zero_field(self, grid16):
        assert kernel_bound_check(0.5, 2, 4, 0, grid16, fields=[np.zeros(grid16.shape)]) == 0.0

    def test_t_range(self, grid16):
        for t in (0.0, 1.5):
            with pytest.raises(ValueError):
                kernel_bound_check(t, 2, 4, 1, grid16)

    def test_closed_form_ball(self):
        # full-space value is 4 pi / 3 regardless of t
        assert ball_kernel_integral(0.3, 1e9) == pytest.approx(4 * math.pi / 3, rel=1e-6)

    @pytest.mark.parametrize("t", [1.0, 0.25])
    def test_sup_norm_ball_oracle(self, grid32, t):
        R = 3.0
        f = (grid32.radius_sq < R * R).astype(float)
        ratio = kernel_ratio(f, t, math.inf, 0, grid32)
        assert ratio == pytest.approx(ball_kernel_integral(t, R), rel=0.02)

    def test_cell_kernel_mass(self, grid16):
        # the offset lattice covers [-L, L)^3: its mass sits between the inscribed ball and R^3
        K = cell_kernel(1.0, grid16)
        assert ball_kernel_integral(1.0, grid16.box_length) < K.sum() < 4 * math.pi / 3

    def test_uniform_in_t(self, grid32):
        ratios = [kernel_bound_check(t, 2, 4, 2, grid32, np.random.default_rng(1)) for t in (1, 0.25, 1 / 16)]
        assert max(ratios) / min(ratios) < 2.0


class TestProperties:
    def test_monotone_in_gamma(self, grid16, rng):
        u = rng.standard_normal((3, *grid16.shape))
        vals = [weighted_lp_norm(u, 3, g, grid16).value for g in (-2, 0, 1, 2, 4, 8)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_holder_duality(self, grid16, rng):
        p, gamma = 3.0, 2.0
        q = p / (p - 1)
        for _ in range(10):
            u = rng.standard_normal(grid16.shape)
            v = rng.standard_normal(grid16.shape)
            lhs = abs(grid16.integrate(u * v))
            rhs = weighted_lp_norm(u, p, gamma, grid16).value * weighted_lp_norm(v, q, -gamma / (p - 1), grid16).value
            assert lhs <= rhs * (1 + 1e-12)

    def test_sobolev_monotone_in_s(self, grid16, rng):
        u = rng.standard_normal(grid16.shape)
        vals = [weighted_hs_norm(u, s, 2, grid16).value for s in (-2, -1, 0, 0.5, 2)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestCsv:
    def test_append_and_read(self, tmp_path):
        path = tmp_path / "d.csv"
        append_norm_rows(path, 0.0, [NormReport(1.5, 2, 4, "lebesgue")])
        append_norm_rows(path, 0.1, [NormReport(2.5, -4, 8, "sobolev"), NormReport(0.0, math.inf, 0, "lebesgue")])
        rows = read_norm_rows(path)
        assert [r["value"] for r in rows] == [1.5, 2.5, 0.0]
        assert rows[1]["kind"] == "sobolev" and rows[2]["p_or_s"] == math.inf
        assert path.read_text().splitlines()[0] == "time,kind,p_or_s,gamma,value"


def test_oseen_pointwise_constant_measured(grid32):
    """|e^{t Lap} P Div F| <= C (K_t * |F|) pointwise; C is measured on the inner half of the box."""
    from wnslab.spectral import oseen_apply
    from wnslab.weighted import kernel_convolve, magnitude

    rng = np.random.default_rng(7)
    envelope = np.exp(-grid32.radius_sq / 2.0)
    inner = grid32.inner_mask(0.5)
    measured = {}
    for t in (1.0, 0.25, 1 / 16):
        worst = 0.0
        for _ in range(5):
            F = rng.standard_normal((3, 3, 1, 1, 1)) * envelope
            num = magnitude(oseen_apply(F, t, grid32))
            den = kernel_convolve(magnitude(F), t, grid32)
            worst = max(worst, float((num[inner] / den[inner]).max()))
        measured[t] = worst
    assert all(0 < c < 1.0 for c in measured.values()), measured
