import math

import numpy as np
import pytest

from wnslab.calderon import (
    SplitConfig,
    calderon_split,
    raw_b_bound,
    raw_v_bound,
    threshold_split,
)
from wnslab.fields import make_test_field
from wnslab.spectral import divergence_residual
from wnslab.weighted import lp_norm, magnitude, weight_on_grid, weighted_lp_norm


@pytest.fixture(scope="module")
def heavy(grid32):
    u = make_test_field("heavy_tail", grid32, decay=0.6)
    return u / lp_norm(u, 6, grid32)


CFG = SplitConfig(p=4.0, gamma=1.0, r=6.0, eta=0.1)


class TestConfig:
    def test_exponents(self):
        assert CFG.r0 == 6.0 and CFG.mu == 0.5
        assert SplitConfig(3.0, 0.5, 8.0, 1.0).r0 == pytest.approx(10 / 3)
        assert CFG.delta == pytest.approx(1.0)

    @pytest.mark.parametrize("kw", [
        dict(p=2.0, gamma=1.0, r=6.0, eta=0.1),
        dict(p=math.inf, gamma=1.0, r=6.0, eta=0.1),
        dict(p=4.0, gamma=0.0, r=6.0, eta=0.1),
        dict(p=4.0, gamma=2.0, r=6.0, eta=0.1),
        dict(p=4.0, gamma=1.0, r=5.0, eta=0.1),
        dict(p=2.5, gamma=1.5, r=3.0, eta=0.1),
        dict(p=4.0, gamma=1.0, r=6.0, eta=0.0),
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SplitConfig(**kw)


class TestThreshold:
    def test_exact_partition(self, heavy, grid32):
        A = 0.3
        v, b = threshold_split(heavy, CFG, A, grid32)
        assert np.array_equal(v + b, heavy)
        assert np.all(magnitude(b) <= A * weight_on_grid(CFG.mu, grid32, check=False))
        assert not np.any((magnitude(v) > 0) & (magnitude(b) > 0))

    @pytest.mark.parametrize("A", [1e-3, 0.05, 0.3, 2.0])
    def test_pointwise_bounds_hold_discretely(self, heavy, grid32, A):
        v, b = threshold_split(heavy, CFG, A, grid32)
        norm = weighted_lp_norm(heavy, CFG.p, CFG.gamma, grid32).value
        assert lp_norm(b, CFG.r, grid32) <= raw_b_bound(A, norm, CFG) * (1 + 1e-12)
        assert weighted_lp_norm(v, 2, 2, grid32).value <= raw_v_bound(A, norm, CFG) * (1 + 1e-12)

    def test_nonpositive_threshold(self, heavy, grid32):
        with pytest.raises(ValueError):
            threshold_split(heavy, CFG, 0.0, grid32)

    def test_nan_rejected(self, grid16):
        u = np.zeros((3, *grid16.shape))
        u[0, 0, 0, 0] = np.nan
        with pytest.raises(FloatingPointError):
            threshold_split(u, CFG, 1.0, grid16)


class TestSplit:
    def test_reconstruction_and_divergence(self, heavy, grid32):
        res = calderon_split(heavy, CFG, grid32)
        assert np.max(np.abs(res.v0 + res.b0 - heavy)) < 1e-12 * np.abs(heavy).max()
        assert divergence_residual(res.b0, grid32) < 1e-10
        assert divergence_residual(res.v0, grid32) < 1e-10
        assert res.achieved_b_norm < CFG.eta
        assert res.achieved_b_norm == pytest.approx(lp_norm(res.b0, 6, grid32))
        assert res.trace and res.mu == CFG.mu

    def test_without_dealias(self, heavy, grid32):
        res = calderon_split(heavy, CFG, grid32, dealias=False)
        assert res.achieved_b_norm < CFG.eta

    def test_eta_sequence(self, heavy, grid32):
        b_norms, v_norms = [], []
        for eta in (0.2, 0.1, 0.05):
            res = calderon_split(heavy, SplitConfig(4.0, 1.0, 6.0, eta), grid32)
            b_norms.append(res.achieved_b_norm)
            v_norms.append(res.achieved_v_norm)
            assert res.achieved_b_norm < eta
        assert all(b >= a * (1 - 1e-9) for a, b in zip(v_norms, v_norms[1:]))

    def test_small_data_goes_to_b(self, heavy, grid32):
        res = calderon_split(1e-4 * heavy, CFG, grid32)
        assert res.achieved_b_norm < CFG.eta

    def test_zero_data(self, grid16):
        res = calderon_split(np.zeros((3, *grid16.shape)), CFG, grid16)
        assert res.threshold_A == math.inf
        assert not np.any(res.v0) and not np.any(res.b0)

    def test_divergent_rejected(self, grid16, rng):
        with pytest.raises(ValueError, match="divergence"):
            calderon_split(rng.standard_normal((3, *grid16.shape)), CFG, grid16)
