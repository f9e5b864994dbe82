"""
Weighted norms on a periodic box
================================

The weight Phi_gamma(x) = (1+|x|^2)^(-gamma/2) tames slowly decaying data.
We measure a few norms, watch a box integral approach its whole-space
value, and probe the convolution bound of the kernel (sqrt(t)+|x|)^(-4).
"""
import math

import numpy as np

from wnslab import Grid, kernel_bound_check, weighted_hs_norm, weighted_lp_norm
from wnslab.fields import make_test_field

grid = Grid(32, 16.0)

# a field decaying like |x|^-0.6 is not in L^2, but it is in L^2(Phi_4)
u = make_test_field("heavy_tail", grid, decay=0.6)
for gamma in (0, 1, 2, 4):
    print(f"||u||_L2(Phi_{gamma}) = {weighted_lp_norm(u, 2, gamma, grid).value:.4f}")
print(f"||u||_H^-1(Phi_4)  = {weighted_hs_norm(u, -1, 4, grid).value:.4f}")

# int (1+|x|^2)^-2 dx = pi^2; the box misses a tail of order 1/L
vals = {}
for L in (16.0, 32.0, 64.0):
    g = Grid(int(2 * L), L)
    vals[L] = weighted_lp_norm(np.ones(g.shape), 2, 4, g).value ** 2
    print(f"L={L:4.0f}: {vals[L]:.5f}")
print(f"Richardson 2 I(64) - I(32) = {2 * vals[64.0] - vals[32.0]:.5f}   (pi^2 = {math.pi ** 2:.5f})")

# the ratio sqrt(t) ||K_t * f|| / ||f|| should not blow up as t -> 0
for t in (1.0, 0.25, 1 / 16):
    print(f"t={t:<7g} kernel ratio {kernel_bound_check(t, 2, 4, 5, grid):.3f}")
