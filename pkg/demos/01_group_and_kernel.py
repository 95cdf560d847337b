"""
The Heisenberg group and its heat kernel
========================================

Points of H^1 are triples (x, y, u).  The product twists the vertical
coordinate by the symplectic form of the horizontal parts, so the group
is not commutative.
"""

import numpy as np

from heisenwiener import hgroup, heatkernel as hk
from heisenwiener.hgroup import GroupPoint

a = GroupPoint.from_coords(1.0, 0.0, 0.0)
b = GroupPoint.from_coords(0.0, 1.0, 0.0)
print("a b =", a * b)
print("b a =", b * a)

# Dilations (rz, r^2 u) are automorphisms; the Koranyi norm scales by r.
xi = np.array([0.6, -0.8, 2.0])
print("|xi| =", hgroup.homogeneous_norm(xi), " |delta_2 xi| =",
      hgroup.homogeneous_norm(hgroup.dilate(2.0, xi)))

# The kernel is a one-dimensional oscillatory integral in lambda.
cfg = hk.KernelConfig()
print("p_1(o) =", hk.kernel_eval(cfg, 1.0, np.zeros(3)), " closed form:", hk.origin_value(1))

# Two independent routes agree far beyond the Monte Carlo scale used later.
for pt in ([1.0, 0.0, 0.0], [0.0, 0.0, 2.0], [0.3, -0.4, 0.7]):
    fast = hk.kernel_eval(cfg, 0.5, np.array(pt))
    slow = hk.kernel_eval(cfg, 0.5, np.array(pt), method="adaptive")
    print("p_0.5%s = %.15f  (adaptive differs by %.1e)" % (tuple(pt), fast, abs(fast - slow)))

# Mass and second moments, integrated on a radial grid.
t = 0.7
print("mass       ", hk.normalization(cfg, t))
print("E|z|^2     ", hk.radial_grid_integral(cfg, t, lambda r, u: r * r), "vs", 4 * t)
print("E u^2      ", hk.radial_grid_integral(cfg, t, lambda r, u: u * u), "vs", 16 * t * t)

# A Gaussian upper bound c M t^-2 exp(-|xi|^2 / (M t)) fitted on a grid.
# It is loose near the origin but certifies tails at large radii.
fit = hk.default_bound_fit(cfg)
print("bound constants: M = %.4f, c = %.6f" % (fit.M, fit.c))
for rho in (5.0, 7.0, 9.0):
    print("  mass outside |xi| > %.0f: %.3e  (bound %.3e)"
          % (rho, hk.norm_tail(cfg, rho), hk.bound_tail_mass(fit, 1, 1.0, rho)))
