"""
Feynman-Kac with a potential
============================

With a potential V the solution started from f is an average of
f(xi x(t)) weighted by exp(-int V along the path).  For constant V the
weight factors out exactly; for V = alpha |z|^2 the answer is checked
through identities the weighted kernel must satisfy.
"""

import numpy as np

from heisenwiener import feynmankac as fk
from heisenwiener.feynmankac import InitialData, Potential

f = InitialData.gaussian_bump([0.3, -0.2, 0.4], width=0.7)
xi = np.array([0.2, 0.1, -0.3])
t = 1.0

heat = fk.heat_reference(t, xi, f)
for c in (0.0, 0.5, 2.0):
    est = fk.fk_solve(t, xi, f, Potential.constant(c), 50_000, master_seed=4)
    print("V = %.1f: %.5f +- %.5f   exact %.5f" % (c, est.value, est.stderr, np.exp(-c * t) * heat))

V = Potential.quadratic_radial(0.5)
print("V = 0.5|z|^2: %.5f" % fk.fk_solve(t, xi, f, V, 50_000, master_seed=4).value)

# The integral equation linking the weighted kernel to the free one,
# smoothed by a short exact heat step so both sides are point values.
d = fk.duhamel_residual(0.6, xi, V, 80_000, master_seed=5)
print("Duhamel: lhs %.5f  rhs %.5f  relative residual %.2e (z = %.2f)"
      % (d.lhs.value, d.rhs.value, d.residual, d.zscore))

# Symmetry of the weighted kernel in its two points.
s = fk.symmetry_check(0.5, xi, np.array([0.4, -0.3, 0.5]), V, 20_000, master_seed=6)
print("symmetry: %.5f vs %.5f  (z = %.2f)" % (s.lhs.value, s.rhs.value, s.zscore))

# A weighted histogram of endpoints, in (|z|, u) bins.
dens = fk.fk_kernel_density(t, V, [np.linspace(0, 4, 9), np.linspace(-8, 8, 17)],
                            50_000, master_seed=7)
print("surviving mass %.4f; density near the origin %.5f +- %.5f"
      % (dens.total_mass, *dens.at([0.1, 0.0, 0.1])))
