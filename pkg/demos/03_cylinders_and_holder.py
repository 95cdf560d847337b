"""
Cylinder sets and Holder regularity
===================================

A cylinder set constrains a path at finitely many times.  Its Wiener
measure is a nested integral of heat kernels, computed here by tensor
quadrature and checked against simulation.
"""

import numpy as np

from heisenwiener import measure
from heisenwiener.measure import CylinderSet, HolderSpec

inf = np.inf
I = CylinderSet([0.5, 1.0], [[[-1, 1], [-1, 1], [-inf, inf]],
                             [[-inf, inf], [-inf, inf], [0.0, 2.0]]])
q = measure.cylinder_measure_quadrature(I)
mc = measure.cylinder_measure_mc(I, 100_000, master_seed=1)
print("quadrature %.5f   Monte Carlo %.5f +- %.5f" % (q.value, mc.value, mc.stderr))

# Adding an unconstrained time does not change the event.
J = measure.insert_slice(I, 0.75)
print("with an extra free time: %.5f" % measure.cylinder_measure_quadrature(J).value)

# Dyadic chaining: if every level-m increment is below a 2^{-mr}, then every
# pair of dyadic times obeys |x(s)^-1 x(t)| <= C |s - t|^r.
spec = HolderSpec(a=6.0, r=0.3, depth=10)
paths = measure.holder_levels(0.3, 10, 2000, master_seed=2)
print("fraction of paths meeting the hypothesis at a = 6: %.4f" % np.mean(paths <= 6.0))

# On the power path the hypothesis is tight and the conclusion still holds.
cert = measure.dyadic_to_holder(measure.power_path(spec), spec)
print("power path: hypothesis ratio %.6f, worst Holder ratio %.3f <= C = %.3f"
      % (cert.hypothesis_ratio, cert.max_ratio, cert.constant))

# The tail probability falls off quickly in a.
for a in (2.0, 3.0, 4.0, 5.0):
    print("  P(hypothesis fails at a = %.0f) = %.4f" % (a, np.mean(paths > a)))
