"""
Simulating the Wiener process
=============================

A path is a planar Brownian motion together with twice its signed area,
which becomes the vertical coordinate.  Each path is a pure function of
the master seed and its index, so worker counts never change results.
"""

import numpy as np

from heisenwiener import hgroup, heatkernel as hk, sampler

grid = sampler.PathGrid.uniform(1.0, 8, 16)
batch = sampler.sample_paths(1, grid, 4, master_seed=7)
print("path 2 at t = 1:", batch.points[2, -1])

again = sampler.sample_path(1, grid, sampler.RngStreamSpec(7, 2))
print("re-drawn alone: ", again.points[-1])

# The plain midpoint area loses a fraction 1/N of Var u after N substeps;
# the compensated scheme adds the missing chord areas back in law.
for scheme in sampler.SCHEMES:
    end = sampler.endpoints(1, 1.0, 100_000, 3, 4, scheme=scheme)
    print("%-12s Var u = %.3f  (exact 16)" % (scheme, end[:, -1].var()))

# Endpoints follow the heat kernel: compare bin counts with kernel masses.
end = sampler.endpoints(1, 1.0, 100_000, 5, 32, scheme="compensated")
r_edges, u_edges = [0.0, 1.0, 2.0, np.inf], [-np.inf, -2.0, 0.0, 2.0, np.inf]
counts, _, _ = np.histogram2d(np.linalg.norm(end[:, :2], axis=1), end[:, 2], [r_edges, u_edges])
probs = hk.bin_probabilities(hk.KernelConfig(), 1.0, r_edges, u_edges)
print("observed / expected per (|z|, u) bin:")
print(np.round(counts / (probs * end.shape[0]), 3))

# Time reversal and left translation are path transforms preserving the law.
path = batch.path(0)
rev = sampler.time_reverse(path)
print("reversed path ends at", rev.points[-1], "= inverse of", path.points[-1])
print("check:", hgroup.multiply(rev.points[-1], path.points[-1]))
