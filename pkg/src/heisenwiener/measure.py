"""Finite-dimensional Wiener measure and dyadic Holder estimates.

A cylinder event constrains ``x(t_1), ..., x(t_m)`` to axis-aligned boxes;
its measure is

    W(I) = int_E prod_j p_{t_j - t_{j-1}}(u_{j-1}^{-1} u_j) du_1 ... du_m

with ``t_0 = 0`` and ``u_0 = o``.  Quadrature is offered for n = 1 and up to
three times; beyond that only Monte Carlo.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import hgroup, heatkernel, sampler
from .estimates import Estimate, proportion_estimate


class CylinderSizeError(ValueError):
    """The cylinder is outside what quadrature handles (n = 1, m <= 3)."""


@dataclass(frozen=True, eq=False)
class CylinderSet:
    """Times ``0 < t_1 < ... < t_m`` with one closed box per time.

    ``boxes`` has shape ``(m, 2n + 1, 2)``: per time and coordinate a pair
    ``(lo, hi)``; infinite bounds are allowed.
    """

    times: np.ndarray
    boxes: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        b = np.array(self.boxes, dtype=float)
        if t.size == 0:
            raise ValueError("a cylinder needs at least one time")
        if np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("times must be positive and strictly increasing")
        if b.ndim != 3 or b.shape[0] != t.size or b.shape[2] != 2 or b.shape[1] % 2 == 0:
            raise ValueError("boxes must have shape (m, 2n+1, 2), got %s" % (b.shape,))
        if np.any(b[..., 0] > b[..., 1]):
            raise ValueError("box lower bound above upper bound")
        t.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "boxes", b)

    @property
    def n(self):
        return (self.boxes.shape[1] - 1) // 2

    @property
    def m(self):
        return self.times.size

    @classmethod
    def single(cls, t, box):
        return cls([t], [box])

    @staticmethod
    def full_box(n=1):
        return np.tile([-np.inf, np.inf], (2 * n + 1, 1))

    def contains(self, states):
        """Pathwise membership; ``states`` has shape ``(..., m, 2n + 1)``."""
        lo, hi = self.boxes[..., 0], self.boxes[..., 1]
        return np.all((states >= lo) & (states <= hi), axis=(-2, -1))


def insert_slice(I, t_new):
    """Add an unconstrained time; the event (and its measure) is unchanged."""
    if t_new <= 0:
        raise ValueError("inserted time must be positive")
    if np.any(I.times == t_new):
        raise ValueError("time %g already present" % t_new)
    k = int(np.searchsorted(I.times, t_new))
    times = np.insert(I.times, k, t_new)
    boxes = np.insert(I.boxes, k, CylinderSet.full_box(I.n), axis=0)
    return CylinderSet(times, boxes)


# -- quadrature ------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureConfig:
    """Node counts per coordinate axis and the certified truncation mass.

    Each axis interval, after truncation to the homogeneous ball whose
    Gaussian-bound tail mass is below ``tail_eps``, is mapped by
    ``x = c + s sinh(tau)`` and integrated with Gauss-Legendre in ``tau``;
    ``s`` is the increment's standard deviation over the shorter adjacent
    time gap (``sqrt(2 gap)`` per z-coordinate, ``4 gap`` for u).

    Axes with an infinite side use the ``*_wide`` counts: far from the
    centre the sinh-spaced nodes grow wider than the kernel itself, and on
    half-lines and full lines the mass that lives there matters.  At the
    defaults bounded boxes are accurate to about 1e-4 and unbounded ones to
    a few 1e-4.
    """

    nodes_z: int = 12
    nodes_u: int = 16
    nodes_z_wide: int = 16
    nodes_u_wide: int = 24
    tail_eps: float = 1e-6
    chunk: int = 2 ** 21
    kernel: heatkernel.KernelConfig = field(default_factory=heatkernel.KernelConfig)


def _axis_rule(lo, hi, scale, count):
    center = min(max(0.0, lo), hi)
    a = np.arcsinh((lo - center) / scale)
    b = np.arcsinh((hi - center) / scale)
    if b <= a:
        return np.array([center]), np.array([0.0])
    x, w = leggauss(count)
    tau = 0.5 * (b - a) * x + 0.5 * (b + a)
    return center + scale * np.sinh(tau), 0.5 * (b - a) * w * scale * np.cosh(tau)


def _slice_rule(box, t, gap, qc, radius):
    n = (box.shape[0] - 1) // 2
    nodes, weights = [], []
    for axis in range(2 * n + 1):
        is_u = axis == 2 * n
        cap = radius ** 2 if is_u else radius
        lo, hi = max(box[axis, 0], -cap), min(box[axis, 1], cap)
        if lo >= hi:
            return None
        # one standard deviation of the increment over the gap
        scale = 4.0 * gap if is_u else np.sqrt(2.0 * gap)
        wide = np.isinf(box[axis]).any()
        if is_u:
            count = qc.nodes_u_wide if wide else qc.nodes_u
        else:
            count = qc.nodes_z_wide if wide else qc.nodes_z
        x, w = _axis_rule(lo, hi, scale, count)
        nodes.append(x)
        weights.append(w)
    mesh = np.meshgrid(*nodes, indexing="ij")
    wmesh = np.meshgrid(*weights, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wts = np.prod(np.stack([w.ravel() for w in wmesh], axis=-1), axis=-1)
    return pts, wts


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    truncation_mass: float
    nodes: int


def cylinder_measure_quadrature(I, qc=None):
    """``W(I)`` by nested tensor quadrature (n = 1, at most three times).

    The nested integral is evaluated as a chain of kernel matrices
    ``v_j = w_j * (v_{j-1} @ K_j)`` with ``K_j[a, b] = p_gap(node_a^{-1} node_b)``.
    ``truncation_mass`` bounds the measure discarded outside the truncation
    balls (``m * tail_eps``).
    """
    qc = qc or QuadratureConfig()
    if I.n != 1 or I.m > 3:
        raise CylinderSizeError("quadrature supports n = 1 and at most 3 times")
    kcfg = qc.kernel
    table = heatkernel.kernel_table(kcfg)
    fit = heatkernel.default_bound_fit(kcfg)
    times = np.concatenate([[0.0], I.times])
    gaps = np.diff(times)
    rules = []
    for j in range(I.m):
        gap = gaps[j] if j + 1 == I.m else min(gaps[j], gaps[j + 1])
        radius = heatkernel.truncation_radius(fit, I.n, I.times[j], qc.tail_eps)
        rule = _slice_rule(I.boxes[j], I.times[j], gap, qc, radius)
        if rule is None:
            return QuadratureResult(0.0, I.m * qc.tail_eps, 0)
        rules.append(rule)
    pts, wts = rules[0]
    v = wts * table(gaps[0], pts)
    for j in range(1, I.m):
        nxt, nw = rules[j]
        acc = np.zeros(nxt.shape[0])
        rows = max(1, qc.chunk // nxt.shape[0])
        for i in range(0, pts.shape[0], rows):
            inc = hgroup.left_increment(pts[i:i + rows, None, :], nxt[None, :, :])
            acc += v[i:i + rows] @ table(gaps[j], inc)
        v = nw * acc
        pts = nxt
    total = sum(r[0].shape[0] for r in rules)
    return QuadratureResult(float(np.sum(v)), I.m * qc.tail_eps, total)


# -- Monte Carlo -----------------------------------------------------------------

def _cylinder_grid(I, substeps):
    return sampler.PathGrid(np.concatenate([[0.0], I.times]), substeps)


def cylinder_hits(I, batch):
    """Membership of each path of a :class:`~sampler.PathBatch` sampled on ``I``'s times."""
    return I.contains(batch.points[:, 1:])


def cylinder_measure_mc(I, n_paths, master_seed, substeps=64, workers=1, scheme="compensated"):
    """Fraction of simulated paths in the cylinder, with binomial error.

    The area-compensated scheme is the default; with the plain midpoint
    scheme the O(1/substeps) bias in ``u`` is visible at 10^5 paths.
    """
    grid = _cylinder_grid(I, substeps)
    idx = grid.grid_index()[1:]
    parts = sampler.map_blocks(lambda fine, s, ids: I.contains(np.swapaxes(s[idx], 0, 1)),
                               I.n, grid, n_paths, master_seed, workers=workers, scheme=scheme)
    return proportion_estimate(np.concatenate(parts), master_seed)


# -- dyadic Holder machinery -----------------------------------------------------

@dataclass(frozen=True)
class HolderSpec:
    a: float
    r: float
    depth: int

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be positive")
        if not 0 < self.r < 0.5:
            raise ValueError("r must lie in (0, 1/2)")
        if self.depth < 1:
            raise ValueError("depth must be a positive integer")

    @property
    def constant(self):
        return 2.0 * self.a / (1.0 - 2.0 ** -self.r)


@dataclass(frozen=True)
class HolderCertificate:
    """Outcome of the chaining check on one path.

    ``hypothesis_ratio`` is the largest ``|increment| / (a 2^{-m r})`` over
    dyadic intervals; the hypothesis holds when it is at most one.
    ``max_ratio`` is the largest ``|x(t1)^{-1} x(t2)| / |t1 - t2|^r`` over
    dyadic pairs and ``chain_ratio`` the same for the telescoped sum of the
    decomposition.  ``violations`` counts pairs where the conclusion fails.
    """

    hypothesis_holds: bool
    hypothesis_ratio: float
    max_ratio: float
    chain_ratio: float
    constant: float
    violations: int

    @property
    def conclusion_holds(self):
        return self.violations == 0


def _dyadic_depth(grid):
    t = grid.times
    D = int(round(np.log2(t.size - 1)))
    if 2 ** D != t.size - 1 or not np.allclose(t, np.linspace(0.0, 1.0, t.size), atol=1e-15, rtol=0):
        raise ValueError("path is not on a complete dyadic grid of [0, 1]")
    return D


def level_increment_norms(points, depth, D=None):
    """Norms of ``x((k-1)/2^m)^{-1} x(k/2^m)`` for levels ``0..depth``.

    ``points`` has shape ``(..., 2^D + 1, 2n + 1)``; returns a list indexed by
    level with arrays of shape ``(..., 2^m)``.
    """
    if D is None:
        D = int(round(np.log2(points.shape[-2] - 1)))
    out = []
    for m in range(depth + 1):
        stride = 2 ** (D - m)
        sub = points[..., ::stride, :]
        out.append(hgroup.homogeneous_norm(hgroup.left_increment(sub[..., :-1, :], sub[..., 1:, :])))
    return out


def chain_intervals(i1, i2, depth):
    """Dyadic intervals ``(level, k)`` telescoping ``[i1, i2]`` on the ``2^depth`` grid.

    Follows the decomposition through the coarsest dyadic point ``q/2^p`` in
    ``[t1, t2]``: binary pieces of ``t - t1`` laid from ``t1`` upward, smallest
    first, then pieces of ``t2 - t`` laid from ``t`` upward, largest first.
    Each piece is aligned to its own level.
    """
    if not 0 <= i1 < i2 <= 2 ** depth:
        raise ValueError("need 0 <= i1 < i2 <= 2^depth")
    N = 2 ** depth
    mid = None
    for p in range(depth + 1):
        step = N >> p
        q = -(-i1 // step) * step
        if q <= i2:
            mid = q
            break
    pieces = []
    pos = i1
    left = mid - i1
    for lvl in range(depth, -1, -1):
        size = N >> lvl
        if left & size:
            pieces.append((lvl, pos // size))
            pos += size
    right = i2 - mid
    for lvl in range(depth + 1):
        size = N >> lvl
        if right & size:
            pieces.append((lvl, pos // size))
            pos += size
    assert pos == i2
    return pieces


@lru_cache(maxsize=4)
def _chain_tables(depth):
    N = 2 ** depth
    offsets = np.concatenate([[0], np.cumsum([2 ** m for m in range(depth + 1)])])
    i1, i2 = np.triu_indices(N + 1, k=1)
    width = 2 * (depth + 1)
    idx = np.full((i1.size, width), offsets[-1], dtype=np.int64)  # points at a zero pad
    for row, (a, b) in enumerate(zip(i1, i2)):
        for col, (lvl, k) in enumerate(chain_intervals(int(a), int(b), depth)):
            idx[row, col] = offsets[lvl] + k
    return i1, i2, idx


def dyadic_to_holder(path, spec, chain=True):
    """Check the dyadic hypothesis and the chained Holder conclusion on one path."""
    D = _dyadic_depth(path.grid)
    if D < spec.depth:
        raise ValueError("path grid depth %d below requested depth %d" % (D, spec.depth))
    pts = path.points[:: 2 ** (D - spec.depth)]
    levels = level_increment_norms(pts, spec.depth, spec.depth)
    hyp = max(float(np.max(lv * 2.0 ** (m * spec.r))) for m, lv in enumerate(levels)) / spec.a
    i1, i2, idx = _chain_tables(spec.depth)
    dt = (i2 - i1) / 2.0 ** spec.depth
    direct = hgroup.homogeneous_norm(hgroup.left_increment(pts[i1], pts[i2]))
    ratio = direct / dt ** spec.r
    chain_ratio = float("nan")
    if chain:
        flat = np.concatenate(levels + [np.zeros(1)])
        chained = flat[idx].sum(axis=1)
        chain_ratio = float(np.max(chained / dt ** spec.r))
    C = spec.constant
    violations = int(np.count_nonzero(ratio > C * (1.0 + 1e-12)))
    return HolderCertificate(hyp <= 1.0 + 1e-12, hyp, float(np.max(ratio)), chain_ratio, C, violations)


def power_path(spec, n=1, direction="vertical"):
    """Dyadic path on which the hypothesis is tight at every level.

    ``vertical``: ``x(t) = (0, a^2 t^{2r})``; ``horizontal``:
    ``x(t) = (a t^r e_1, 0)``.  In both the first level-``m`` increment has
    norm exactly ``a 2^{-mr}`` and no other exceeds it.
    """
    grid = sampler.PathGrid.dyadic(spec.depth)
    t = grid.times
    pts = np.zeros((t.size, 2 * n + 1))
    if direction == "vertical":
        pts[:, -1] = spec.a ** 2 * t ** (2.0 * spec.r)
    elif direction == "horizontal":
        pts[:, 0] = spec.a * t ** spec.r
    else:
        raise ValueError("direction must be 'vertical' or 'horizontal'")
    return sampler.SamplePath(grid, pts)


def hypothesis_level(points, r, depth):
    """Smallest ``a`` for which each path satisfies the dyadic hypothesis."""
    levels = level_increment_norms(points, depth)
    return np.max(np.stack([np.max(lv * 2.0 ** (m * r), axis=-1) for m, lv in enumerate(levels)]),
                  axis=0)


def holder_levels(r, depth, n_paths, master_seed, n=1, substeps=1, workers=1):
    """Per-path hypothesis level ``a_path`` on the dyadic grid of the given depth."""
    grid = sampler.PathGrid.dyadic(depth, substeps_per_interval=substeps)
    idx = grid.grid_index()
    parts = sampler.map_blocks(
        lambda fine, s, ids: hypothesis_level(np.swapaxes(s[idx], 0, 1), r, depth),
        n, grid, n_paths, master_seed, workers=workers)
    return np.concatenate(parts)


def holder_tail(spec, n_paths, master_seed, n=1, substeps=1, workers=1, levels=None):
    """Probability that a path breaks the dyadic hypothesis at some level <= depth.

    This is the grid-truncated surrogate for the mass outside the Holder
    ball.  Pass precomputed ``levels`` (from :func:`holder_levels`) to evaluate
    several ``a`` on common paths.
    """
    if spec.depth > 12:
        raise ValueError("depth above 12 is not supported")
    if levels is None:
        levels = holder_levels(spec.r, spec.depth, n_paths, master_seed, n, substeps, workers)
    return proportion_estimate(levels > spec.a, master_seed)


def holder_union_bound(spec, cfg=None):
    """``sum_m 2^m int_{|xi| > a 2^{-mr}} p_{2^{-m}}``, the per-cell union bound."""
    cfg = cfg or heatkernel.KernelConfig()
    total = 0.0
    for m in range(spec.depth + 1):
        rho = spec.a * 2.0 ** (-m * spec.r) * 2.0 ** (m / 2.0)
        total += 2.0 ** m * heatkernel.norm_tail(cfg, rho)
    return total
