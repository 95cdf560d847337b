"""Monte Carlo Feynman-Kac solver for ``(d/dt + L) u = -V u`` on H^n.

With ``L = -sum(X_i^2 + Y_i^2)`` the solution started from ``f`` is

    u(t, xi) = E[ f(xi x(t)) exp(-int_0^t V(xi x(s)) ds) ]

where ``x`` is the sampler's Wiener process.  The path integral is the
trapezoid rule over the simulation substeps.

Point densities of the weighted endpoint law (the kernel ``p^V_t``) are not
evaluable directly.  Two estimators are provided:

* :func:`fk_kernel_density` -- weighted histograms with explicit bin widths;
* heat-smoothed values ``E[W p_h(x(t)^-1 xi)]``, i.e. the kernel smoothed by
  an exact heat step of length ``h``.  They have no binning bias, and the
  identity checks below hold for them exactly, so a residual measures only
  Monte Carlo and discretization error.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import RegularGridInterpolator

from . import hgroup, heatkernel, sampler
from .estimates import Estimate, mean_estimate


# -- potentials and initial data --------------------------------------------------

POTENTIAL_KINDS = ("constant", "quadratic_radial", "tabulated_on_grid")
INITIAL_KINDS = ("constant", "gaussian_bump", "indicator_box")


@dataclass(frozen=True, eq=False)
class Potential:
    """A potential ``V`` with a certified lower bound.

    Build with :meth:`constant`, :meth:`quadratic_radial` or :meth:`tabulated`.
    Tabulated potentials interpolate multilinearly on a rectilinear grid in
    ``(x_1, y_1, ..., u)`` and clamp points outside it to the grid's boundary,
    so the table minimum is a valid lower bound.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError("unknown potential kind %r" % self.kind)
        if self.kind == "quadratic_radial" and self.params["alpha"] < 0:
            raise ValueError("quadratic_radial needs alpha >= 0 to stay bounded below")
        if self.kind == "tabulated_on_grid":
            axes = [np.asarray(a, dtype=float) for a in self.params["axes"]]
            values = np.asarray(self.params["values"], dtype=float)
            if len(axes) % 2 == 0 or values.shape != tuple(a.size for a in axes):
                raise ValueError("table needs 2n+1 axes and values of matching shape")
            interp = RegularGridInterpolator(axes, values, method="linear")
            object.__setattr__(self, "_interp", interp)
            object.__setattr__(self, "_lo", np.array([a[0] for a in axes]))
            object.__setattr__(self, "_hi", np.array([a[-1] for a in axes]))

    @classmethod
    def constant(cls, c):
        return cls("constant", {"c": float(c)})

    @classmethod
    def quadratic_radial(cls, alpha, beta=0.0):
        """``V = alpha |z|^2 + beta``."""
        return cls("quadratic_radial", {"alpha": float(alpha), "beta": float(beta)})

    @classmethod
    def tabulated(cls, axes, values):
        return cls("tabulated_on_grid", {"axes": [np.asarray(a, dtype=float) for a in axes],
                                         "values": np.asarray(values, dtype=float)})

    @property
    def lower_bound(self):
        if self.kind == "constant":
            return self.params["c"]
        if self.kind == "quadratic_radial":
            return self.params["beta"]
        return float(np.min(self.params["values"]))

    @property
    def is_zero(self):
        return self.kind == "constant" and self.params["c"] == 0.0

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.kind == "constant":
            return np.full(pts.shape[:-1], self.params["c"])
        if self.kind == "quadratic_radial":
            r2 = np.sum(pts[..., :-1] ** 2, axis=-1)
            return self.params["alpha"] * r2 + self.params["beta"]
        if pts.shape[-1] != self._lo.size:
            raise hgroup.DimensionError("potential table and points differ in dimension")
        flat = np.clip(pts.reshape(-1, pts.shape[-1]), self._lo, self._hi)
        return self._interp(flat).reshape(pts.shape[:-1])

    def path_integral(self, fine_times, pts):
        """Cumulative trapezoid ``int_0^{t_k} V``; ``pts`` has time on axis 0."""
        fine_times = np.asarray(fine_times, dtype=float)
        shape = (fine_times.size,) + (1,) * (np.ndim(pts) - 2)
        if self.kind == "constant":
            # exact, and the same number on every path
            return np.broadcast_to(self.params["c"] * fine_times.reshape(shape),
                                   np.shape(pts)[:-1]).copy()
        v = self(pts)
        h = np.diff(fine_times).reshape((-1,) + shape[1:])
        out = np.zeros(v.shape)
        np.cumsum(0.5 * h * (v[:-1] + v[1:]), axis=0, out=out[1:])
        return out

    def describe(self):
        if self.kind == "tabulated_on_grid":
            return {"kind": self.kind, "shape": list(self.params["values"].shape),
                    "lower_bound": self.lower_bound}
        return dict(self.params, kind=self.kind)


@dataclass(frozen=True, eq=False)
class InitialData:
    """Bounded initial datum ``f``.

    ``gaussian_bump`` is ``A exp(-|eta - c|^2 / (2 w^2))`` in the coordinates
    of ``eta``; ``indicator_box`` is one on a closed box ``(2n+1, 2)``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValueError("unknown initial-data kind %r" % self.kind)
        if self.kind == "gaussian_bump" and self.params["width"] <= 0:
            raise ValueError("bump width must be positive")

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", {"c": float(c)})

    @classmethod
    def gaussian_bump(cls, center, width, amplitude=1.0):
        return cls("gaussian_bump", {"center": np.asarray(center, dtype=float),
                                     "width": float(width), "amplitude": float(amplitude)})

    @classmethod
    def indicator_box(cls, box):
        return cls("indicator_box", {"box": np.asarray(box, dtype=float)})

    @property
    def sup_bound(self):
        if self.kind == "constant":
            return abs(self.params["c"])
        if self.kind == "gaussian_bump":
            return abs(self.params["amplitude"])
        return 1.0

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.kind == "constant":
            return np.full(pts.shape[:-1], self.params["c"])
        if self.kind == "gaussian_bump":
            d2 = np.sum((pts - self.params["center"]) ** 2, axis=-1)
            return self.params["amplitude"] * np.exp(-d2 / (2.0 * self.params["width"] ** 2))
        box = self.params["box"]
        return np.all((pts >= box[:, 0]) & (pts <= box[:, 1]), axis=-1).astype(float)

    def describe(self):
        return dict({k: np.asarray(v).tolist() for k, v in self.params.items()}, kind=self.kind)


@dataclass(frozen=True, eq=False)
class PathFunctional:
    """A bounded functional ``G`` of ``x`` restricted to ``[0, s]``.

    Kinds: ``one``; ``fk_weight`` (``exp(-int_0^s V)``); ``cylinder``
    (indicator of a :class:`~measure.CylinderSet` with times in ``(0, s]``).
    """

    kind: str
    s: float
    potential: Potential | None = None
    cylinder: object = None

    def __post_init__(self):
        if self.kind not in ("one", "fk_weight", "cylinder"):
            raise ValueError("unknown functional kind %r" % self.kind)
        if self.kind == "fk_weight" and self.potential is None:
            raise ValueError("fk_weight needs a potential")
        if self.kind == "cylinder" and (self.cylinder is None or self.cylinder.times[-1] > self.s):
            raise ValueError("cylinder times must lie in (0, s]")

    def required_times(self):
        base = [self.s]
        if self.kind == "cylinder":
            base += list(self.cylinder.times)
        return base

    def evaluate(self, fine_times, states):
        """Values per path; ``states`` is ``(S + 1, lanes, 2n + 1)``."""
        k = _time_index(fine_times, self.s)
        if self.kind == "one":
            return np.ones(states.shape[1])
        if self.kind == "fk_weight":
            return np.exp(-self.potential.path_integral(fine_times[:k + 1], states[:k + 1])[-1])
        idx = [_time_index(fine_times, t) for t in self.cylinder.times]
        return self.cylinder.contains(np.swapaxes(states[idx], 0, 1)).astype(float)


# -- grids -------------------------------------------------------------------------

def grid_through(times, dt):
    """A grid whose recording times include ``times`` with spacing at most ``dt``."""
    knots = np.unique(np.concatenate([[0.0], np.asarray(times, dtype=float)]))
    pieces = [np.linspace(a, b, max(1, math.ceil((b - a) / dt - 1e-9)) + 1)[:-1]
              for a, b in zip(knots[:-1], knots[1:])]
    return sampler.PathGrid(np.append(np.concatenate(pieces), knots[-1]), 1)


def _time_index(fine_times, t):
    hit = np.flatnonzero(fine_times == t)
    if hit.size != 1:
        raise ValueError("time %g is not a recording time of the grid" % t)
    return int(hit[0])


def _as_array(point, n=None):
    if point is None:
        return np.zeros(2 * n + 1)
    return point.as_array() if isinstance(point, hgroup.GroupPoint) else np.asarray(point, dtype=float)


def _paired(a, b, seed):
    """Estimates of ``a``, ``b`` and their per-path difference."""
    return mean_estimate(a, seed), mean_estimate(b, seed), mean_estimate(a - b, seed)


# -- solver ------------------------------------------------------------------------

def weight_integral(path, V, base=None):
    """``int_0^t V(base x(s)) ds`` by the trapezoid rule on the path's grid.

    Works on a :class:`~sampler.SamplePath` (returns a float) or a
    :class:`~sampler.PathBatch` (one value per path).
    """
    pts = path.points
    g = _as_array(base, hgroup.dim(pts))
    if isinstance(path, sampler.PathBatch):
        moved = hgroup.multiply(g, np.swapaxes(pts, 0, 1))
        return V.path_integral(path.grid.times, moved)[-1]
    return float(V.path_integral(path.grid.times, hgroup.multiply(g, pts)[:, None, :])[-1, 0])


def fk_solve(t, xi, f, V, n_paths, master_seed, substeps=64, scheme="compensated", workers=1):
    """``u(t, xi)`` as a Monte Carlo mean over ``f(xi x(t)) exp(-int V)``."""
    n = hgroup.dim(xi)
    g = _as_array(xi)
    grid = sampler.PathGrid(np.array([0.0, t]), substeps)

    def block(fine, states, ids):
        pts = hgroup.multiply(g, states)
        w = np.exp(-V.path_integral(fine, pts)[-1])
        return f(pts[-1]) * w

    vals = np.concatenate(sampler.map_blocks(block, n, grid, n_paths, master_seed,
                                             workers=workers, scheme=scheme))
    return mean_estimate(vals, master_seed)


def heat_reference(t, xi, f, cfg=None, rho_panels=14, u_panels=32, theta_nodes=64,
                   tol=1e-6):
    """``int f(xi zeta) p_t(zeta) d zeta`` by deterministic quadrature (n = 1).

    ``zeta`` runs over ``|z| <= 14 sqrt(t)``, ``|u| <= 64 t`` in polar
    coordinates ``(rho, theta, u)``: Gauss-Legendre in ``rho`` and ``u`` and
    the periodic trapezoid rule in ``theta``.  A half-resolution rerun
    estimates the error; :class:`~heatkernel.KernelConvergenceError` is
    raised when it exceeds ``tol * max(1, sup|f|)``.  Discontinuous data
    (indicator boxes) converge slowly and usually need a looser ``tol``.
    """
    cfg = cfg or heatkernel.KernelConfig()
    if cfg.n != 1 or hgroup.dim(xi) != 1:
        raise ValueError("heat_reference is implemented for n = 1 only")
    fine = _heat_quadrature(t, xi, f, cfg, rho_panels, u_panels, theta_nodes)
    coarse = _heat_quadrature(t, xi, f, cfg, rho_panels // 2, u_panels // 2, theta_nodes // 2)
    if abs(fine - coarse) > tol * max(1.0, f.sup_bound):
        raise heatkernel.KernelConvergenceError(
            "heat reference not converged: %.3g vs %.3g" % (fine, coarse))
    return fine


def _heat_quadrature(t, xi, f, cfg, rho_panels, u_panels, theta_nodes):
    t = float(t)
    g = _as_array(xi)
    rho, wr = heatkernel._gl_composite(0.0, 14.0 * math.sqrt(t), rho_panels)
    u, wu = heatkernel._gl_composite(-64.0 * t, 64.0 * t, 2 * u_panels)
    p = heatkernel.tensor_values(cfg, t, rho, u)
    wp = (wr * rho)[:, None] * p * wu[None, :]
    theta = 2.0 * np.pi * np.arange(theta_nodes) / theta_nodes
    total = 0.0
    for th in theta:
        zeta = np.empty((rho.size, u.size, 3))
        zeta[..., 0] = (rho * np.cos(th))[:, None]
        zeta[..., 1] = (rho * np.sin(th))[:, None]
        zeta[..., 2] = u[None, :]
        total += float(np.sum(wp * f(hgroup.multiply(g, zeta))))
    return total * 2.0 * np.pi / theta_nodes


# -- density estimates -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """Weighted histogram of endpoints ``x(t)`` with FK weights.

    ``mode`` is ``"radial"`` (bins in ``(|z|, u)``) or ``"cartesian"`` (bins in
    every coordinate).  ``mass[b]`` is the weighted fraction of paths ending
    in bin ``b``; ``density`` divides by the bin's Lebesgue volume in H^n.
    Bins no path reached have NaN density and are counted in ``empty_bins``.
    The bin widths are the bandwidth: the density is a bin average.
    """

    t: float
    n: int
    mode: str
    edges: tuple
    mass: np.ndarray
    mass_sq: np.ndarray
    counts: np.ndarray
    centroids: np.ndarray
    n_paths: int
    seed: int | None = None

    def volumes(self):
        if self.mode == "radial":
            r, u = self.edges
            shell = heatkernel.sphere_area(self.n) / (2 * self.n) * np.diff(r ** (2 * self.n))
            return np.outer(shell, np.diff(u))
        widths = np.meshgrid(*[np.diff(e) for e in self.edges], indexing="ij")
        return np.prod(widths, axis=0)

    @property
    def density(self):
        out = self.mass / self.volumes()
        return np.where(self.counts > 0, out, np.nan)

    @property
    def stderr(self):
        n = self.n_paths
        var = np.maximum(self.mass_sq - self.mass ** 2, 0.0) / max(n - 1, 1)
        return np.where(self.counts > 0, np.sqrt(var) / self.volumes(), np.nan)

    @property
    def empty_bins(self):
        return int(np.sum(self.counts == 0))

    @property
    def total_mass(self):
        return float(self.mass.sum())

    def bin_of(self, point):
        p = _as_array(point)
        coords = ((np.linalg.norm(p[:-1]), p[-1]) if self.mode == "radial" else p)
        idx = []
        for c, e in zip(coords, self.edges):
            k = int(np.searchsorted(e, c, side="right")) - 1
            if not 0 <= k < e.size - 1:
                raise ValueError("point lies outside the histogram")
            idx.append(k)
        return tuple(idx)

    def at(self, point):
        """``(density, stderr)`` of the bin containing ``point``."""
        b = self.bin_of(point)
        return float(self.density[b]), float(self.stderr[b])

    def integrate(self, fn):
        """``sum_b mass_b fn(centroid_b)`` over non-empty bins."""
        ok = self.counts > 0
        return float(np.sum(self.mass[ok] * fn(self.centroids[ok])))


def _bin_coords(pts, mode):
    if mode == "radial":
        return np.stack([np.linalg.norm(pts[:, :-1], axis=1), pts[:, -1]], axis=1)
    return pts


def fk_kernel_density(t, V, edges, n_paths, master_seed, base=None, substeps=64,
                      scheme="compensated", workers=1, reverse=False):
    """Weighted histogram estimate of ``u(t, .) = p^V_t(base, .)``.

    ``edges`` holds two arrays (radial mode, ``(|z|, u)``) or ``2n + 1`` arrays
    (cartesian mode).  With ``base`` the paths start at ``base`` and the
    histogram is of ``base x(t)``.  ``reverse=True`` replaces each path by its
    time reversal ``x(t)^-1 x(t - s)`` before weighting; the law is unchanged.
    """
    edges = tuple(np.asarray(e, dtype=float) for e in edges)
    if any(np.any(np.diff(e) <= 0) for e in edges):
        raise ValueError("bin edges must be strictly increasing")
    mode = "radial" if len(edges) == 2 else "cartesian"
    n = (len(edges) - 1) // 2 if mode == "cartesian" else None
    if n is None:
        n = hgroup.dim(base) if base is not None else 1
    g = _as_array(base, n)
    grid = sampler.PathGrid(np.array([0.0, t]), substeps)
    shape = tuple(e.size - 1 for e in edges)

    def block(fine, states, ids):
        if reverse:
            states = hgroup.left_increment(states[-1:], states[::-1])
        pts = hgroup.multiply(g, states)
        w = np.exp(-V.path_integral(fine, pts)[-1])
        c = _bin_coords(pts[-1], mode)
        m, _ = np.histogramdd(c, bins=edges, weights=w)
        m2, _ = np.histogramdd(c, bins=edges, weights=w * w)
        cnt, _ = np.histogramdd(c, bins=edges)
        mc = np.stack([np.histogramdd(c, bins=edges, weights=w * c[:, j])[0]
                       for j in range(c.shape[1])], axis=-1)
        return m, m2, cnt, mc

    parts = sampler.map_blocks(block, n, grid, n_paths, master_seed, workers=workers,
                               scheme=scheme)
    mass, mass_sq = np.zeros(shape), np.zeros(shape)
    counts, moments = np.zeros(shape), np.zeros(shape + (len(edges),))
    for m, m2, cnt, mc in parts:
        mass += m
        mass_sq += m2
        counts += cnt
        moments += mc
    with np.errstate(invalid="ignore", divide="ignore"):
        centroids = np.where(mass[..., None] > 0, moments / mass[..., None], np.nan)
    return DensityEstimate(float(t), n, mode, edges, mass / n_paths, mass_sq / n_paths,
                           counts.astype(int), centroids, int(n_paths), master_seed)


def smoothed_density(t, xi, V, h, n_paths, master_seed, base=None, dt=1 / 64,
                     scheme="compensated", workers=1, cfg=None):
    """``E[W_t p_h((base x(t))^-1 xi)]``: the FK kernel smoothed by an exact heat step.

    Converges to ``p^V_t(base, xi)`` as ``h -> 0`` with O(h) bias and no
    binning.  For ``V = 0`` the exact value is ``p_{t+h}(base^-1 xi)``.
    """
    table = heatkernel.kernel_table(cfg or heatkernel.KernelConfig())
    target = _as_array(xi)
    n = hgroup.dim(target)
    g = _as_array(base, n)
    grid = grid_through([t], dt)

    def block(fine, states, ids):
        pts = hgroup.multiply(g, states)
        w = np.exp(-V.path_integral(fine, pts)[-1])
        return w * table(h, hgroup.left_increment(pts[-1], target))

    vals = np.concatenate(sampler.map_blocks(block, n, grid, n_paths, master_seed,
                                             workers=workers, scheme=scheme))
    return mean_estimate(vals, master_seed)


# -- identity checks ---------------------------------------------------------------

@dataclass(frozen=True)
class IdentityCheck:
    """Both sides of an identity and their per-path difference.

    ``lhs`` and ``rhs`` are estimated on common paths, so ``diff.stderr`` is
    the right yardstick for the residual.
    """

    lhs: Estimate
    rhs: Estimate
    diff: Estimate
    meta: dict = field(default_factory=dict)

    @property
    def residual(self):
        """Relative residual ``|lhs - rhs| / |rhs|``."""
        return abs(self.diff.value) / abs(self.rhs.value)

    @property
    def stderr(self):
        return self.diff.stderr / abs(self.rhs.value)

    @property
    def zscore(self):
        if self.diff.stderr == 0:
            return 0.0 if self.diff.value == 0 else math.copysign(math.inf, self.diff.value)
        return self.diff.value / self.diff.stderr


def markov_check(s, t, xi, G, n_paths, master_seed, h=0.05, dt=1 / 64,
                 scheme="compensated", workers=1, cfg=None):
    """Markov property at time ``s`` for a functional ``G`` of ``x`` on ``[0, s]``.

    Compares ``E[G p_h(x(t)^-1 xi)]`` with ``E[G p_{t-s+h}(x(s)^-1 xi)]``; the
    second side is the time-``s`` weighted density convolved with the exact
    kernel.  Both are heat-smoothed versions of the two sides of the identity
    for ``E[G delta_{t, xi}]``.
    """
    if not 0 < s < t:
        raise ValueError("need 0 < s < t")
    if G.s != s:
        raise ValueError("functional must be measurable up to s")
    table = heatkernel.kernel_table(cfg or heatkernel.KernelConfig())
    target = _as_array(xi)
    n = hgroup.dim(target)
    grid = grid_through(G.required_times() + [t], dt)

    def block(fine, states, ids):
        gv = G.evaluate(fine, states)
        k = _time_index(fine, s)
        left = gv * table(h, hgroup.left_increment(states[-1], target))
        right = gv * table(t - s + h, hgroup.left_increment(states[k], target))
        return np.stack([left, right], axis=1)

    vals = np.concatenate(sampler.map_blocks(block, n, grid, n_paths, master_seed,
                                             workers=workers, scheme=scheme))
    return IdentityCheck(*_paired(vals[:, 0], vals[:, 1], master_seed),
                         meta={"h": h, "dt": grid.step_sizes().max()})


def duhamel_residual(t, xi, V, n_paths, master_seed, h=0.05, tau_nodes=12, dt=1 / 64,
                     scheme="compensated", workers=1, cfg=None):
    """The integral equation ``u = p_t - int_0^t int V u(tau) p_{t-tau} dtau``.

    Heat-smoothed by ``p_h`` on both sides:

        E[W_t p_h(x(t)^-1 xi)] = p_{t+h}(xi)
            - int_0^t E[W_tau V(x(tau)) p_{t-tau+h}(x(tau)^-1 xi)] dtau

    The ``tau``-integral uses ``tau_nodes`` Gauss-Legendre nodes; the inner
    expectation integrates the weighted time-``tau`` density exactly, as an
    empirical measure, instead of through bins.
    """
    cfg = cfg or heatkernel.KernelConfig()
    table = heatkernel.kernel_table(cfg)
    target = _as_array(xi)
    n = hgroup.dim(target)
    x, w = leggauss(tau_nodes)
    tau = 0.5 * t * (x + 1.0)
    w = 0.5 * t * w
    grid = grid_through(list(tau) + [t], dt)
    p_free = heatkernel.kernel_eval(cfg, t + h, target)

    def block(fine, states, ids):
        W = np.exp(-V.path_integral(fine, states))
        idx = [_time_index(fine, s) for s in tau]
        left = W[-1] * table(h, hgroup.left_increment(states[-1], target))
        xs = states[idx]
        kern = table((t - tau + h)[:, None], hgroup.left_increment(xs, target))
        correction = np.sum(w[:, None] * W[idx] * V(xs) * kern, axis=0)
        return np.stack([left, p_free - correction], axis=1)

    vals = np.concatenate(sampler.map_blocks(block, n, grid, n_paths, master_seed,
                                             workers=workers, scheme=scheme))
    return IdentityCheck(*_paired(vals[:, 0], vals[:, 1], master_seed),
                         meta={"h": h, "tau_nodes": tau_nodes, "p_free": float(p_free)})


def symmetry_check(t, xi, eta, V, n_paths, master_seed, h=0.1, dt=1 / 64,
                   scheme="compensated", workers=1, cfg=None):
    """Symmetry ``p^V(t, xi, eta) = p^V(t, eta, xi)`` tested statistically.

    The kernel from ``xi`` is ``p^{V_xi}_t(o, xi^-1 eta)`` with the translated
    potential ``V_xi(zeta) = V(xi zeta)``.  Each side is estimated in the
    sandwiched form ``P_{h/2} P^V_t P_{h/2}``: a free heat step of ``h/2``,
    then ``t`` under the potential, then the exact kernel ``p_{h/2}``.  The
    sandwich is itself a symmetric kernel, so the smoothing adds no bias to
    the comparison.  Both sides use the same paths and the z-score comes
    from their per-path difference.
    """
    table = heatkernel.kernel_table(cfg or heatkernel.KernelConfig())
    a, b = _as_array(xi), _as_array(eta)
    n = hgroup.dim(a)
    half = 0.5 * h
    grid = grid_through([half, half + t], dt)

    def side(fine, states, k0, start, end):
        pts = hgroup.multiply(start, states[k0:])
        wgt = np.exp(-V.path_integral(fine[k0:], pts)[-1])
        return wgt * table(half, hgroup.left_increment(pts[-1], end))

    def block(fine, states, ids):
        k0 = _time_index(fine, half)
        return np.stack([side(fine, states, k0, a, b), side(fine, states, k0, b, a)], axis=1)

    vals = np.concatenate(sampler.map_blocks(block, n, grid, n_paths, master_seed,
                                             workers=workers, scheme=scheme))
    return IdentityCheck(*_paired(vals[:, 0], vals[:, 1], master_seed), meta={"h": h})
