"""Heat kernel of the sub-Laplacian ``L = -sum(X_i^2 + Y_i^2)`` on H^n.

The kernel used throughout is

    p_t(z, u) = (2 pi)^-1 (4 pi t)^-n (4 t)^-1
                * int_R (|l| / sinh|l|)^n exp(-|l| coth|l| |z|^2 / (4t)) cos(l u / (4t)) dl

which solves ``(d/dt + L) p = 0``, integrates to one, and reproduces the
moments ``E|z(t)|^2 = 4nt`` and ``Var u(t) = 16 n t^2`` of the sampler.
It depends on a point only through ``(|z|, u)``, is even in ``u`` and obeys
``p_t(z, u) = t^-(n+1) p_1(z / sqrt(t), u / t)``.

Three evaluation routes are provided:

* :func:`kernel_eval` -- composite Gauss-Legendre in the scaled variable,
  with an analytic tail bound (the reference route);
* ``method="adaptive"`` -- QUADPACK's cosine-weighted rule in the unscaled
  variable, kept independent of the fixed nodes for cross-checks;
* :class:`KernelTable` -- a bicubic spline of ``p_1`` used by the Monte
  Carlo and quadrature code that needs millions of evaluations.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, ndimage, optimize, special

from . import hgroup


class KernelConvergenceError(ArithmeticError):
    """The discarded part of a quadrature exceeds the requested tolerance."""


@dataclass(frozen=True)
class KernelConfig:
    """Quadrature controls for the lambda-integral.

    The integrand is bounded by ``(2 l e^-l / (1 - e^-2L))^n e^{-a l}`` on
    ``[L, inf)``, so the tail discarded by the cutoff ``L`` is at most
    ``(2/(1-e^-2L))^n Gamma(n+1, (n+a) L) / (n+a)^(n+1)``; with the defaults
    this is below 1e-24 relative to the integral.  Panels of ``panel_order``
    Gauss-Legendre nodes resolve the cosine up to ``|u|/t`` of several
    hundred.
    """

    n: int = 1
    lambda_cutoff: float = 60.0
    node_count: int = 1600
    rel_tol: float = 1e-8
    panel_order: int = 20
    t_floor: float = 1e-4

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.lambda_cutoff <= 0 or self.node_count < self.panel_order:
            raise ValueError("need lambda_cutoff > 0 and node_count >= panel_order")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


@dataclass(frozen=True)
class BoundFit:
    """Constants of ``p_t(xi) <= c M t^-(n+1) exp(-|xi|^2 / (M t))``."""

    M: float
    c: float

    def __post_init__(self):
        if not (np.isfinite(self.M) and np.isfinite(self.c) and self.M > 0 and self.c > 0):
            raise ValueError("bound constants must be finite and positive")

    def bound(self, n, t, norm):
        t = np.asarray(t, dtype=float)
        return self.c * self.M * t ** (-(n + 1)) * np.exp(-np.asarray(norm) ** 2 / (self.M * t))


# -- integrand pieces ---------------------------------------------------------

def lambda_over_sinh(lam):
    """``l / sinh l`` for ``l >= 0``, using the series near zero."""
    lam = np.abs(np.asarray(lam, dtype=float))
    small = lam < 1e-3
    l2 = lam * lam
    with np.errstate(divide="ignore", invalid="ignore"):
        big = 2.0 * lam * np.exp(-lam) / -np.expm1(-2.0 * lam)
    series = 1.0 - l2 / 6.0 + 7.0 * l2 * l2 / 360.0
    return np.where(small, series, big)


def lambda_coth(lam):
    """``l coth l`` for ``l >= 0``, removable value 1 at zero."""
    lam = np.abs(np.asarray(lam, dtype=float))
    small = lam < 1e-3
    l2 = lam * lam
    with np.errstate(divide="ignore", invalid="ignore"):
        big = lam * (1.0 + np.exp(-2.0 * lam)) / -np.expm1(-2.0 * lam)
    return np.where(small, 1.0 + l2 / 3.0 - l2 * l2 / 45.0, big)


@lru_cache(maxsize=16)
def _nodes(cutoff, node_count, order):
    x, w = leggauss(order)
    panels = max(1, node_count // order)
    edges = np.linspace(0.0, cutoff, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    lam = (mid[:, None] + half[:, None] * x).ravel()
    wts = (half[:, None] * w).ravel()
    lam.setflags(write=False)
    wts.setflags(write=False)
    return lam, wts


def _prefactor(n, t):
    return 1.0 / (2.0 * np.pi * (4.0 * np.pi * t) ** n * 4.0 * t)


def tail_bound(cfg, a):
    """Bound on ``int_L^inf |integrand|`` for ``a = |z|^2/(4t)``."""
    n, L = cfg.n, cfg.lambda_cutoff
    k = n + np.asarray(a, dtype=float)
    lead = (2.0 / -math.expm1(-2.0 * L)) ** n
    return lead * special.gammaincc(n + 1, k * L) * math.factorial(n) / k ** (n + 1)


def _check_t(cfg, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    if np.any(t < cfg.t_floor):
        raise ValueError("t below the configured floor %g" % cfg.t_floor)
    return t


def _scaled_integral(cfg, a, b):
    """Twice the half-line integral, returned with the envelope integral.

    ``a`` and ``b`` are 1-d arrays of equal length.  Evaluation is chunked so
    each point sees the same summation order whatever the batch size.
    """
    lam, wts = _nodes(cfg.lambda_cutoff, cfg.node_count, cfg.panel_order)
    base = wts * lambda_over_sinh(lam) ** cfg.n
    lc = lambda_coth(lam)
    out = np.empty(a.shape)
    env = np.empty(a.shape)
    step = 256
    for i in range(0, a.size, step):
        sl = slice(i, i + step)
        g = base * np.exp(-np.outer(a[sl], lc))
        env[sl] = 2.0 * g.sum(axis=1)
        out[sl] = 2.0 * np.einsum("ij,ij->i", g, np.cos(np.outer(b[sl], lam)))
    return out, env


def kernel_radial(cfg, t, r, u, return_error=False):
    """Evaluate ``p_t`` at ``|z| = r``, vertical coordinate ``u`` (broadcasting)."""
    t = _check_t(cfg, t)
    t, r, u = np.broadcast_arrays(t, np.asarray(r, dtype=float), np.asarray(u, dtype=float))
    shape = t.shape
    t, r, u = t.ravel(), r.ravel(), u.ravel()
    a = r * r / (4.0 * t)
    b = u / (4.0 * t)
    val, env = _scaled_integral(cfg, a, b)
    tail = 2.0 * tail_bound(cfg, a)
    if np.any(tail > cfg.rel_tol * env):
        raise KernelConvergenceError(
            "lambda tail %.3g exceeds rel_tol %.3g; raise lambda_cutoff"
            % (np.max(tail / env), cfg.rel_tol))
    pref = _prefactor(cfg.n, t)
    val = (pref * val).reshape(shape)
    if return_error:
        return val, (pref * tail).reshape(shape)
    return val


def _adaptive_radial(cfg, t, r, u):
    """Unscaled lambda variable, QUADPACK cosine weight, independent nodes."""
    n = cfg.n
    cutoff = cfg.lambda_cutoff / (4.0 * t)

    def envelope(lam):
        s = 4.0 * t * lam
        return lambda_over_sinh(s) ** n * np.exp(-r * r / (4.0 * t) * lambda_coth(s))

    val, _ = integrate.quad(envelope, 0.0, cutoff, weight="cos", wvar=abs(u), limit=400,
                            epsabs=0.0, epsrel=1e-12)
    return 2.0 * val / (2.0 * np.pi * (4.0 * np.pi * t) ** n)


def kernel_eval(cfg, t, xi, method="nodes", return_error=False):
    """Heat kernel ``p_t(xi)`` for a point or a batch of points.

    ``method="nodes"`` is the fixed Gauss-Legendre route; ``"adaptive"`` the
    independent QUADPACK route (scalar points only, no error output).
    """
    if hgroup.dim(xi) != cfg.n:
        raise hgroup.DimensionError("point is in H^%d, config is for H^%d" % (hgroup.dim(xi), cfg.n))
    r, u = hgroup.radial_coords(xi)
    if method == "adaptive":
        t = float(_check_t(cfg, t))
        if np.ndim(r):
            return np.array([_adaptive_radial(cfg, t, ri, ui) for ri, ui in zip(r, u)])
        return _adaptive_radial(cfg, t, float(r), float(u))
    if method != "nodes":
        raise ValueError("unknown method %r" % method)
    out = kernel_radial(cfg, t, r, u, return_error=return_error)
    if return_error:
        val, err = out
        return (float(val), float(err)) if np.ndim(val) == 0 else (val, err)
    return float(out) if np.ndim(out) == 0 else out


def origin_value(n, t=1.0):
    """Closed form ``p_t(o)``: prefactor times ``int_R (|l|/sinh|l|)^n dl``.

    The moments ``int_0^inf l^n / sinh^n l dl`` are known in closed form for
    n = 1, 2 (pi^2/4 and pi^2/6).
    """
    half = {1: np.pi ** 2 / 4.0, 2: np.pi ** 2 / 6.0}
    if n not in half:
        raise ValueError("closed form only for n in (1, 2)")
    return _prefactor(n, t) * 2.0 * half[n]


def marginal_char_u(cfg, t, lam):
    """``E[exp(i lam u(t))] = sech^n(4 lam t)``.

    Integrating the kernel over ``z`` replaces the Gaussian factor in the
    lambda-integrand by ``(l coth l)^-n``, which turns ``(l / sinh l)^n`` into
    ``cosh(l)^-n`` evaluated at ``l = 4 lam t``.
    """
    t = _check_t(cfg, t)
    x = np.abs(4.0 * np.asarray(lam, dtype=float) * t)
    sech = 2.0 * np.exp(-x) / (1.0 + np.exp(-2.0 * x))
    out = sech ** cfg.n
    return float(out) if np.ndim(out) == 0 else out


def sphere_area(n):
    """Surface area of the unit sphere S^(2n-1) in R^(2n)."""
    return 2.0 * np.pi ** n / math.gamma(n)


def _gl_composite(lo, hi, panels, order=20):
    x, w = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def tensor_values(cfg, t, r, u):
    """``p_t`` on the tensor grid ``r x u`` as one matrix product in lambda."""
    lam, wts = _nodes(cfg.lambda_cutoff, cfg.node_count, cfg.panel_order)
    base = wts * lambda_over_sinh(lam) ** cfg.n
    left = base * np.exp(-np.outer(np.asarray(r) ** 2 / (4.0 * t), lambda_coth(lam)))
    right = np.cos(np.outer(np.asarray(u) / (4.0 * t), lam))
    return 2.0 * _prefactor(cfg.n, t) * left @ right.T


def radial_grid_integral(cfg, t, weight_fn=None, r_panels=14, u_panels=32):
    """``int_{H^n} p_t(xi) w(|z|, u) dxi`` on a tensor grid in ``(|z|, u)``.

    Uses the radial structure: ``dxi = |S^(2n-1)| r^(2n-1) dr du``.  The box
    is ``|z| <= 14 sqrt(t)``, ``|u| <= 64 t`` where the kernel is below
    ``e^-40`` of its peak.  ``weight_fn`` must be even in ``u``.
    """
    t = float(_check_t(cfg, t))
    r, wr = _gl_composite(0.0, 14.0 * np.sqrt(t), r_panels)
    u, wu = _gl_composite(0.0, 64.0 * t, u_panels)
    p = tensor_values(cfg, t, r, u)
    jac = sphere_area(cfg.n) * r ** (2 * cfg.n - 1)
    w2 = 2.0 * wu
    if weight_fn is not None:
        p = p * weight_fn(r[:, None], u[None, :])
    return float((wr * jac) @ p @ w2)


def normalization(cfg, t):
    """Total mass of ``p_t``; equals one for a transition density.

    The result is compared against a half-resolution grid and a
    :class:`KernelConvergenceError` raised if the two differ by more than
    ``max(rel_tol, 1e-9)``.
    """
    fine = radial_grid_integral(cfg, t)
    coarse = radial_grid_integral(cfg, t, r_panels=7, u_panels=16)
    if abs(fine - coarse) > max(cfg.rel_tol, 1e-9):
        raise KernelConvergenceError("normalization grid not converged: %.3g vs %.3g"
                                     % (fine, coarse))
    return fine


# -- fast table ---------------------------------------------------------------

class KernelTable:
    """Bicubic spline of ``p_1(r, v)`` with the scaling identity for other t.

    The table covers ``0 <= r <= r_max``, ``0 <= |v| <= v_max``; outside it
    the kernel is treated as zero.  ``max_outside`` records the largest
    table value on the outer boundary, which bounds what is discarded.
    """

    def __init__(self, cfg, r_max=12.0, v_max=60.0, dr=0.025, dv=0.05):
        self.cfg = cfg
        self.r_max, self.v_max, self.dr, self.dv = r_max, v_max, dr, dv
        r = np.arange(0.0, r_max + 0.5 * dr, dr)
        v = np.arange(0.0, v_max + 0.5 * dv, dv)
        # mirror v so the spline sees an even function across v = 0
        vv = np.concatenate([-v[:0:-1], v])
        lam, wts = _nodes(cfg.lambda_cutoff, cfg.node_count, cfg.panel_order)
        base = wts * lambda_over_sinh(lam) ** cfg.n
        left = base * np.exp(-np.outer(r * r / 4.0, lambda_coth(lam)))
        right = np.cos(np.outer(vv / 4.0, lam))
        table = 2.0 * _prefactor(cfg.n, 1.0) * left @ right.T
        self.values = table
        self.max_outside = float(max(np.abs(table[-1]).max(), np.abs(table[:, 0]).max(),
                                     np.abs(table[:, -1]).max()))
        self._coef = ndimage.spline_filter(table, order=3, mode="mirror")
        self._nv = v.size - 1

    def p1(self, r, v):
        r = np.abs(np.asarray(r, dtype=float))
        v = np.asarray(v, dtype=float)
        shape = np.broadcast(r, v).shape
        r, v = np.broadcast_to(r, shape).ravel(), np.broadcast_to(v, shape).ravel()
        inside = (r <= self.r_max) & (np.abs(v) <= self.v_max)
        out = np.zeros(r.shape)
        if np.any(inside):
            coords = np.vstack([r[inside] / self.dr, v[inside] / self.dv + self._nv])
            vals = ndimage.map_coordinates(self._coef, coords, order=3, mode="mirror",
                                           prefilter=False)
            out[inside] = np.maximum(vals, 0.0)
        return out.reshape(shape)

    def radial(self, t, r, u):
        t = np.asarray(t, dtype=float)
        st = np.sqrt(t)
        return t ** (-(self.cfg.n + 1)) * self.p1(np.asarray(r) / st, np.asarray(u) / t)

    def __call__(self, t, xi):
        r, u = hgroup.radial_coords(xi)
        return self.radial(t, r, u)


@lru_cache(maxsize=4)
def kernel_table(cfg=None):
    """Shared :class:`KernelTable` for a config (built once per process)."""
    return KernelTable(cfg or KernelConfig())


# -- Gaussian upper bound -----------------------------------------------------

class BoundFitError(ArithmeticError):
    """No constant below the ceiling certifies the grid."""


def _min_M(q, s, M_max):
    """Smallest M with ``M exp(-s/M) >= q`` (left side increases in M)."""
    if q <= 0:
        return 0.0
    if s == 0:
        return q
    h = lambda logM: logM - s / math.exp(logM) - math.log(q)
    hi = math.log(M_max)
    if h(hi) < 0:
        return math.inf
    lo = min(math.log(q), -50.0)
    while h(lo) > 0:
        lo -= 50.0
    return math.exp(optimize.brentq(h, lo, hi, xtol=1e-14, rtol=1e-14))


def bound_grid(n=1, radii=(0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0,
                            12.0, 14.0), angles=17):
    """Points spread over homogeneous spheres, covering z- and u-directions."""
    pts = []
    for rho in radii:
        if rho == 0:
            pts.append(np.zeros(2 * n + 1))
            continue
        for phi in np.linspace(-np.pi / 2, np.pi / 2, angles):
            r = rho * np.sqrt(max(np.cos(phi), 0.0))
            p = np.zeros(2 * n + 1)
            p[0] = r
            p[-1] = rho * rho * np.sin(phi)
            pts.append(p)
    return np.array(pts)


def gaussian_bound_fit(cfg, t_set, grid, M_max=1e3):
    """Smallest ``M`` (with ``c = 1``), then smallest ``c`` for that ``M``.

    Both constants certify the bound at every ``(t, xi)`` of the product set.
    Raises :class:`BoundFitError` if ``M`` would exceed ``M_max``.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    t_set = np.atleast_1d(np.asarray(t_set, dtype=float))
    if grid.shape[0] == 0 or t_set.size == 0:
        raise ValueError("need a nonempty grid and time set")
    n = cfg.n
    norms = hgroup.homogeneous_norm(grid)
    q_all, s_all = [], []
    for t in t_set:
        p = kernel_eval(cfg, t, grid)
        q_all.append(p * t ** (n + 1))
        s_all.append(norms ** 2 / t)
    q_all, s_all = np.concatenate(q_all), np.concatenate(s_all)
    M = max(_min_M(q, s, M_max) for q, s in zip(q_all, s_all))
    if not np.isfinite(M) or M > M_max:
        raise BoundFitError("Gaussian bound needs M above the ceiling %g" % M_max)
    M *= 1.0 + 1e-12
    c = float(np.max(q_all / (M * np.exp(-s_all / M))))
    c = min(1.0, c * (1.0 + 1e-12))
    return BoundFit(M=float(M), c=c)


def bound_margin(cfg, fit, t_set, grid):
    """Minimum of ``bound - p_t`` over the product set (>= 0 when certified)."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    norms = hgroup.homogeneous_norm(grid)
    worst = np.inf
    for t in np.atleast_1d(t_set):
        gap = fit.bound(cfg.n, t, norms) - kernel_eval(cfg, t, grid)
        worst = min(worst, float(np.min(gap)))
    return worst


def unit_ball_volume(n):
    """Lebesgue volume of ``{|xi| <= 1}`` in H^n."""
    ball_2n = np.pi ** n / math.gamma(n + 1)
    return ball_2n * math.sqrt(math.pi) * math.gamma(n / 2 + 1) / math.gamma(n / 2 + 1.5)


def bound_tail_mass(fit, n, t, radius):
    """Mass of the Gaussian bound outside the homogeneous ball of given radius.

    Independent of ``t`` once the radius is measured in units of ``sqrt(M t)``:
    ``c M^(n+2) (n+1) |B_1| Gamma(n+1, R^2/(M t))``.
    """
    x = radius ** 2 / (fit.M * t)
    upper_gamma = special.gammaincc(n + 1, x) * math.gamma(n + 1)
    return fit.c * fit.M ** (n + 2) * (n + 1) * unit_ball_volume(n) * upper_gamma


def truncation_radius(fit, n, t, eps=1e-6):
    """Homogeneous radius outside which the bound certifies mass below ``eps``."""
    f = lambda x: math.log(bound_tail_mass(fit, n, 1.0, math.sqrt(x * fit.M)) + 1e-300) - math.log(eps)
    hi = 10.0
    while f(hi) > 0:
        hi *= 2.0
    x = optimize.brentq(f, 1e-9, hi)
    return math.sqrt(x * fit.M * t)


@lru_cache(maxsize=4)
def default_bound_fit(cfg=None):
    """Bound constants fitted on :func:`bound_grid` at t = 1 (scale invariant)."""
    cfg = cfg or KernelConfig()
    return gaussian_bound_fit(cfg, [1.0], bound_grid(cfg.n))


def norm_tail(cfg, rho, t=1.0, phi_nodes=48, rho_panels=12):
    """``int_{|xi| > rho} p_t(xi) dxi`` by quadrature in homogeneous polar coordinates.

    With ``|z|^2 = s^2 cos(phi)``, ``u = s^2 sin(phi)`` the volume element is
    ``(|S^(2n-1)|/2) (s^2 cos phi)^(n-1) 2 s^3 ds dphi``.  Radii beyond
    ``14 sqrt(t)`` are dropped: the Gaussian bound puts less than 1e-15 there,
    and that far out ``|u| / t`` outruns the fixed lambda nodes.  If ``rho``
    itself lies beyond, the bound's tail mass is returned instead.
    """
    t = float(_check_t(cfg, t))
    n = cfg.n
    rho = max(float(rho), 0.0)
    s_hi = 14.0 * np.sqrt(t)
    if rho >= s_hi:
        return float(bound_tail_mass(default_bound_fit(cfg), n, t, rho))
    s, ws = _gl_composite(rho, s_hi, rho_panels)
    phi, wphi = _gl_composite(-np.pi / 2, np.pi / 2, 1, order=phi_nodes)
    S, P = np.meshgrid(s, phi, indexing="ij")
    c = np.maximum(np.cos(P), 0.0)
    r = S * np.sqrt(c)
    u = S * S * np.sin(P)
    vals = kernel_radial(cfg, t, r.ravel(), u.ravel()).reshape(S.shape)
    jac = 0.5 * sphere_area(n) * (S * S * c) ** (n - 1) * 2.0 * S ** 3
    return max(float(ws @ (vals * jac) @ wphi), 0.0)


def bin_probabilities(cfg, t, r_edges, u_edges, order=16):
    """``P(|z(t)| in [r_i, r_i+1), u(t) in [u_j, u_j+1))`` under ``p_t``.

    Infinite edges are cut at ``|z| = 14 sqrt(t)`` and ``|u| = 64 t``, beyond
    which the kernel carries less than 1e-15.  Each cell uses ``order``
    Gauss-Legendre nodes per axis.
    """
    t = float(_check_t(cfg, t))
    r_e = np.clip(np.asarray(r_edges, dtype=float), 0.0, 14.0 * np.sqrt(t))
    u_e = np.clip(np.asarray(u_edges, dtype=float), -64.0 * t, 64.0 * t)
    x, w = leggauss(order)

    def nodes(edges):
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()

    r, wr = nodes(r_e)
    u, wu = nodes(u_e)
    p = tensor_values(cfg, t, r, u)
    wr = wr * sphere_area(cfg.n) * r ** (2 * cfg.n - 1)
    cells = (wr[:, None] * p * wu[None, :]).reshape(r_e.size - 1, order, u_e.size - 1, order)
    return np.maximum(cells.sum(axis=(1, 3)), 0.0)


# -- Chapman-Kolmogorov by simulation -----------------------------------------

@dataclass(frozen=True)
class SemigroupResidual:
    """Monte Carlo ``E[p_t(eta^-1 xi)]`` with ``eta ~ p_s``, against ``p_target(xi)``.

    ``residual`` and ``stderr`` are relative to the target value.
    """

    estimate: float
    stderr_abs: float
    target: float
    n_samples: int

    @property
    def residual(self):
        return abs(self.estimate - self.target) / self.target

    @property
    def stderr(self):
        return self.stderr_abs / self.target

    @property
    def zscore(self):
        return (self.estimate - self.target) / self.stderr_abs


def semigroup_residual(cfg, s, t, xi, n_samples, seed, substeps=64, t_target=None,
                       workers=1, scheme="compensated"):
    """Check ``int p_s(eta) p_t(eta^-1 xi) d eta = p_{s+t}(xi)`` by simulation.

    ``eta`` is the sampler's state at time ``s``; ``p_t`` is read from the
    shared :class:`KernelTable`.  ``xi`` may be a batch of points, in which
    case all of them reuse the same ``eta`` sample and a list is returned.
    ``t_target`` replaces ``s + t`` on the right-hand side (negative controls).
    The default area-compensated scheme keeps the discretization bias near
    ``0.5 / substeps^2`` relative, well under the Monte Carlo error.
    """
    from . import sampler

    _check_t(cfg, s)
    _check_t(cfg, t)
    pts = xi.as_array() if isinstance(xi, hgroup.GroupPoint) else np.asarray(xi, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if hgroup.dim(pts) != cfg.n:
        raise hgroup.DimensionError("point dimension does not match the config")
    table = kernel_table(cfg)
    grid = sampler.PathGrid(np.array([0.0, s]), substeps)

    def block(fine, states, ids):
        eta = states[-1]
        return table(t, hgroup.left_increment(eta[:, None, :], pts[None, :, :]))

    vals = np.concatenate(sampler.map_blocks(block, cfg.n, grid, n_samples, seed,
                                             workers=workers, scheme=scheme), axis=0)
    targets = kernel_eval(cfg, s + t if t_target is None else t_target, pts)
    targets = np.atleast_1d(targets)
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / np.sqrt(vals.shape[0])
    out = [SemigroupResidual(float(m), float(e), float(g), int(vals.shape[0]))
           for m, e, g in zip(mean, se, targets)]
    return out[0] if single else out
