"""Wiener process on H^n: horizontal Brownian motion with its Levy area.

Each substep of length ``h`` draws ``2n`` independent ``N(0, 2h)`` variables
``zeta`` and applies

    x_i += zeta_x_i,  y_i += zeta_y_i,
    u   += 2 sum_i (yhat_i zeta_x_i - xhat_i zeta_y_i)

with ``(xhat, yhat)`` the midpoint of the substep.  The variance ``2h`` makes
the generator ``sum(X_i^2 + Y_i^2)`` with no factor one half, so that
``E|z(t)|^2 = 4nt`` and ``Var u(t) = 16 n t^2``.

The polygonal area misses the area between each substep's chord and the
true path, so ``Var u`` comes out as ``16 n t^2 (1 - 1/N)`` after ``N``
substeps and densities carry an O(1/N) bias.  ``scheme="compensated"`` adds
an independent ``N(0, 16 n h^2)`` to ``u`` on every substep, which restores
the variance exactly and leaves an O(1/N^2) bias in smooth functionals.

Random numbers come from counter-based Philox streams.  Paths are grouped
in blocks of :data:`BLOCK` lanes; block ``b`` of master seed ``s`` owns the
Philox counter range starting at ``(0, 0, 0, b)`` under a key derived from
``s``.  Path ``k`` is therefore a pure function of ``(s, k, grid)`` no matter
how many paths are requested or how many workers run.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import hgroup
from .estimates import mean_estimate, variance_estimate

BLOCK = 512
SCHEMES = ("midpoint", "compensated")


@dataclass(frozen=True)
class RngStreamSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")


def block_generator(master_seed, block):
    """Philox generator for one block of paths."""
    key = np.random.SeedSequence(master_seed).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, block]))


@dataclass(frozen=True, eq=False)
class PathGrid:
    """Recording times ``0 = t_0 < ... < t_m`` and substeps per interval."""

    times: np.ndarray
    substeps_per_interval: int = 1

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        if t.size < 2 or t[0] != 0.0:
            raise ValueError("grid must start at 0 and have at least two times")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid times must be strictly increasing")
        if int(self.substeps_per_interval) < 1:
            raise ValueError("substeps_per_interval must be positive")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "substeps_per_interval", int(self.substeps_per_interval))

    @classmethod
    def uniform(cls, t_end, intervals, substeps_per_interval=1):
        return cls(np.linspace(0.0, t_end, intervals + 1), substeps_per_interval)

    @classmethod
    def dyadic(cls, depth, t_end=1.0, substeps_per_interval=1):
        return cls.uniform(t_end, 2 ** depth, substeps_per_interval)

    @property
    def t_end(self):
        return float(self.times[-1])

    @property
    def n_substeps(self):
        return (self.times.size - 1) * self.substeps_per_interval

    def fine_times(self):
        k = self.substeps_per_interval
        t = self.times
        frac = np.arange(k) / k
        inner = (t[:-1, None] + np.diff(t)[:, None] * frac).ravel()
        return np.append(inner, t[-1])

    def step_sizes(self):
        return np.repeat(np.diff(self.times) / self.substeps_per_interval,
                         self.substeps_per_interval)

    def grid_index(self):
        """Positions of the recording times inside :meth:`fine_times`."""
        return np.arange(self.times.size) * self.substeps_per_interval

    def is_symmetric(self, tol=1e-12):
        t = self.times
        return bool(np.all(np.abs(t + t[::-1] - t[-1]) <= tol * max(1.0, t[-1])))

    def __eq__(self, other):
        return (isinstance(other, PathGrid) and self.substeps_per_interval == other.substeps_per_interval
                and np.array_equal(self.times, other.times))

    def __hash__(self):
        return hash((self.times.tobytes(), self.substeps_per_interval))


@dataclass(frozen=True, eq=False)
class SamplePath:
    """One group-valued path recorded on ``grid.times``.

    ``points`` has shape ``(m + 1, 2n + 1)`` and ``points[0]`` is the
    identity.  ``seed`` is the stream that produced it (None for paths built
    by hand or by a transform).
    """

    grid: PathGrid
    points: np.ndarray
    seed: RngStreamSpec | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != self.grid.times.size:
            raise ValueError("need one point per grid time, got shape %s" % (pts.shape,))
        hgroup.dim(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return hgroup.dim(self.points)

    @property
    def times(self):
        return self.grid.times

    def point(self, i):
        return hgroup.GroupPoint.from_array(self.points[i])

    def __eq__(self, other):
        return (isinstance(other, SamplePath) and self.grid == other.grid
                and np.array_equal(self.points, other.points))

    __hash__ = None


@dataclass(eq=False)
class PathBatch:
    """Many paths on one grid: ``points`` has shape ``(N, m + 1, 2n + 1)``."""

    grid: PathGrid
    points: np.ndarray
    master_seed: int | None = None
    first_path: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return self.points.shape[0]

    def path(self, k):
        seed = None if self.master_seed is None else RngStreamSpec(self.master_seed, self.first_path + k)
        return SamplePath(self.grid, self.points[k], seed)

    def at(self, i):
        """States of every path at recording index ``i``."""
        return self.points[:, i]


# -- simulation core -----------------------------------------------------------

def _block_states(n, grid, master_seed, block, scheme="midpoint"):
    """All substep states of one block, coordinate-major: ``(2n + 1, BLOCK, S + 1)``.

    The midpoint area increment ``symplectic(z_prev + zeta/2, zeta)`` equals
    ``symplectic(z_prev, zeta)`` because the form is alternating, so the
    cheaper expression is used; this also makes each step an exact group
    multiplication by ``(zeta, 0)``.
    """
    rng = block_generator(master_seed, block)
    h = grid.step_sizes()
    s = h.size
    zeta = rng.standard_normal((2 * n, BLOCK, s))
    zeta *= np.sqrt(2.0 * h)
    states = np.empty((2 * n + 1, BLOCK, s + 1))
    states[:, :, 0] = 0.0
    np.cumsum(zeta, axis=-1, out=states[:-1, :, 1:])
    du = np.zeros((BLOCK, s))
    for i in range(n):
        du += states[2 * i + 1, :, :-1] * zeta[2 * i]
        du -= states[2 * i, :, :-1] * zeta[2 * i + 1]
    du *= 2.0
    if scheme == "compensated":
        # drawn after zeta, so the z-coordinates match the midpoint scheme
        du += rng.standard_normal((BLOCK, s)) * (4.0 * np.sqrt(n) * h)
    np.cumsum(du, axis=-1, out=states[-1, :, 1:])
    return states


def _block_plan(n_paths, first_path):
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    last = first_path + n_paths
    plan = []
    for b in range(first_path // BLOCK, (last - 1) // BLOCK + 1):
        lo = max(first_path, b * BLOCK) - b * BLOCK
        hi = min(last, (b + 1) * BLOCK) - b * BLOCK
        plan.append((b, lo, hi))
    return plan


def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise ValueError("unknown scheme %r; expected one of %s" % (scheme, SCHEMES))


def map_blocks(fn, n, grid, n_paths, master_seed, first_path=0, workers=1, scheme="midpoint"):
    """Apply ``fn(fine_times, states, path_ids)`` block by block.

    ``states`` holds every substep state of the block's requested lanes,
    shape ``(S + 1, lanes, 2n + 1)``.  Results come back as a list in path
    order, so any reduction over them is independent of ``workers``.
    """
    _check_scheme(scheme)
    fine = grid.fine_times()
    plan = _block_plan(n_paths, first_path)

    def run(item):
        b, lo, hi = item
        states = _block_states(n, grid, master_seed, b, scheme)[:, lo:hi].transpose(2, 1, 0)
        return fn(fine, states, np.arange(b * BLOCK + lo, b * BLOCK + hi))

    if workers <= 1:
        return [run(item) for item in plan]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, plan))


def sample_paths(n, grid, n_paths, master_seed, first_path=0, workers=1, scheme="midpoint"):
    """Simulate ``n_paths`` paths and record them on the grid times."""
    idx = grid.grid_index()
    parts = map_blocks(lambda fine, s, ids: np.swapaxes(s[idx], 0, 1), n, grid, n_paths,
                       master_seed, first_path, workers, scheme)
    return PathBatch(grid, np.concatenate(parts, axis=0), master_seed, first_path,
                     {"scheme": scheme})


def sample_path(n, grid, rng):
    """The single path with index ``rng.stream_id`` under ``rng.master_seed``."""
    batch = sample_paths(n, grid, 1, rng.master_seed, first_path=rng.stream_id)
    return SamplePath(grid, batch.points[0], rng)


def endpoints(n, t, n_paths, master_seed, substeps, first_path=0, workers=1,
              scheme="midpoint"):
    """States at time ``t`` only, shape ``(N, 2n + 1)``."""
    grid = PathGrid(np.array([0.0, t]), substeps)
    parts = map_blocks(lambda fine, s, ids: s[-1], n, grid, n_paths, master_seed,
                       first_path, workers, scheme)
    return np.concatenate(parts, axis=0)


def coarsen(states, factor):
    """Midpoint-scheme states on every ``factor``-th substep of the same path.

    ``states`` is ``(S + 1, ..., 2n + 1)`` from :func:`map_blocks`.  The
    horizontal part is kept; the area is rebuilt from the coarse polygon,
    which is what the midpoint scheme with ``S / factor`` substeps would
    produce from the same Brownian increments.
    """
    if (states.shape[0] - 1) % factor:
        raise ValueError("substep count is not divisible by the factor")
    z = states[::factor, ..., :-1]
    du = 2.0 * hgroup.symplectic(z[:-1], z[1:] - z[:-1])
    out = np.empty(z.shape[:-1] + (z.shape[-1] + 1,))
    out[..., :-1] = z
    out[0, ..., -1] = 0.0
    np.cumsum(du, axis=0, out=out[1:, ..., -1])
    return out


# -- path transforms -------------------------------------------------------------

def increment(path, i, j):
    """``x(t_i)^{-1} x(t_j)`` as a :class:`GroupPoint`."""
    m = path.points.shape[0]
    if not (0 <= i < m and 0 <= j < m):
        raise IndexError("grid index out of range")
    return hgroup.GroupPoint.from_array(hgroup.left_increment(path.points[i], path.points[j]))


def time_reverse(path):
    """``(T x)(s) = x(t)^{-1} x(t - s)`` on a grid closed under ``s -> t - s``."""
    if not path.grid.is_symmetric():
        raise ValueError("time reversal needs a grid symmetric about its midpoint")
    pts = path.points
    if isinstance(path, PathBatch):
        out = hgroup.left_increment(pts[:, -1:], pts[:, ::-1])
        return PathBatch(path.grid, out, path.master_seed, path.first_path,
                         dict(path.meta, reversed=not path.meta.get("reversed", False)))
    return SamplePath(path.grid, hgroup.left_increment(pts[-1], pts[::-1]), None)


def translate_path(g, path):
    """Pointwise left translation ``(T_g x)(t) = g x(t)``."""
    g_arr = g.as_array() if isinstance(g, hgroup.GroupPoint) else np.asarray(g, dtype=float)
    if g_arr.shape[-1] != path.points.shape[-1]:
        raise hgroup.DimensionError("translation and path live in different groups")
    out = hgroup.multiply(g_arr, path.points)
    if isinstance(path, PathBatch):
        return PathBatch(path.grid, out, path.master_seed, path.first_path, dict(path.meta))
    return SamplePath(path.grid, out, path.seed)


# -- moments -------------------------------------------------------------------

def moment_summary(n, t, n_paths, master_seed, substeps, lambdas=(0.1, 0.25), workers=1):
    """Endpoint moments checked against ``4nt``, ``16nt^2`` and ``sech^n(4 lam t)``."""
    end = endpoints(n, t, n_paths, master_seed, substeps, workers=workers)
    r2 = np.sum(end[:, :-1] ** 2, axis=1)
    u = end[:, -1]
    out = {
        "mean_z": [mean_estimate(end[:, i], master_seed) for i in range(2 * n)],
        "E_abs_z2": mean_estimate(r2, master_seed),
        "var_u": variance_estimate(u, master_seed),
        "E_cos_lam_u": {float(lam): mean_estimate(np.cos(lam * u), master_seed) for lam in lambdas},
    }
    return out
