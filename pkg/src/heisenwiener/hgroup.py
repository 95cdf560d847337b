"""Arithmetic and metric structure of the Heisenberg group H^n.

A point is stored as ``2n + 1`` reals laid out as
``(x_1, y_1, ..., x_n, y_n, u)``.  Every function here accepts either a
:class:`GroupPoint` or a float array whose last axis has length ``2n + 1``;
arrays broadcast, so a batch of paths can be multiplied in one call.

The product is

    (z, u)(z', u') = (z + z', u + u' + 2 Im(z . conj(z')))

with ``Im(z . conj(z')) = sum_i (y_i x'_i - x_i y'_i)``.
"""

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Operands live in Heisenberg groups of different dimension."""


@dataclass(frozen=True, eq=False)
class GroupPoint:
    """A point ``(z, u)`` of H^n with ``z`` given as interleaved reals."""

    z: np.ndarray
    u: float

    def __post_init__(self):
        z = np.array(self.z, dtype=float).reshape(-1)
        if z.size == 0 or z.size % 2:
            raise DimensionError("z must hold 2n > 0 reals, got %d" % z.size)
        u = float(self.u)
        if not (np.all(np.isfinite(z)) and np.isfinite(u)):
            raise ValueError("group point has non-finite components")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "u", u)

    @property
    def n(self):
        return self.z.size // 2

    @classmethod
    def identity(cls, n=1):
        return cls(np.zeros(2 * n), 0.0)

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        if a.ndim != 1:
            raise ValueError("expected a single point, got shape %s" % (a.shape,))
        return cls(a[:-1], a[-1])

    @classmethod
    def from_coords(cls, *coords):
        """``GroupPoint.from_coords(x1, y1, ..., u)``."""
        return cls.from_array(np.array(coords, dtype=float))

    def as_array(self):
        return np.append(self.z, self.u)

    def __mul__(self, other):
        return multiply(self, other)

    def __eq__(self, other):
        if not isinstance(other, GroupPoint):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.as_array(), other.as_array())

    def __hash__(self):
        return hash(self.as_array().tobytes())

    def __repr__(self):
        return "GroupPoint(z=%s, u=%r)" % (np.array2string(self.z, separator=", "), self.u)


def _unwrap(a):
    if isinstance(a, GroupPoint):
        return a.as_array(), True
    a = np.asarray(a, dtype=float)
    if a.ndim == 0 or a.shape[-1] < 3 or a.shape[-1] % 2 == 0:
        raise DimensionError("last axis must have length 2n+1, got shape %s" % (a.shape,))
    return a, False


def _wrap(a, as_point):
    return GroupPoint.from_array(a) if as_point else a


def dim(a):
    """Return ``n`` for a point or batch of points in H^n."""
    arr, _ = _unwrap(a)
    return (arr.shape[-1] - 1) // 2


def symplectic(z1, z2):
    """``Im(z1 . conj(z2)) = sum_i (y_i x'_i - x_i y'_i)`` over the last axis."""
    return np.sum(z1[..., 1::2] * z2[..., 0::2] - z1[..., 0::2] * z2[..., 1::2], axis=-1)


def multiply(a, b):
    """Group product ``a . b``."""
    a_arr, pa = _unwrap(a)
    b_arr, pb = _unwrap(b)
    if a_arr.shape[-1] != b_arr.shape[-1]:
        raise DimensionError("cannot multiply H^%d by H^%d" % (dim(a_arr), dim(b_arr)))
    za, zb = a_arr[..., :-1], b_arr[..., :-1]
    u = a_arr[..., -1] + b_arr[..., -1] + 2.0 * symplectic(za, zb)
    out = np.concatenate([za + zb, u[..., None]], axis=-1)
    return _wrap(out, pa and pb)


def inverse(a):
    """Group inverse ``(-z, -u)``."""
    arr, pa = _unwrap(a)
    return _wrap(-arr, pa)


def left_increment(a, b):
    """``a^{-1} . b``; the increment that carries ``a`` to ``b``."""
    return multiply(inverse(a), b)


def homogeneous_norm(a):
    """Koranyi gauge ``(|z|^4 + u^2)^(1/4)``."""
    arr, _ = _unwrap(a)
    r2 = np.sum(arr[..., :-1] ** 2, axis=-1)
    out = np.sqrt(np.sqrt(r2 * r2 + arr[..., -1] ** 2))
    return float(out) if np.ndim(out) == 0 else out


def distance(a, b):
    """Left-invariant distance ``|a^{-1} b|``.

    ``distance(g a, g b) == distance(a, b)`` for every ``g``.
    """
    return homogeneous_norm(left_increment(a, b))


def distance_right(a, b):
    """Right-invariant variant ``|a b^{-1}|``."""
    return homogeneous_norm(multiply(a, inverse(b)))


def dilate(r, a):
    """Parabolic dilation ``(z, u) -> (r z, r^2 u)``; an automorphism for r > 0."""
    if not np.all(np.asarray(r) > 0):
        raise ValueError("dilation factor must be positive")
    arr, pa = _unwrap(a)
    r = np.asarray(r, dtype=float)[..., None]
    scale = np.concatenate([np.broadcast_to(r, arr[..., :-1].shape), r * r], axis=-1)
    return _wrap(arr * scale, pa)


def radial_coords(a):
    """Return ``(|z|, u)`` -- the two invariants the heat kernel depends on."""
    arr, _ = _unwrap(a)
    return np.sqrt(np.sum(arr[..., :-1] ** 2, axis=-1)), arr[..., -1]


def identity(n=1):
    return GroupPoint.identity(n)


def random_points(rng, size, n=1, scale=1.0):
    """Gaussian cloud of points, for property tests and examples."""
    return rng.normal(scale=scale, size=(size, 2 * n + 1))
