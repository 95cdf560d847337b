import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from heisenwiener import hgroup
from heisenwiener.hgroup import GroupPoint

coord = st.floats(-50, 50, allow_nan=False)
dyadic = st.integers(-64, 64).map(lambda k: k / 8.0)


def points(n=1, elements=coord):
    return arrays(float, (2 * n + 1,), elements=elements)


def close(a, b, rtol=1e-12, atol=1e-9):
    return np.allclose(a, b, rtol=rtol, atol=atol)


def test_product_formula():
    a = GroupPoint.from_coords(1.0, 2.0, 3.0)
    b = GroupPoint.from_coords(-0.5, 4.0, 1.0)
    # u + u' + 2 (y x' - x y') = 3 + 1 + 2 (2 * -0.5 - 1 * 4)
    assert a * b == GroupPoint.from_coords(0.5, 6.0, -6.0)


def test_noncommutative():
    a = GroupPoint.from_coords(1, 0, 0)
    b = GroupPoint.from_coords(0, 1, 0)
    assert (a * b).u == -2.0 and (b * a).u == 2.0


@given(points(elements=dyadic), points(elements=dyadic), points(elements=dyadic))
def test_associative_exact_on_dyadics(a, b, c):
    left = hgroup.multiply(hgroup.multiply(a, b), c)
    right = hgroup.multiply(a, hgroup.multiply(b, c))
    assert np.array_equal(left, right)


@given(points(2), points(2), points(2))
def test_associative(a, b, c):
    assert close(hgroup.multiply(hgroup.multiply(a, b), c), hgroup.multiply(a, hgroup.multiply(b, c)),
                 atol=1e-8)


@given(points(3))
def test_identity_and_inverse(a):
    e = np.zeros_like(a)
    assert np.array_equal(hgroup.multiply(a, e), a)
    assert np.array_equal(hgroup.multiply(e, a), a)
    assert np.array_equal(hgroup.multiply(a, hgroup.inverse(a)), e + 0.0)


@given(points(), points(), st.floats(0.1, 10))
def test_dilation_is_automorphism(a, b, r):
    lhs = hgroup.dilate(r, hgroup.multiply(a, b))
    rhs = hgroup.multiply(hgroup.dilate(r, a), hgroup.dilate(r, b))
    assert close(lhs, rhs, rtol=1e-10, atol=1e-6)


@given(points(2), st.floats(0.1, 10))
def test_norm_homogeneous(a, r):
    assert np.isclose(hgroup.homogeneous_norm(hgroup.dilate(r, a)), r * hgroup.homogeneous_norm(a),
                      rtol=1e-12)


@given(points(), points(), points())
def test_distance_left_invariant(g, a, b):
    d0 = hgroup.distance(a, b)
    d1 = hgroup.distance(hgroup.multiply(g, a), hgroup.multiply(g, b))
    assert np.isclose(d0, d1, rtol=1e-9, atol=1e-6)


@given(points(), points())
def test_distance_symmetric(a, b):
    assert np.isclose(hgroup.distance(a, b), hgroup.distance(b, a), rtol=1e-12)


def test_distance_right_is_not_left_invariant():
    g = np.array([0.0, 3.0, 0.0])
    a, b = np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0])
    assert hgroup.distance_right(hgroup.multiply(g, a), hgroup.multiply(g, b)) != hgroup.distance_right(a, b)


def test_norm_values():
    assert hgroup.homogeneous_norm(GroupPoint.from_coords(3, 4, 0)) == 5.0
    assert hgroup.homogeneous_norm(np.array([0.0, 0.0, -16.0])) == 4.0


def test_batched_broadcasting():
    rng = np.random.default_rng(0)
    a = hgroup.random_points(rng, 7)
    b = hgroup.random_points(rng, 7)
    batch = hgroup.multiply(a[:, None, :], b[None, :, :])
    assert batch.shape == (7, 7, 3)
    assert np.allclose(batch[2, 5], hgroup.multiply(a[2], b[5]))


def test_dimension_errors():
    with pytest.raises(hgroup.DimensionError):
        hgroup.multiply(np.zeros(3), np.zeros(5))
    with pytest.raises(hgroup.DimensionError):
        hgroup.homogeneous_norm(np.zeros(4))
    with pytest.raises(hgroup.DimensionError):
        GroupPoint(np.zeros(3), 0.0)


def test_dilate_rejects_nonpositive():
    with pytest.raises(ValueError):
        hgroup.dilate(0.0, np.zeros(3))


def test_group_point_value_semantics():
    a = GroupPoint.from_coords(1, 2, 3)
    assert a == GroupPoint(np.array([1.0, 2.0]), 3)
    assert hash(a) == hash(GroupPoint.from_coords(1, 2, 3))
    with pytest.raises(ValueError):
        a.z[0] = 5.0
    with pytest.raises(ValueError):
        GroupPoint.from_coords(np.nan, 0, 0)
    assert GroupPoint.identity(2).n == 2


def test_radial_coords():
    r, u = hgroup.radial_coords(np.array([[3.0, 4.0, -1.0]]))
    assert r[0] == 5.0 and u[0] == -1.0
