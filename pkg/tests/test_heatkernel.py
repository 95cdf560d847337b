import numpy as np
import pytest
from hypothesis import given, strategies as st

from heisenwiener import hgroup, heatkernel as hk

CFG = hk.KernelConfig()

# frozen oracle values; the adaptive QUADPACK route agrees to ~1e-12
ORACLES = [
    (1.0, [0.0, 0.0, 0.0], 0.015625),
    (1.0, [1.0, 0.0, 0.0], 0.009844231993507693),
    (1.0, [0.0, 0.0, 2.0], 0.008905218184271523),
    (0.5, [0.3, -0.4, 0.7], 0.039054188003449564),
    (2.0, [1.5, 0.5, -3.0], 0.0018149908830488624),
]


@pytest.mark.parametrize("t,xi,expected", ORACLES)
def test_frozen_values(t, xi, expected):
    assert hk.kernel_eval(CFG, t, np.array(xi)) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("t,xi,expected", ORACLES)
def test_adaptive_route_agrees(t, xi, expected):
    assert hk.kernel_eval(CFG, t, np.array(xi), method="adaptive") == pytest.approx(expected, rel=1e-9)


def test_origin_closed_form():
    assert hk.origin_value(1) == 1.0 / 64.0
    assert hk.origin_value(2) == pytest.approx(0.0008289319952702884, rel=1e-14)
    cfg2 = hk.KernelConfig(n=2)
    assert hk.kernel_eval(cfg2, 1.0, np.zeros(5)) == pytest.approx(hk.origin_value(2), rel=1e-12)
    with pytest.raises(ValueError):
        hk.origin_value(3)


@given(st.floats(0.05, 5), st.floats(0, 3), st.floats(-6, 6))
def test_dilation_scaling(t, r, u):
    # p_{c^2 t}(c z, c^2 u) = c^{-2n-2} p_t(z, u)
    c = 1.7
    lhs = hk.kernel_radial(CFG, c * c * t, c * r, c * c * u)
    rhs = c ** -4 * hk.kernel_radial(CFG, t, r, u)
    # the cosine integral cancels in the tail; accuracy is relative to the peak
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * (c * c * t) ** -2)


@given(st.floats(0, 3), st.floats(-5, 5))
def test_positive_and_even_in_u(r, u):
    a = hk.kernel_radial(CFG, 1.0, r, u)
    assert a > 0
    assert a == pytest.approx(hk.kernel_radial(CFG, 1.0, r, -u), rel=1e-13)


def test_rotation_invariant_in_z():
    pts = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5], [np.sqrt(0.5), -np.sqrt(0.5), 0.5]])
    vals = hk.kernel_eval(CFG, 0.7, pts)
    assert np.ptp(vals) < 1e-15


def test_heat_equation_finite_difference():
    # d/dt p = (X^2 + Y^2) p with X = d_x + 2y d_u, Y = d_y - 2x d_u
    xi = np.array([0.4, -0.3, 0.5])
    t, h = 0.8, 1e-3
    p = lambda t, q: hk.kernel_eval(CFG, t, q)
    dt = (p(t + h, xi) - p(t - h, xi)) / (2 * h)
    x, y = xi[0], xi[1]
    ex = np.array([1.0, 0.0, 2.0 * y])   # X flows along a straight line
    ey = np.array([0.0, 1.0, -2.0 * x])
    lap = sum((p(t, xi + h * e) - 2 * p(t, xi) + p(t, xi - h * e)) / h ** 2 for e in (ex, ey))
    assert dt == pytest.approx(lap, rel=1e-4)


def test_normalization_and_moments():
    for t in (0.25, 1.0, 3.0):
        assert hk.normalization(CFG, t) == pytest.approx(1.0, abs=1e-9)
    t = 0.6
    ez2 = hk.radial_grid_integral(CFG, t, lambda r, u: r * r)
    eu2 = hk.radial_grid_integral(CFG, t, lambda r, u: u * u)
    assert ez2 == pytest.approx(4 * t, rel=1e-9)
    assert eu2 == pytest.approx(16 * t * t, rel=1e-7)


@pytest.mark.parametrize("lam", [0.1, 0.3, 1.0])
def test_marginal_characteristic_function(lam):
    t = 0.5
    direct = hk.radial_grid_integral(CFG, t, lambda r, u: np.cos(lam * u) + 0 * r)
    assert direct == pytest.approx(hk.marginal_char_u(CFG, t, lam), abs=1e-9)


def test_error_estimate_and_tail_guard():
    val, err = hk.kernel_eval(CFG, 1.0, np.array([1.0, 0.0, 0.0]), return_error=True)
    assert 0 <= err < 1e-12 * val
    bad = hk.KernelConfig(lambda_cutoff=2.0, node_count=200)
    with pytest.raises(hk.KernelConvergenceError):
        hk.kernel_eval(bad, 1.0, np.zeros(3))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        hk.KernelConfig(n=0)
    with pytest.raises(ValueError):
        hk.kernel_eval(CFG, 0.0, np.zeros(3))
    with pytest.raises(hgroup.DimensionError):
        hk.kernel_eval(CFG, 1.0, np.zeros(5))
    with pytest.raises(ValueError):
        hk.kernel_eval(CFG, 1.0, np.zeros(3), method="simpson")


def test_table_matches_direct_evaluation():
    table = hk.kernel_table(CFG)
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(200, 3)) * [0.8, 0.8, 1.5]
    for t in (0.1, 1.0):
        direct = hk.kernel_eval(CFG, t, pts * [np.sqrt(t), np.sqrt(t), t])
        approx = table(t, pts * [np.sqrt(t), np.sqrt(t), t])
        assert np.max(np.abs(approx - direct)) < 1e-6 * t ** -2
    assert table.max_outside < 1e-12


def test_gaussian_bound_certifies_grid():
    fit = hk.default_bound_fit(CFG)
    grid = hk.bound_grid(1)
    # fitted at t = 1; other times agree up to rounding in the scaling
    assert hk.bound_margin(CFG, fit, [1.0], grid) >= 0.0
    assert hk.bound_margin(CFG, fit, [0.3, 4.0], grid) >= -1e-13
    assert fit.M > 0 and 0 < fit.c <= 1
    with pytest.raises(hk.BoundFitError):
        hk.gaussian_bound_fit(CFG, [1.0], grid, M_max=1.0)


def test_truncation_radius_consistent():
    fit = hk.default_bound_fit(CFG)
    R = hk.truncation_radius(fit, 1, 1.0, 1e-6)
    assert hk.bound_tail_mass(fit, 1, 1.0, R) == pytest.approx(1e-6, rel=1e-6)
    assert hk.truncation_radius(fit, 1, 4.0, 1e-6) == pytest.approx(2 * R, rel=1e-9)


def test_norm_tail_monotone_and_bounded():
    tails = [hk.norm_tail(CFG, rho) for rho in (0.0, 1.0, 2.0, 3.0)]
    assert tails[0] == pytest.approx(1.0, abs=1e-6)
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    fit = hk.default_bound_fit(CFG)
    for rho in (2.0, 3.0, 4.0):
        assert hk.norm_tail(CFG, rho) <= hk.bound_tail_mass(fit, 1, 1.0, rho) + 1e-12


def test_bin_probabilities_sum_to_one():
    probs = hk.bin_probabilities(CFG, 1.0, [0, 1, 2, np.inf], [-np.inf, -1, 0, 1, np.inf])
    assert probs.shape == (3, 4)
    assert probs.sum() == pytest.approx(1.0, abs=1e-5)
    assert np.all(probs > 0)


def test_semigroup_batch_and_negative_control():
    pts = np.array([[0.0, 0.0, 0.0], [0.5, -0.2, 0.3]])
    res = hk.semigroup_residual(CFG, 0.5, 0.5, pts, 20000, 11)
    assert isinstance(res, list) and len(res) == 2
    for r in res:
        assert abs(r.zscore) < 4.5
    wrong = hk.semigroup_residual(CFG, 0.5, 0.5, pts[0], 20000, 11, t_target=1.3)
    assert abs(wrong.zscore) > 10
