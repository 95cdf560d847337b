import numpy as np
import pytest
from hypothesis import given, strategies as st

from heisenwiener import feynmankac as fk, heatkernel as hk, hgroup, sampler
from heisenwiener.feynmankac import InitialData, Potential

XI = np.array([0.2, 0.1, -0.3])
BUMP = InitialData.gaussian_bump([0.3, -0.2, 0.4], 0.7)


def test_trivial_solution_is_exact():
    est = fk.fk_solve(1.0, XI, InitialData.constant(2.5), Potential.constant(0.0), 1000, 1, 8)
    assert est.value == 2.5 and est.stderr == 0.0


@given(st.floats(0, 3), st.floats(0.1, 2))
def test_constant_potential_factorizes(c, t):
    # the trapezoid integral of a constant is exact, so this holds path by path
    free = fk.fk_solve(t, XI, BUMP, Potential.constant(0.0), 600, 3, 4)
    damped = fk.fk_solve(t, XI, BUMP, Potential.constant(c), 600, 3, 4)
    assert damped.value == pytest.approx(np.exp(-c * t) * free.value, rel=1e-13)


def test_monotone_in_potential():
    vals = [fk.fk_solve(0.5, XI, BUMP, Potential.quadratic_radial(a), 3000, 5, 16).value
            for a in (0.0, 0.5, 2.0)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_sup_bound_respected():
    V = Potential.quadratic_radial(1.0, 0.2)
    est = fk.fk_solve(1.0, XI, BUMP, V, 2000, 2, 16)
    assert 0 < est.value <= BUMP.sup_bound * np.exp(-V.lower_bound * 1.0)


def test_free_solution_matches_heat_reference():
    ref = fk.heat_reference(0.6, XI, BUMP)
    est = fk.fk_solve(0.6, XI, BUMP, Potential.constant(0.0), 40000, 8, 32)
    assert abs(est.zscore(ref)) < 4.5


def test_heat_reference_limits():
    assert fk.heat_reference(1.0, XI, InitialData.constant(1.0)) == pytest.approx(1.0, abs=1e-9)
    assert fk.heat_reference(1e-3, XI, BUMP) == pytest.approx(float(BUMP(XI)), rel=5e-3)
    with pytest.raises(ValueError):
        fk.heat_reference(1.0, np.zeros(5), BUMP)


def test_potential_and_initial_data_validation():
    with pytest.raises(ValueError):
        Potential.quadratic_radial(-1.0)
    with pytest.raises(ValueError):
        Potential("cubic")
    with pytest.raises(ValueError):
        InitialData.gaussian_bump(XI, 0.0)
    with pytest.raises(ValueError):
        Potential.tabulated([np.arange(3.0)] * 2, np.zeros((3, 3)))


def test_tabulated_potential_interpolates_and_clamps():
    axes = [np.linspace(-1, 1, 3)] * 3
    X, Y, U = np.meshgrid(*axes, indexing="ij")
    V = Potential.tabulated(axes, X + 2 * Y + 3 * U + 10)
    assert V(np.array([0.5, -0.5, 0.25])) == pytest.approx(10 + 0.5 - 1 + 0.75)
    assert V(np.array([5.0, 0.0, -9.0])) == pytest.approx(10 + 1 - 3)
    assert V.lower_bound == 4.0
    with pytest.raises(hgroup.DimensionError):
        V(np.zeros(5))


def test_path_integral_trapezoid():
    V = Potential.quadratic_radial(1.0)
    times = np.linspace(0, 1, 3)
    pts = np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0]])[:, None, :]
    # 0.5 * (0 + 1) / 2 + 0.5 * (1 + 4) / 2
    assert V.path_integral(times, pts)[-1, 0] == pytest.approx(1.5)
    path = sampler.SamplePath(sampler.PathGrid(times), pts[:, 0])
    assert fk.weight_integral(path, V) == pytest.approx(1.5)
    assert fk.weight_integral(path, V, base=np.array([-1.0, 0, 0])) == pytest.approx(0.5)


def test_density_mass_and_reversal_law():
    V = Potential.quadratic_radial(0.5)
    edges = [np.linspace(0, 6, 13), np.linspace(-20, 20, 41)]
    fwd = fk.fk_kernel_density(1.0, V, edges, 20000, 4, substeps=16)
    rev = fk.fk_kernel_density(1.0, V, edges, 20000, 4, substeps=16, reverse=True)
    total = fk.fk_solve(1.0, np.zeros(3), InitialData.constant(1.0), V, 20000, 4, 16)
    assert fwd.total_mass == pytest.approx(total.value, rel=1e-3)
    assert rev.total_mass == pytest.approx(fwd.total_mass, abs=4 * total.stderr + 0.01)
    assert fwd.empty_bins > 0 and np.isnan(fwd.density[fwd.counts == 0]).all()


def test_free_density_matches_kernel():
    edges = [np.array([0.0, 0.4, 0.8]), np.array([-0.4, 0.0, 0.4])]
    d = fk.fk_kernel_density(1.0, Potential.constant(0.0), edges, 60000, 9, substeps=16)
    probs = hk.bin_probabilities(hk.KernelConfig(), 1.0, *edges)
    assert np.allclose(d.mass, probs, atol=5 * np.sqrt(probs / 60000))
    dens, se = d.at([0.1, 0.0, 0.1])
    assert dens == pytest.approx(0.015625, rel=0.12)
    with pytest.raises(ValueError):
        d.bin_of([5.0, 0.0, 0.0])
    assert d.integrate(lambda c: np.ones(len(c))) == pytest.approx(d.total_mass)


def test_cartesian_density_shape():
    edges = [np.linspace(-2, 2, 5)] * 2 + [np.linspace(-4, 4, 5)]
    d = fk.fk_kernel_density(0.5, Potential.constant(0.0), edges, 2000, 1, substeps=4)
    assert d.mode == "cartesian" and d.mass.shape == (4, 4, 4)
    with pytest.raises(ValueError):
        fk.fk_kernel_density(0.5, Potential.constant(0.0), [[0, 1], [1, 0]], 10, 1)


def test_smoothed_density_free_case():
    h = 0.05
    est = fk.smoothed_density(0.5, XI, Potential.constant(0.0), h, 20000, 6)
    exact = hk.kernel_eval(hk.KernelConfig(), 0.5 + h, XI)
    assert abs(est.zscore(exact)) < 4.5


def test_identity_checks():
    V = Potential.quadratic_radial(0.5)
    G = fk.PathFunctional("fk_weight", 0.5, potential=V)
    m = fk.markov_check(0.5, 1.0, XI, G, 6000, 3)
    assert abs(m.zscore) < 4.5
    d = fk.duhamel_residual(0.6, XI, V, 6000, 3, tau_nodes=8)
    assert abs(d.zscore) < 4.5
    same = fk.symmetry_check(0.5, XI, XI, V, 500, 3)
    assert same.diff.value == 0.0 and same.zscore == 0.0
    with pytest.raises(ValueError):
        fk.markov_check(1.0, 0.5, XI, G, 10, 1)


def test_path_functional_validation():
    with pytest.raises(ValueError):
        fk.PathFunctional("fk_weight", 0.5)
    with pytest.raises(ValueError):
        fk.PathFunctional("maximum", 0.5)


def test_grid_through_hits_times():
    g = fk.grid_through([0.3, 0.75], 0.1)
    assert 0.3 in g.times and 0.75 in g.times
    assert np.diff(g.times).max() <= 0.1 + 1e-12


@pytest.mark.parametrize("direction", [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
def test_solution_decays_along_a_ray(direction):
    # global decay at infinity cannot be tested; a finite ray is checked instead
    f = InitialData.gaussian_bump([0.0, 0.0, 0.0], 0.7)
    V = Potential.quadratic_radial(0.5)
    ray = [s * np.asarray(direction) for s in (0.0, 2.0, 4.0, 8.0)]
    vals = [fk.fk_solve(0.5, xi, f, V, 4000, 12, 16).value for xi in ray]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3 * vals[0]
