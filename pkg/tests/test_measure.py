import numpy as np
import pytest
from hypothesis import given, strategies as st

from heisenwiener import measure, sampler
from heisenwiener.measure import CylinderSet, HolderSpec

INF = np.inf


def box(x=(-INF, INF), y=(-INF, INF), u=(-INF, INF)):
    return [list(x), list(y), list(u)]


def test_cylinder_validation():
    with pytest.raises(ValueError):
        CylinderSet([0.0], [box()])
    with pytest.raises(ValueError):
        CylinderSet([0.5, 0.4], [box(), box()])
    with pytest.raises(ValueError):
        CylinderSet([0.5], [box(x=(1, 0))])
    with pytest.raises(ValueError):
        CylinderSet([0.5], np.zeros((1, 2, 2)))


def test_full_box_has_measure_one():
    I = CylinderSet([0.3, 1.0], [box(), box()])
    assert measure.cylinder_measure_quadrature(I).value == pytest.approx(1.0, abs=1e-5)


def test_quadrature_matches_kernel_bins():
    from heisenwiener import heatkernel as hk
    I = CylinderSet.single(1.0, box(u=(0.0, INF)))
    assert measure.cylinder_measure_quadrature(I).value == pytest.approx(0.5, abs=3e-4)
    band = measure.cylinder_measure_quadrature(CylinderSet.single(1.0, box(u=(5, 6)))).value
    ref = hk.bin_probabilities(hk.KernelConfig(), 1.0, [0, INF], [5, 6])[0, 0]
    assert band == pytest.approx(ref, abs=3e-4)


def test_insert_slice_is_pathwise_identity():
    I = CylinderSet([0.4, 1.0], [box(x=(-1, 1)), box(u=(-2, 2))])
    J = measure.insert_slice(I, 0.7)
    assert J.m == 3
    grid = sampler.PathGrid(np.array([0.0, 0.4, 0.7, 1.0]), 4)
    batch = sampler.sample_paths(1, grid, 2000, 6)
    hits_i = I.contains(batch.points[:, [1, 3]])
    hits_j = J.contains(batch.points[:, 1:])
    assert np.array_equal(hits_i, hits_j)
    with pytest.raises(ValueError):
        measure.insert_slice(I, 0.4)
    with pytest.raises(ValueError):
        measure.insert_slice(I, -1.0)


def test_quadrature_insertion_and_additivity():
    I = CylinderSet([0.5, 1.0], [box(x=(-1, 1), y=(-1, 1)), box(u=(-1, 2))])
    a = measure.cylinder_measure_quadrature(I).value
    b = measure.cylinder_measure_quadrature(measure.insert_slice(I, 0.75)).value
    assert a == pytest.approx(b, abs=1e-3)
    lo = CylinderSet([0.5, 1.0], [box(x=(-1, 0), y=(-1, 1)), box(u=(-1, 2))])
    hi = CylinderSet([0.5, 1.0], [box(x=(0, 1), y=(-1, 1)), box(u=(-1, 2))])
    split = sum(measure.cylinder_measure_quadrature(c).value for c in (lo, hi))
    assert a == pytest.approx(split, abs=5e-4)


def test_quadrature_size_limits():
    with pytest.raises(measure.CylinderSizeError):
        measure.cylinder_measure_quadrature(CylinderSet([0.1, 0.2, 0.3, 0.4], [box()] * 4))
    with pytest.raises(measure.CylinderSizeError):
        measure.cylinder_measure_quadrature(CylinderSet.single(1.0, CylinderSet.full_box(2)))


def test_mc_agrees_with_quadrature_and_is_monotone():
    small = CylinderSet([0.5, 1.0], [box(x=(-0.5, 0.5)), box(u=(-1, 1))])
    big = CylinderSet([0.5, 1.0], [box(x=(-1, 1)), box(u=(-2, 2))])
    q = measure.cylinder_measure_quadrature(small).value
    e_small = measure.cylinder_measure_mc(small, 30000, 4, substeps=32)
    e_big = measure.cylinder_measure_mc(big, 30000, 4, substeps=32)
    assert abs(e_small.zscore(q)) < 4.5
    assert e_small.value <= e_big.value
    assert e_small.n_paths == 30000


@given(st.integers(1, 6).flatmap(lambda d: st.tuples(st.just(d), st.integers(0, 2 ** d - 1)))
       .flatmap(lambda p: st.tuples(st.just(p[0]), st.just(p[1]), st.integers(p[1] + 1, 2 ** p[0]))))
def test_chain_intervals_tile_the_pair(args):
    depth, i1, i2 = args
    pieces = measure.chain_intervals(i1, i2, depth)
    N = 2 ** depth
    pos = i1
    for lvl, k in pieces:
        size = N >> lvl
        assert k * size == pos
        pos += size
    assert pos == i2
    # at most two pieces per level
    levels = [lvl for lvl, _ in pieces]
    assert all(levels.count(l) <= 2 for l in set(levels))


@pytest.mark.parametrize("direction", ["vertical", "horizontal"])
def test_power_path_is_tight(direction):
    spec = HolderSpec(a=1.3, r=0.3, depth=8)
    cert = measure.dyadic_to_holder(measure.power_path(spec, direction=direction), spec)
    assert cert.hypothesis_holds
    assert cert.hypothesis_ratio == pytest.approx(1.0, rel=1e-12)
    assert cert.conclusion_holds
    assert cert.max_ratio <= cert.chain_ratio * (1 + 1e-12) <= cert.constant * (1 + 1e-12)


def test_holder_conclusion_on_simulated_paths():
    spec = HolderSpec(a=6.0, r=0.3, depth=8)
    batch = sampler.sample_paths(1, sampler.PathGrid.dyadic(8), 40, 2)
    for k in range(batch.n_paths):
        cert = measure.dyadic_to_holder(batch.path(k), spec)
        if cert.hypothesis_holds:
            assert cert.conclusion_holds


def test_holder_spec_validation():
    for bad in (dict(a=0, r=0.2, depth=3), dict(a=1, r=0.5, depth=3), dict(a=1, r=0.2, depth=0)):
        with pytest.raises(ValueError):
            HolderSpec(**bad)
    with pytest.raises(ValueError):
        measure.dyadic_to_holder(sampler.SamplePath(sampler.PathGrid.uniform(1.0, 3), np.zeros((4, 3))),
                                 HolderSpec(1.0, 0.2, 1))


def test_holder_tail_monotone_in_a():
    levels = measure.holder_levels(0.3, 6, 3000, 5)
    tails = [measure.holder_tail(HolderSpec(a, 0.3, 6), 0, 0, levels=levels).value
             for a in (1.0, 2.0, 4.0, 8.0)]
    assert all(x >= y for x, y in zip(tails, tails[1:]))
    assert tails[0] > 0.9 and tails[-1] == 0.0
    assert measure.holder_union_bound(HolderSpec(4.0, 0.3, 6)) >= tails[2]
