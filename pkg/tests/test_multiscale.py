import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tubeinc.families import Spacing, TubeFamily, gen_bush, gen_grid_example, gen_well_spaced
from tubeinc.geometry import InvalidInput, Tube, endpoint_chart
from tubeinc.incidence import RichMap, richness_map_fast, richness_map_oracle
from tubeinc.multiscale import (CubeCover, canonical_tube, cell_map, cell_of, containment_slack,
                                dyadic_class, partition_rectangles, pigeonhole_MQ, rescale_cell, thicken, unrescale_cell)


def parallel(delta, ys):
    return TubeFamily([Tube.through((0.0, y), (1.0, y), delta / 2) for y in ys], delta, 1, 2,
                      Spacing("Unstructured"))


def test_dyadic_class():
    assert list(dyadic_class([1, 2, 3, 4, 7, 8, 9])) == [1, 2, 2, 4, 4, 8, 8]


def test_cube_cover_tiles():
    cover = CubeCover(4, 1 / 32, 2)
    assert cover.per_axis == 8 and len(cover) == 64
    k = np.stack(np.meshgrid(np.arange(-1, 34), np.arange(-1, 34), indexing="ij"), -1).reshape(-1, 2)
    cubes = cover.cube_of(k)
    assert cubes.min() == 0 and cubes.max() == 7
    # the interior lattice splits evenly, every ball in exactly one cube
    inner = cubes[np.all((k >= 0) & (k < 32), axis=1)]
    _, counts = np.unique(inner, axis=0, return_counts=True)
    assert len(counts) == 64 and set(counts) == {16}


def test_pigeonhole_parallel():
    f = parallel(1 / 64, [0.2, 0.5, 0.8])
    res = pigeonhole_MQ(f, richness_map_fast(f), 4)
    assert res.M == 1
    assert all(b.multiplicity == 1 for b in res.buckets)
    assert res.report["retained"] == res.report["total"]


def test_pigeonhole_duplicates():
    t = Tube.through((0.1, 0.2), (0.9, 0.7), 1 / 128)
    f = TubeFamily([t] * 3, 1 / 64, 1, 2, Spacing("Unstructured"))
    res = pigeonhole_MQ(f, richness_map_fast(f), 4)
    assert res.M == 2 == dyadic_class(3)


def test_pigeonhole_grid_example():
    f = gen_grid_example(1 / 256, 8, 2)
    res = pigeonhole_MQ(f, richness_map_fast(f), 8)
    rep = res.report
    assert rep["retained"] >= rep["total"] / (4 * math.log2(256) ** 2)
    assert rep["retainedOk"]
    assert rep["retained"] <= rep["total"]


def test_pigeonhole_empty():
    f = parallel(1 / 16, [])
    with pytest.raises(InvalidInput):
        pigeonhole_MQ(f, RichMap(1 / 16, 2, np.empty((0, 2), np.int64), np.empty(0, np.int64)), 2)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10 ** 6), D=st.sampled_from([2, 4, 8]))
def test_pigeonhole_subset_and_product(seed, D):
    f = gen_well_spaced(1 / 64, 8, 2, seed)
    rmap = richness_map_fast(f)
    r = 2
    res = pigeonhole_MQ(f, rmap, D, r=r)
    rep = res.report
    assert 0 <= rep["retained"] <= rep["total"]
    if rep["total"]:
        assert rep["productOk"] == (res.M * res.E >= r / (4 * rep["logFactor"]))
        assert sum(rep["classes"].values()) == rep["total"]


def test_partition_single_cell():
    f = gen_well_spaced(1 / 64, 4, 2, 0)
    parts = partition_rectangles(f, 1)
    assert len(parts) <= 2  # one cell per dominant axis
    assert sum(len(s) for s in parts.values()) == len(f)


def test_partition_well_spaced():
    f = gen_well_spaced(1 / 256, 16, 2, 0)
    parts = partition_rectangles(f, 16)
    assert len(parts) == 256
    assert all(len(s) == 1 for s in parts.values())
    parts = partition_rectangles(f, 4)
    expect = len(f) / 4 ** 2
    assert all(expect / 4 <= len(s) <= 4 * expect for s in parts.values())


def test_partition_too_fine():
    with pytest.raises(InvalidInput):
        partition_rectangles(gen_well_spaced(1 / 64, 4, 2, 0), 8)


def test_partition_preserves_directions():
    f = gen_well_spaced(1 / 128, 8, 2, 2)
    for cell, sub in partition_rectangles(f, 4).items():
        for t in sub.tubes:
            m, a, b = endpoint_chart(t)
            assert m == cell.axis
            assert np.all(np.floor(4 * a + 1e-9).clip(0, 3) == cell.entry)
            assert np.all(np.floor(4 * b + 1e-9).clip(0, 3) == cell.exit)


def test_rescale_identity_at_D1():
    f = gen_well_spaced(1 / 64, 4, 2, 0)
    cell = cell_of(f.tubes[0], 1)
    x = np.random.default_rng(0).uniform(size=(20, 2))
    assert np.allclose(cell_map(x, cell), x)


def test_rescale_aligned_axis():
    delta, D = 1 / 128, 4
    f = TubeFamily([Tube.through((0.125, 0.0), (0.125, 1.0), delta / 2)], delta, 4, 2, Spacing("Unstructured"))
    cell = cell_of(f.tubes[0], D)
    big = rescale_cell(f, cell)
    t = big.tubes[0]
    assert big.delta == D * delta and big.W == 1
    assert np.allclose(t.direction, (0.0, 1.0))
    assert t.radius == pytest.approx(D * delta / 2)


def test_rescale_geometry_and_meta():
    f = gen_well_spaced(1 / 128, 16, 2, 0)
    for cell, sub in list(partition_rectangles(f, 4).items())[:4]:
        big = rescale_cell(sub, cell)
        assert big.meta["delta_tilde"] == 4 / 128 and big.meta["W_tilde"] == 4
        for t in big.tubes:
            assert 0.5 <= t.length <= 2
            assert min(t.anchor) >= -0.1 and max(t.end) <= 1.1


def test_rescale_incidences():
    f = gen_well_spaced(1 / 128, 16, 2, 0)
    cell, sub = next(iter(partition_rectangles(f, 4).items()))
    big = rescale_cell(sub, cell)
    fine = richness_map_oracle(sub).total_incidences()
    coarse = richness_map_oracle(big).total_incidences()
    # magnifying by D cuts each tube's ball count by D
    ratio = fine / (4 * coarse)
    assert 1 / 4 <= ratio <= 4


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10 ** 6), dim=st.sampled_from([2, 3]), D=st.sampled_from([1, 2, 4]))
def test_rescale_roundtrip(seed, dim, D):
    f = gen_well_spaced(1 / 64, 4, dim, seed)
    for cell, sub in partition_rectangles(f, D).items():
        back = unrescale_cell(rescale_cell(sub, cell), cell)
        for a, b in zip(sub.tubes, back.tubes):
            assert np.allclose(a.anchor, b.anchor, atol=1e-9)
            assert np.allclose(a.direction, b.direction, atol=1e-9)
            assert a.length == pytest.approx(b.length, abs=1e-9)
            assert a.radius == pytest.approx(b.radius, abs=1e-12)


def test_thicken_identity_scale():
    f = gen_well_spaced(1 / 64, 8, 2, 0)
    res = thicken(f, f.delta)
    assert res.N == 1 and len(res.family) == len(f)


def test_thicken_bush():
    f = gen_bush(1 / 64)
    res = thicken(f, 4 / 64)
    assert res.N == 4


def test_thicken_well_spaced():
    f = gen_well_spaced(1 / 128, 8, 2, 3)
    res = thicken(f, 1 / 8)
    assert res.N == 1
    assert len(res.family) == len(f)


def test_thicken_rejects_small_rho():
    with pytest.raises(InvalidInput):
        thicken(gen_bush(1 / 32), 1 / 64)


def test_thicken_ball_subset():
    f = gen_bush(1 / 32)
    rmap = richness_map_fast(f)
    top = rmap.index[rmap.counts == rmap.max_count()]
    res = thicken(f, 1 / 8, balls=top)
    assert res.report["total"] == rmap.max_count() * len(top)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10 ** 6), dim=st.sampled_from([2, 3]))
def test_thicken_containment(seed, dim):
    delta = 1 / 64
    f = gen_well_spaced(delta, 4, dim, seed)
    # in 3D the snapped axis drifts up to one full rho-cell, so rho = delta is too thin
    rho = 2 * delta
    res = thicken(f, rho)
    for t, key in zip(f.tubes, res.assignment):
        assert containment_slack(t, canonical_tube(key, rho, dim)) <= 2
    assert len(res.family) <= len(f) / res.N * 4
