import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tubeinc.geometry import (InvalidInput, LatticeBall, Tube, all_pairs_essentially_distinct,
                              endpoint_chart, essentially_distinct, lattice_range, overlap_fraction,
                              point_segment_distance, segment_dist2, slab_candidates, tube_ball_intersects)


def horizontal(delta=0.1):
    return Tube((0.0, 0.0), (1.0, 0.0), 1.0, delta / 2)


def test_tube_validation():
    with pytest.raises(InvalidInput):
        Tube((0.0, 0.0), (1.0, 1.0))
    with pytest.raises(InvalidInput):
        Tube((0.0, 0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0))
    with pytest.raises(InvalidInput):
        Tube((0.0, 0.0), (1.0, 0.0), length=0.0)
    t = Tube.through((0.1, 0.2), (0.7, 0.9), 0.01)
    assert math.isclose(math.hypot(*t.direction), 1.0, abs_tol=1e-12)
    assert np.allclose(t.end, (0.7, 0.9))


def test_ball_on_axis_hits():
    assert tube_ball_intersects(horizontal(), LatticeBall((5, 0), 0.1))


def test_ball_far_off_axis_misses():
    assert not tube_ball_intersects(horizontal(), LatticeBall((5, 3), 0.1))


def test_diagonal_tube_hand_distance():
    t = Tube((0.0, 0.0), (1 / math.sqrt(2), 1 / math.sqrt(2)), 1.0, 0.05)
    d = point_segment_distance((0.1, 0.0), t)
    assert d == pytest.approx(0.1 / math.sqrt(2), abs=1e-12)
    c = np.array([[0.1, 0.0]])
    assert segment_dist2(c, t.anchor, t.direction, t.length)[0] <= 0.1 ** 2


def test_dimension_mismatch():
    with pytest.raises(InvalidInput):
        tube_ball_intersects(horizontal(), LatticeBall((1, 2, 3), 0.1))


def test_lattice_range_has_margin():
    assert lattice_range(1 / 64) == (-1, 65)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_incidence_invariant_under_rigid_motion(seed):
    rng = np.random.default_rng(seed)
    p0, p1 = rng.uniform(0, 1, (2, 2))
    c = rng.uniform(-0.2, 1.2, 2)
    delta = 0.05
    t = Tube.through(p0, p1, delta / 2)
    d0 = point_segment_distance(c, t)
    th = rng.uniform(0, 2 * math.pi)
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    shift = rng.uniform(-1, 1, 2)
    t2 = Tube.through(R @ p0 + shift, R @ p1 + shift, delta / 2)
    d1 = point_segment_distance(R @ c + shift, t2)
    assert d1 == pytest.approx(d0, abs=1e-9)


def test_overlap_identical():
    t = Tube.through((0.1, 0.2), (0.9, 0.7), 0.025)
    assert overlap_fraction(t, t) == pytest.approx(1.0, abs=0.05)
    assert not essentially_distinct(t, t)


def test_overlap_parallel_disjoint():
    delta = 0.05
    a = Tube.through((0.0, 0.2), (1.0, 0.2), delta / 2)
    b = Tube.through((0.0, 0.2 + 10 * delta), (1.0, 0.2 + 10 * delta), delta / 2)
    assert overlap_fraction(a, b) == 0.0


def test_overlap_perpendicular_is_about_delta():
    delta = 0.05
    a = Tube.through((0.5, 0.0), (0.5, 1.0), delta / 2)
    b = Tube.through((0.0, 0.5), (1.0, 0.5), delta / 2)
    f = overlap_fraction(a, b)
    assert delta / 2 <= f <= 2 * delta
    assert essentially_distinct(a, b)


def test_parallel_quarter_offset_not_distinct():
    delta = 0.05
    a = Tube.through((0.0, 0.5), (1.0, 0.5), delta / 2)
    b = Tube.through((0.0, 0.5 + delta / 4), (1.0, 0.5 + delta / 4), delta / 2)
    assert overlap_fraction(a, b) == pytest.approx(0.75, abs=0.05)
    assert not essentially_distinct(a, b)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_overlap_is_symmetric_for_equal_lengths(seed):
    rng = np.random.default_rng(seed)
    delta = 0.05
    p = rng.uniform(0.2, 0.8, 2)
    th1, th2 = rng.uniform(0, math.pi, 2)
    d1 = np.array([math.cos(th1), math.sin(th1)])
    d2 = np.array([math.cos(th2), math.sin(th2)])
    q = p + rng.uniform(-delta, delta, 2)
    a = Tube.through(p - d1 / 2, p + d1 / 2, delta / 2)
    b = Tube.through(q - d2 / 2, q + d2 / 2, delta / 2)
    lhs = overlap_fraction(a, b) * a.volume()
    rhs = overlap_fraction(b, a) * b.volume()
    assert abs(lhs - rhs) <= 0.05 * a.volume()


def test_overlap_3d_crossing():
    delta = 0.05
    a = Tube.through((0.5, 0.5, 0.0), (0.5, 0.5, 1.0), delta / 2)
    b = Tube.through((0.0, 0.5, 0.5), (1.0, 0.5, 0.5), delta / 2)
    assert overlap_fraction(a, b) < 0.1


def test_all_pairs_flags_duplicates():
    t = Tube.through((0.1, 0.2), (0.9, 0.7), 0.01)
    u = Tube.through((0.1, 0.8), (0.9, 0.1), 0.01)
    ok, bad = all_pairs_essentially_distinct([t, u, t])
    assert not ok and bad == [(0, 2)]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), dim=st.sampled_from([2, 3]))
def test_slab_candidates_cover_the_tube(seed, dim):
    rng = np.random.default_rng(seed)
    delta = 1 / 32
    p0, p1 = rng.uniform(0, 1, (2, dim))
    if np.linalg.norm(p1 - p0) < 1e-3:
        return
    t = Tube.through(p0, p1, delta / 2)
    cand = slab_candidates(t.anchor, t.direction, t.length, 2 * t.radius, delta)
    assert len(np.unique(cand, axis=0)) == len(cand)
    axes = [np.arange(-2, 35)] * dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim)
    near = grid[segment_dist2(grid * delta, t.anchor, t.direction, t.length) <= delta ** 2]
    have = {tuple(r) for r in cand}
    assert all(tuple(r) in have for r in near)


def test_endpoint_chart_vertical_tube():
    t = Tube.through((0.3, 0.0), (0.6, 1.0), 0.01)
    m, a, b = endpoint_chart(t)
    assert m == 1
    assert a == pytest.approx([0.3]) and b == pytest.approx([0.6])
