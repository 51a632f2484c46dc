from __future__ import annotations

import math
import pickle

import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmverify.errors import InvalidInputError
from swarmverify.geometry import (
    HyperRectangle,
    Interval,
    LinearConstraintSet,
    bloat,
    interval_hull,
    min_distance,
    possibly_intersects,
)

from strategies import boxes, coord, point_in


def box(*axes):
    return HyperRectangle.from_intervals(axes)


class TestInterval:
    def test_valid(self):
        iv = Interval(-1.0, 2.0)
        assert iv.width == 3.0
        assert iv.contains(0.0) and not iv.contains(2.5)

    @pytest.mark.parametrize("lo,hi", [(1.0, 0.0), (math.nan, 1.0), (0.0, math.inf)])
    def test_invalid(self, lo, hi):
        with pytest.raises(InvalidInputError):
            Interval(lo, hi)


class TestHyperRectangle:
    def test_rejects_empty_and_mismatched(self):
        with pytest.raises(InvalidInputError):
            HyperRectangle([], [])
        with pytest.raises(InvalidInputError):
            HyperRectangle([0.0], [1.0, 2.0])

    def test_rejects_inverted_axis(self):
        with pytest.raises(InvalidInputError):
            HyperRectangle([0.0, 1.0], [1.0, 0.5])

    def test_immutable(self):
        b = box((0, 1))
        with pytest.raises(AttributeError):
            b.lo = (5.0,)

    def test_dims_and_intervals(self):
        b = box((0, 1), Interval(2, 3))
        assert b.dim == 2
        assert b.dims == [Interval(0, 1), Interval(2, 3)]
        assert b.widths() == (1.0, 1.0)

    def test_pickle_roundtrip(self):
        b = box((0, 1), (2, 3))
        assert pickle.loads(pickle.dumps(b)) == b

    def test_contains(self):
        outer = box((0, 10), (0, 10))
        assert outer.contains(box((1, 2), (3, 4)))
        assert not outer.contains(box((1, 11), (3, 4)))
        assert outer.contains_point((10.0, 0.0))
        assert not outer.contains_point((10.1, 0.0))


class TestIntervalHull:
    def test_single(self):
        assert interval_hull([box((0, 1))]) == box((0, 1))

    def test_disjoint_1d(self):
        assert interval_hull([box((0, 1)), box((2, 3))]) == box((0, 3))

    def test_2d(self):
        assert interval_hull([box((-1, 0), (0, 2)), box((0, 1), (1, 3))]) == box((-1, 1), (0, 3))

    def test_errors(self):
        with pytest.raises(InvalidInputError):
            interval_hull([])
        with pytest.raises(InvalidInputError):
            interval_hull([box((0, 1)), box((0, 1), (0, 1))])

    @given(st.lists(boxes(dim=3), min_size=1, max_size=6), st.randoms())
    def test_properties(self, rects, rnd):
        h = interval_hull(rects)
        assert all(h.contains(r) for r in rects)
        shuffled = list(rects)
        rnd.shuffle(shuffled)
        assert interval_hull(shuffled) == h
        assert interval_hull([h, *rects]) == h
        assert interval_hull([h]) == h


class TestMinDistance:
    def test_single_axis_gap(self):
        assert min_distance(box((0, 1), (0, 1)), box((3, 5), (0, 1)), (0, 1)) == 2.0

    def test_overlap(self):
        assert min_distance(box((0, 2), (0, 2)), box((1, 3), (1, 3)), (0, 1)) == 0.0

    def test_diagonal(self):
        assert min_distance(box((0, 1), (0, 1)), box((2, 3), (2, 3)), (0, 1)) == pytest.approx(1.41421, abs=1e-5)

    def test_default_axes_skip_velocity(self):
        a = box((0, 1), (0, 0), (0, 1), (0, 0))
        b = box((0, 1), (100, 200), (0, 1), (100, 200))
        assert min_distance(a, b) == 0.0

    def test_axis_out_of_range(self):
        with pytest.raises(InvalidInputError):
            min_distance(box((0, 1)), box((0, 1)), (1,))

    @given(boxes(dim=2), boxes(dim=2), st.lists(st.floats(0, 20), min_size=2, max_size=2))
    def test_symmetric_and_monotone(self, a, b, eps):
        d = min_distance(a, b, (0, 1))
        assert d == min_distance(b, a, (0, 1))
        assert min_distance(bloat(a, eps), b, (0, 1)) <= d + 1e-9

    @given(boxes(dim=2), boxes(dim=2))
    def test_zero_iff_overlap(self, a, b):
        overlap = all(a.lo[k] <= b.hi[k] and b.lo[k] <= a.hi[k] for k in (0, 1))
        assert (min_distance(a, b, (0, 1)) == 0.0) == overlap

    @given(st.data())
    def test_lower_bounds_point_distance(self, data):
        a = data.draw(boxes(dim=2))
        b = data.draw(boxes(dim=2))
        p = data.draw(point_in(a))
        q = data.draw(point_in(b))
        assert min_distance(a, b, (0, 1)) <= math.dist(p, q) + 1e-9


class TestPossiblyIntersects:
    def test_provably_disjoint(self):
        assert not possibly_intersects(box((0, 1)), LinearConstraintSet([((1.0,), -0.5)]))

    def test_may_intersect(self):
        assert possibly_intersects(box((0, 1)), LinearConstraintSet([((1.0,), 0.5)]))

    def test_two_rows(self):
        rows = LinearConstraintSet([((1.0, 0.0), 2.0), ((0.0, -1.0), -0.5)])
        assert possibly_intersects(box((0, 1), (0, 1)), rows)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            possibly_intersects(box((0, 1), (0, 1)), LinearConstraintSet([((1.0,), 0.0)]))

    def test_constraint_set_validation(self):
        with pytest.raises(InvalidInputError):
            LinearConstraintSet([])
        with pytest.raises(InvalidInputError):
            LinearConstraintSet([((1.0,), 0.0), ((1.0, 2.0), 0.0)])

    @given(
        st.data(),
        st.lists(st.tuples(st.lists(st.floats(-5, 5), min_size=3, max_size=3), coord), min_size=1, max_size=4),
    )
    def test_never_misses_a_satisfying_point(self, data, rows):
        b = data.draw(boxes(dim=3))
        cs = LinearConstraintSet(rows)
        for _ in range(20):
            p = data.draw(point_in(b))
            if cs.satisfied_by(p):
                assert possibly_intersects(b, cs)


class TestBloat:
    def test_point(self):
        assert bloat(box((0, 0), (0, 0)), (1, 1)) == box((-1, 1), (-1, 1))

    def test_zero(self):
        b = box((0, 3), (-2, 5))
        assert bloat(b, (0, 0)) == b

    def test_1d(self):
        assert bloat(box((1, 2)), (0.5,)) == box((0.5, 2.5))

    def test_negative(self):
        with pytest.raises(InvalidInputError):
            bloat(box((0, 1)), (-0.1,))

    @given(boxes(dim=3), st.lists(st.floats(0, 10), min_size=3, max_size=3))
    def test_contains_original(self, b, eps):
        assert bloat(b, eps).contains(b)
