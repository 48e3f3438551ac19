import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netsynth.grids import Box, GridSpec, evaluate_on_grid, offsets_by_norm
from netsynth.intervals import Interval, ScaleSchedule


def test_interval_basics():
    Y = Interval(-1.0, 3.0)
    assert Y.length == 4.0 and Y.mid == 1.0
    assert 0.0 in Y and 5.0 not in Y
    assert Y.contains(Interval(0.0, 1.0))
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)


def test_schedule_lengths():
    assert [ScaleSchedule("expanding").length(k) for k in range(4)] == [1, 2, 4, 8]
    assert [ScaleSchedule("contracting").length(k) for k in range(3)] == [1, 0.5, 0.25]
    with pytest.raises(ValueError):
        ScaleSchedule("sideways")
    with pytest.raises(ValueError):
        ScaleSchedule(ratio=1.0)


@given(st.sampled_from(["expanding", "contracting"]), st.lists(st.floats(-3, 3), min_size=2, max_size=8))
def test_schedule_nesting(direction, centres):
    s = ScaleSchedule(direction)
    prev = None
    for k, c in enumerate(centres):
        Y = s.interval(k, c, prev)
        assert Y.length == pytest.approx(s.length(k))
        if prev is not None:
            assert (Y.contains(prev) if direction == "expanding" else prev.contains(Y))
        prev = Y


def test_box_geometry():
    b = Box((0.0, -1.0), (2.0, 1.0))
    assert b.anchor == (1.0, 0.0)
    assert b.diameter == pytest.approx(np.sqrt(8))
    assert b.radius == pytest.approx(np.sqrt(2))
    assert Box((0.0,), (0.0,)).is_point
    with pytest.raises(ValueError):
        Box((1.0,), (0.0,))
    with pytest.raises(ValueError):
        Box((0.0,), (1.0,), anchor=(2.0,))


def test_grid_points_and_chunks():
    g = GridSpec(Box((0.0, 0.0), (1.0, 2.0)), (3, 5))
    pts = g.points()
    assert pts.shape == (15, 2) and g.total == 15
    assert np.allclose(g.spacing, [0.5, 0.5])
    assert np.array_equal(np.concatenate(list(g.chunks(4))), pts)
    vals = evaluate_on_grid(lambda x: x.sum(axis=1), g)
    assert vals.shape == (3, 5, 1)
    assert g.refined().resolution == (5, 9)
    with pytest.raises(ValueError):
        GridSpec(Box((0.0,), (1.0,)), (1,))


def test_offsets_sorted_half_space():
    offs = offsets_by_norm(np.array([1.0, 1.0]), 1.5)
    norms = [n for n, _ in offs]
    assert norms == sorted(norms)
    assert {o for _, o in offs} == {(1, 0), (0, 1), (1, 1), (1, -1)}
