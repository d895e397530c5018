import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exceptions import EmptyPinSet, GeometryError, OutOfGrid
from models.geometry import GcellGrid, Point, Rect, ViaInstance, WireSegment
from services.geom_service import bounding_box, cells_touching, clip_segment, hpwl, overlap_area, rasterize_segment
from services.steiner_service import estimate_rsmt, rmst_length

coords = st.integers(min_value=-10_000, max_value=10_000)
points = st.lists(st.builds(Point, coords, coords), min_size=1, max_size=12)


def test_hpwl_of_two_points():
    assert hpwl([Point(0, 0), Point(30, 40)]) == 70


def test_hpwl_single_point_is_zero():
    assert hpwl([Point(5, 5)]) == 0


def test_hpwl_empty_raises():
    with pytest.raises(EmptyPinSet):
        hpwl([])


def test_bounding_box():
    box = bounding_box([Point(3, 9), Point(-1, 4), Point(7, 2)])
    assert box.as_tuple() == (-1, 2, 7, 9)


def test_diagonal_segment_rejected():
    with pytest.raises(GeometryError):
        WireSegment(0, 0, 10, 10, 1)


def test_via_layers_must_increase():
    with pytest.raises(GeometryError):
        ViaInstance(0, 0, 2, 2)


def test_non_integer_coordinate_rejected():
    with pytest.raises(GeometryError):
        Point(1.5, 0)


def test_inverted_rect_rejected():
    with pytest.raises(GeometryError):
        Rect(Point(10, 0), Point(0, 10))


def test_overlap_area():
    a = Rect(Point(0, 0), Point(10, 10))
    b = Rect(Point(5, 5), Point(20, 20))
    assert overlap_area(a, b) == 25
    assert overlap_area(a, Rect(Point(10, 0), Point(20, 10))) == 0


def test_grid_upper_edge_maps_to_last_cell():
    grid = GcellGrid(Point(0, 0), 10, 10, 3, 3)
    assert grid.column_of(30) == 2
    assert grid.row_of(0) == 0
    assert grid.index(2, 1) == 5
    assert grid.unindex(5) == (2, 1)


def test_partial_grid():
    grid = GcellGrid.covering(Rect(Point(0, 0), Point(25, 10)), 10, 10)
    assert (grid.nx, grid.ny) == (3, 1)
    assert grid.partial_x and not grid.partial_y
    assert grid.cell_rect(2, 0).as_tuple() == (20, 0, 25, 10)


def test_rasterize_splits_at_cell_boundaries():
    grid = GcellGrid(Point(0, 0), 10, 10, 4, 1)
    parts = rasterize_segment(WireSegment(5, 3, 32, 3, 1), grid)
    assert parts == [(0, 5), (1, 10), (2, 10), (3, 2)]


def test_rasterize_zero_length_segment():
    grid = GcellGrid(Point(0, 0), 10, 10, 2, 2)
    assert rasterize_segment(WireSegment(15, 15, 15, 15, 1), grid) == [(3, 0)]


def test_rasterize_outside_grid():
    grid = GcellGrid(Point(0, 0), 10, 10, 2, 2)
    with pytest.raises(OutOfGrid):
        rasterize_segment(WireSegment(0, 5, 25, 5, 1), grid)


@settings(max_examples=200)
@given(
    x0=st.integers(0, 99), x1=st.integers(0, 99), y=st.integers(0, 99),
    cell=st.integers(1, 30), vertical=st.booleans(),
)
def test_rasterize_conserves_length(x0, x1, y, cell, vertical):
    grid = GcellGrid.covering(Rect(Point(0, 0), Point(99, 99)), cell, cell)
    seg = WireSegment(y, x0, y, x1, 1) if vertical else WireSegment(x0, y, x1, y, 1)
    parts = rasterize_segment(seg, grid)
    assert sum(length for _, length in parts) == seg.length
    indices = [i for i, _ in parts]
    assert indices == sorted(indices)
    assert all(0 <= i < grid.size for i in indices)


def test_clip_segment():
    rect = Rect(Point(0, 0), Point(10, 10))
    assert clip_segment(WireSegment(-5, 5, 15, 5, 1), rect).as_tuple() == (0, 5, 10, 5, 1)
    assert clip_segment(WireSegment(20, 5, 30, 5, 1), rect) is None


def test_cells_touching_clamps_to_grid():
    grid = GcellGrid(Point(0, 0), 10, 10, 3, 3)
    cols, rows = cells_touching(Rect(Point(-5, 12), Point(14, 50)), grid)
    assert list(cols) == [0, 1]
    assert list(rows) == [1, 2]


def test_rsmt_uses_steiner_point():
    pins = [Point(0, 0), Point(10, 0), Point(5, 5)]
    assert rmst_length(pins) == 20
    assert estimate_rsmt(pins) == 15


def test_rsmt_two_pins_is_manhattan():
    assert estimate_rsmt([Point(0, 0), Point(30, 40)]) == 70


@settings(max_examples=60, deadline=None)
@given(points)
def test_rsmt_bounds(pins):
    rsmt = estimate_rsmt(pins)
    assert hpwl(pins) <= rsmt <= rmst_length(pins)


def hanan_optimum(pins):
    xs = sorted({p.x for p in pins})
    ys = sorted({p.y for p in pins})
    taken = {(p.x, p.y) for p in pins}
    candidates = [Point(x, y) for x in xs for y in ys if (x, y) not in taken]
    best = rmst_length(pins)
    for k in range(1, len(pins) - 1):
        for extra in itertools.combinations(candidates, k):
            best = min(best, rmst_length(list(pins) + list(extra)))
    return best


def test_rsmt_close_to_exhaustive_hanan_optimum():
    rng = random.Random(7)
    for _ in range(120):
        n = rng.randint(2, 5)
        pins = [Point(rng.randint(0, 2000), rng.randint(0, 2000)) for _ in range(n)]
        optimum = hanan_optimum(pins)
        assert optimum <= estimate_rsmt(pins) <= 1.05 * optimum
