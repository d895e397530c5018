"""
Geometry Service - wirelength primitives and grid rasterization
"""
from typing import Iterable, List, Sequence, Tuple

from exceptions import EmptyPinSet, OutOfGrid
from models.geometry import GcellGrid, Point, Rect, WireSegment


def hpwl(points: Sequence[Point]) -> int:
    """Half-perimeter of the bounding box of the given points."""
    if not points:
        raise EmptyPinSet("hpwl needs at least one point")
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    return (max(xs) - min(xs)) + (max(ys) - min(ys))


def bounding_box(points: Iterable[Point]) -> Rect:
    pts = list(points)
    if not pts:
        raise EmptyPinSet("bounding box of an empty point set")
    return Rect(
        Point(min(p.x for p in pts), min(p.y for p in pts)),
        Point(max(p.x for p in pts), max(p.y for p in pts)),
    )


def manhattan(a: Point, b: Point) -> int:
    return abs(a.x - b.x) + abs(a.y - b.y)


def overlap_area(a: Rect, b: Rect) -> int:
    w = min(a.hi.x, b.hi.x) - max(a.lo.x, b.lo.x)
    h = min(a.hi.y, b.hi.y) - max(a.lo.y, b.lo.y)
    return max(0, w) * max(0, h)


def _interval_cells(lo: int, hi: int, origin: int, cell: int, count: int) -> List[Tuple[int, int]]:
    # [lo, hi) split over half-open cells of size `cell`
    out = []
    first = (lo - origin) // cell
    last = min((hi - 1 - origin) // cell, count - 1)
    for i in range(first, last + 1):
        c0 = origin + i * cell
        c1 = c0 + cell if i < count - 1 else hi
        length = min(hi, c1) - max(lo, c0)
        if length > 0:
            out.append((i, length))
    return out


def rasterize_segment(seg: WireSegment, grid: GcellGrid) -> List[Tuple[int, int]]:
    """
    Split a wire segment over the grid cells it crosses.

    Returns (cell_index, overlap_length) pairs in ascending index order whose
    lengths sum to seg.length. A zero-length segment reports the single cell
    holding its point with length 0.
    """
    ext = grid.extent
    x0, x1 = sorted((seg.xs, seg.xe))
    y0, y1 = sorted((seg.ys, seg.ye))
    if x0 < ext.lo.x or x1 > ext.hi.x or y0 < ext.lo.y or y1 > ext.hi.y:
        raise OutOfGrid(f"segment {seg.as_tuple()} outside grid {ext.as_tuple()}")

    if seg.length == 0:
        return [(grid.index(grid.column_of(x0), grid.row_of(y0)), 0)]

    if y0 == y1:
        iy = grid.row_of(y0)
        return [
            (grid.index(ix, iy), length)
            for ix, length in _interval_cells(x0, x1, grid.origin.x, grid.cell_w, grid.nx)
        ]
    ix = grid.column_of(x0)
    return [
        (grid.index(ix, iy), length)
        for iy, length in _interval_cells(y0, y1, grid.origin.y, grid.cell_h, grid.ny)
    ]


def clip_segment(seg: WireSegment, rect: Rect) -> WireSegment | None:
    """Portion of an axis-aligned segment inside a closed rectangle, or None."""
    x0, x1 = sorted((seg.xs, seg.xe))
    y0, y1 = sorted((seg.ys, seg.ye))
    cx0, cx1 = max(x0, rect.lo.x), min(x1, rect.hi.x)
    cy0, cy1 = max(y0, rect.lo.y), min(y1, rect.hi.y)
    if cx0 > cx1 or cy0 > cy1:
        return None
    if (cx1 - cx0) + (cy1 - cy0) == 0 and seg.length > 0:
        return None
    return WireSegment(cx0, cy0, cx1, cy1, seg.layer)


def cells_touching(rect: Rect, grid: GcellGrid) -> Tuple[range, range]:
    """Column and row index ranges of the cells a closed rectangle touches (clamped to the grid)."""
    ext = grid.extent
    x0 = min(max(rect.lo.x, ext.lo.x), ext.hi.x)
    x1 = min(max(rect.hi.x, ext.lo.x), ext.hi.x)
    y0 = min(max(rect.lo.y, ext.lo.y), ext.hi.y)
    y1 = min(max(rect.hi.y, ext.lo.y), ext.hi.y)
    return (
        range(grid.column_of(x0), grid.column_of(x1) + 1),
        range(grid.row_of(y0), grid.row_of(y1) + 1),
    )
