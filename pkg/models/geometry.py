"""
Integer-coordinate rectilinear geometry primitives.

Every coordinate is an integer database unit (DBU). Microns only appear at
serialization time through the design-level dbu_per_micron.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

from exceptions import GeometryError

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1


def _check_coord(value: int, name: str) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise GeometryError(f"{name} must be an integer DBU, got {value!r}")
    if value < INT64_MIN or value > INT64_MAX:
        raise GeometryError(f"{name}={value} does not fit a signed 64-bit integer")


@dataclass(frozen=True, slots=True, order=True)
class Point:
    x: int
    y: int

    def __post_init__(self):
        _check_coord(self.x, "x")
        _check_coord(self.y, "y")

    def translate(self, dx: int, dy: int) -> "Point":
        return Point(self.x + dx, self.y + dy)

    def as_tuple(self) -> Tuple[int, int]:
        return (self.x, self.y)


@dataclass(frozen=True, slots=True)
class Rect:
    lo: Point
    hi: Point

    def __post_init__(self):
        if self.lo.x > self.hi.x or self.lo.y > self.hi.y:
            raise GeometryError(f"inverted rectangle {self.lo.as_tuple()}-{self.hi.as_tuple()}")

    @classmethod
    def from_coords(cls, x1: int, y1: int, x2: int, y2: int) -> "Rect":
        return cls(Point(min(x1, x2), min(y1, y2)), Point(max(x1, x2), max(y1, y2)))

    @property
    def width(self) -> int:
        return self.hi.x - self.lo.x

    @property
    def height(self) -> int:
        return self.hi.y - self.lo.y

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains(self, p: Point) -> bool:
        return self.lo.x <= p.x <= self.hi.x and self.lo.y <= p.y <= self.hi.y

    def contains_rect(self, other: "Rect") -> bool:
        return self.contains(other.lo) and self.contains(other.hi)

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.lo.x, self.lo.y, self.hi.x, self.hi.y)


@dataclass(frozen=True, slots=True)
class WireSegment:
    """A routed wire (xs, ys, xe, ye, layer); layer is the routing layer number (M1 = 1)."""
    xs: int
    ys: int
    xe: int
    ye: int
    layer: int

    def __post_init__(self):
        for name in ("xs", "ys", "xe", "ye"):
            _check_coord(getattr(self, name), name)
        if self.xs != self.xe and self.ys != self.ye:
            raise GeometryError(
                f"diagonal segment ({self.xs},{self.ys})->({self.xe},{self.ye}) on layer {self.layer}"
            )
        if self.layer < 1:
            raise GeometryError(f"segment layer must be >= 1, got {self.layer}")

    @property
    def length(self) -> int:
        return abs(self.xe - self.xs) + abs(self.ye - self.ys)

    @property
    def is_horizontal(self) -> bool:
        return self.ys == self.ye and self.xs != self.xe

    @property
    def start(self) -> Point:
        return Point(self.xs, self.ys)

    @property
    def end(self) -> Point:
        return Point(self.xe, self.ye)

    def scaled(self, factor: int) -> "WireSegment":
        return WireSegment(self.xs * factor, self.ys * factor, self.xe * factor, self.ye * factor, self.layer)

    def as_tuple(self) -> Tuple[int, int, int, int, int]:
        return (self.xs, self.ys, self.xe, self.ye, self.layer)


@dataclass(frozen=True, slots=True)
class ViaInstance:
    """An inter-layer via (xc, yc, layer_bot, layer_top)."""
    xc: int
    yc: int
    layer_bot: int
    layer_top: int

    def __post_init__(self):
        _check_coord(self.xc, "xc")
        _check_coord(self.yc, "yc")
        if self.layer_bot >= self.layer_top:
            raise GeometryError(f"via bottom layer {self.layer_bot} must be below top layer {self.layer_top}")
        if self.layer_bot < 1:
            raise GeometryError(f"via bottom layer must be >= 1, got {self.layer_bot}")

    @property
    def position(self) -> Point:
        return Point(self.xc, self.yc)

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.xc, self.yc, self.layer_bot, self.layer_top)


@dataclass(frozen=True, slots=True)
class GcellGrid:
    """
    Uniform grid of half-open cells [lo, hi) anchored at origin.

    width/height give the covered extent; when they are not multiples of the
    cell size the last column/row is partial (see partial_x / partial_y).
    Points on the upper outer edge belong to the last column/row.
    """
    origin: Point
    cell_w: int
    cell_h: int
    nx: int
    ny: int
    width: int = field(default=-1)
    height: int = field(default=-1)

    def __post_init__(self):
        if self.cell_w <= 0 or self.cell_h <= 0:
            raise GeometryError(f"gcell size must be positive, got {self.cell_w}x{self.cell_h}")
        if self.nx < 1 or self.ny < 1:
            raise GeometryError(f"gcell counts must be >= 1, got {self.nx}x{self.ny}")
        if self.width < 0:
            object.__setattr__(self, "width", self.nx * self.cell_w)
        if self.height < 0:
            object.__setattr__(self, "height", self.ny * self.cell_h)
        if not (self.nx - 1) * self.cell_w < self.width <= self.nx * self.cell_w:
            raise GeometryError(f"grid width {self.width} inconsistent with {self.nx} cells of {self.cell_w}")
        if not (self.ny - 1) * self.cell_h < self.height <= self.ny * self.cell_h:
            raise GeometryError(f"grid height {self.height} inconsistent with {self.ny} cells of {self.cell_h}")

    @classmethod
    def covering(cls, area: Rect, cell_w: int, cell_h: int) -> "GcellGrid":
        width = max(area.width, 1)
        height = max(area.height, 1)
        return cls(
            origin=area.lo,
            cell_w=cell_w,
            cell_h=cell_h,
            nx=max(1, math.ceil(width / cell_w)),
            ny=max(1, math.ceil(height / cell_h)),
            width=width,
            height=height,
        )

    @property
    def extent(self) -> Rect:
        return Rect(self.origin, Point(self.origin.x + self.width, self.origin.y + self.height))

    @property
    def partial_x(self) -> bool:
        return self.width != self.nx * self.cell_w

    @property
    def partial_y(self) -> bool:
        return self.height != self.ny * self.cell_h

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def index(self, ix: int, iy: int) -> int:
        return iy * self.nx + ix

    def unindex(self, index: int) -> Tuple[int, int]:
        return index % self.nx, index // self.nx

    def column_of(self, x: int) -> int:
        if x < self.origin.x or x > self.origin.x + self.width:
            raise GeometryError(f"x={x} outside grid")
        return min((x - self.origin.x) // self.cell_w, self.nx - 1)

    def row_of(self, y: int) -> int:
        if y < self.origin.y or y > self.origin.y + self.height:
            raise GeometryError(f"y={y} outside grid")
        return min((y - self.origin.y) // self.cell_h, self.ny - 1)

    def column_span(self, ix: int) -> Tuple[int, int]:
        lo = self.origin.x + ix * self.cell_w
        return lo, min(lo + self.cell_w, self.origin.x + self.width)

    def row_span(self, iy: int) -> Tuple[int, int]:
        lo = self.origin.y + iy * self.cell_h
        return lo, min(lo + self.cell_h, self.origin.y + self.height)

    def cell_rect(self, ix: int, iy: int) -> Rect:
        x0, x1 = self.column_span(ix)
        y0, y1 = self.row_span(iy)
        return Rect(Point(x0, y0), Point(x1, y1))

    def scaled(self, factor: int) -> "GcellGrid":
        return GcellGrid(
            origin=self.origin,
            cell_w=self.cell_w * factor,
            cell_h=self.cell_h * factor,
            nx=max(1, math.ceil(self.width / (self.cell_w * factor))),
            ny=max(1, math.ceil(self.height / (self.cell_h * factor))),
            width=self.width,
            height=self.height,
        )
