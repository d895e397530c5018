"""
Patch Service - gcell grid features: densities, RUDY, routed congestion, clipped wire fragments
"""
import logging
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import TechError
from models.design import Design
from models.geometry import GcellGrid, Point, Rect, WireSegment
from models.schemas import GridSpec, NetElectricals, PatchFragment, PatchVec, PathVec
from services.geom_service import bounding_box, cells_touching, overlap_area, rasterize_segment

logger = logging.getLogger(__name__)


def patch_grid(design: Design, patch_multiple: int, reference_layer: int = 1) -> GcellGrid:
    """Square gcells of patch_multiple reference-layer pitches covering the die."""
    try:
        pitch = design.tech.metal(reference_layer).pitch
    except KeyError:
        raise TechError(f"reference layer {reference_layer} not in technology")
    size = patch_multiple * pitch
    return GcellGrid.covering(design.die, size, size)


def grid_spec(grid: GcellGrid, patch_multiple: int, reference_layer: int) -> GridSpec:
    return GridSpec(
        origin_x=grid.origin.x,
        origin_y=grid.origin.y,
        cell_w=grid.cell_w,
        cell_h=grid.cell_h,
        nx=grid.nx,
        ny=grid.ny,
        width=grid.width,
        height=grid.height,
        partial_x=grid.partial_x,
        partial_y=grid.partial_y,
        patch_multiple=patch_multiple,
        reference_layer=reference_layer,
    )


def grid_of(spec: GridSpec) -> GcellGrid:
    return GcellGrid(
        origin=Point(spec.origin_x, spec.origin_y),
        cell_w=spec.cell_w,
        cell_h=spec.cell_h,
        nx=spec.nx,
        ny=spec.ny,
        width=spec.width,
        height=spec.height,
    )


def cell_areas(grid: GcellGrid) -> np.ndarray:
    widths = np.array([grid.column_span(ix)[1] - grid.column_span(ix)[0] for ix in range(grid.nx)], dtype=np.float64)
    heights = np.array([grid.row_span(iy)[1] - grid.row_span(iy)[0] for iy in range(grid.ny)], dtype=np.float64)
    return np.outer(heights, widths)  # (ny, nx)


def cell_density_map(design: Design, grid: GcellGrid) -> np.ndarray:
    """Instance footprint area per gcell over gcell area, shape (ny, nx)."""
    occupied = np.zeros((grid.ny, grid.nx), dtype=np.float64)
    for inst in design.instances:
        fp = design.footprint(inst)
        cols, rows = cells_touching(fp, grid)
        for iy in rows:
            for ix in cols:
                a = overlap_area(fp, grid.cell_rect(ix, iy))
                if a:
                    occupied[iy, ix] += a
    return occupied / cell_areas(grid)


def _normalized(counts: np.ndarray) -> np.ndarray:
    peak = counts.max() if counts.size else 0.0
    return counts / peak if peak > 0 else np.zeros_like(counts)


def _rudy_box(box: Rect, pitch: int) -> Optional[Rect]:
    # degenerate boxes are widened to one reference pitch; point boxes carry no wire
    if box.width == 0 and box.height == 0:
        return None
    lo_x, hi_x, lo_y, hi_y = box.lo.x, box.hi.x, box.lo.y, box.hi.y
    if box.width == 0:
        lo_x -= pitch // 2
        hi_x = lo_x + pitch
    if box.height == 0:
        lo_y -= pitch // 2
        hi_y = lo_y + pitch
    return Rect(Point(lo_x, lo_y), Point(hi_x, hi_y))


def _fragment(seg: WireSegment, grid: GcellGrid, cell: int) -> WireSegment:
    ix, iy = grid.unindex(cell)
    if seg.length == 0:
        return seg
    if seg.ys == seg.ye:
        c0, c1 = grid.column_span(ix)
        x0, x1 = sorted((seg.xs, seg.xe))
        return WireSegment(max(x0, c0), seg.ys, min(x1, c1), seg.ye, seg.layer)
    c0, c1 = grid.row_span(iy)
    y0, y1 = sorted((seg.ys, seg.ye))
    return WireSegment(seg.xs, max(y0, c0), seg.xe, min(y1, c1), seg.layer)


def patch_features(
    design: Design,
    patch_multiple: int,
    reference_layer: int = 1,
    electricals: Optional[Dict[str, NetElectricals]] = None,
    paths: Optional[Sequence[PathVec]] = None,
    diagnostics: Optional[List[str]] = None,
) -> Tuple[GcellGrid, List[PatchVec]]:
    """
    Per-gcell feature vectors.

    Cell and pin density and RUDY are taken per unit gcell area; routed wirelength is
    rasterized per layer so Σ over patches equals Σ over nets exactly.
    """
    grid = patch_grid(design, patch_multiple, reference_layer)
    ref_pitch = grid.cell_w // patch_multiple
    shape = (grid.ny, grid.nx)
    area = cell_areas(grid)
    electricals = electricals or {}

    cell_density = cell_density_map(design, grid)

    pins = np.zeros(shape, dtype=np.float64)
    nets_touching = np.zeros(shape, dtype=np.float64)
    rudy = np.zeros(shape, dtype=np.float64)
    vias = np.zeros(shape, dtype=np.int64)
    power = np.zeros(shape, dtype=np.float64)
    wirelength: Dict[int, np.ndarray] = {}
    fragments: Dict[int, List[PatchFragment]] = defaultdict(list)
    point_nets = 0

    for net in design.nets:
        if not net.pins:
            continue
        for p in net.pins:
            pins[grid.row_of(p.position.y), grid.column_of(p.position.x)] += 1
        box = bounding_box(p.position for p in net.pins)
        cols, rows = cells_touching(box, grid)
        nets_touching[rows.start:rows.stop, cols.start:cols.stop] += 1

        rbox = _rudy_box(box, ref_pitch) if len(net.pins) > 1 else None
        if rbox is None and len(net.pins) > 1:
            point_nets += 1
        if rbox is not None:
            mass = (rbox.width + rbox.height) / (rbox.width * rbox.height)
            rcols, rrows = cells_touching(rbox, grid)
            for iy in rrows:
                for ix in rcols:
                    a = overlap_area(rbox, grid.cell_rect(ix, iy))
                    if a:
                        rudy[iy, ix] += mass * a / area[iy, ix]

        net_power = electricals[net.name].power if net.name in electricals else 0.0
        rwl = sum(s.length for s in net.routing)
        for seg in net.routing:
            layer_map = wirelength.setdefault(seg.layer, np.zeros(shape, dtype=np.int64))
            for cell, length in rasterize_segment(seg, grid):
                ix, iy = grid.unindex(cell)
                layer_map[iy, ix] += length
                if rwl:
                    power[iy, ix] += net_power * length / rwl
                fragments[cell].append(PatchFragment(net=net.name, wire=_fragment(seg, grid, cell).as_tuple()))
        if not rwl and net.driver is not None:
            d = net.driver.position
            power[grid.row_of(d.y), grid.column_of(d.x)] += net_power
        for v in net.vias:
            vias[grid.row_of(v.yc), grid.column_of(v.xc)] += 1

    if point_nets:
        msg = f"{point_nets} nets with coincident pins contribute no RUDY"
        logger.warning(f"⚠️ {msg}")
        if diagnostics is not None:
            diagnostics.append(msg)

    worst = np.full(shape, np.inf)
    for path in paths or []:
        for st in path.stages:
            iy, ix = grid.row_of(st.y), grid.column_of(st.x)
            worst[iy, ix] = min(worst[iy, ix], path.slack)

    pin_density = _normalized(pins / area)
    net_density = _normalized(nets_touching)
    layers = sorted(wirelength)
    pitch = {l: design.tech.metal(l).pitch for l in layers}
    width = {l: design.tech.metal(l).width for l in layers}
    capacity = sum(area / l.pitch for l in design.tech.routing_layers)

    patches: List[PatchVec] = []
    for iy in range(grid.ny):
        for ix in range(grid.nx):
            idx = grid.index(ix, iy)
            a = area[iy, ix]
            wl = {l: int(wirelength[l][iy, ix]) for l in layers if wirelength[l][iy, ix]}
            demand = sum(wl.values())
            patches.append(PatchVec(
                id=idx,
                ix=ix,
                iy=iy,
                bbox=grid.cell_rect(ix, iy).as_tuple(),
                cell_density=float(cell_density[iy, ix]),
                pin_density=float(pin_density[iy, ix]),
                net_density=float(net_density[iy, ix]),
                rudy=float(rudy[iy, ix]),
                wire_density={l: v * width[l] / a for l, v in wl.items()},
                congestion={l: v * pitch[l] / a for l, v in wl.items()},
                congestion_total=float(demand / capacity[iy, ix]) if demand else 0.0,
                wirelength=wl,
                via_count=int(vias[iy, ix]),
                power=float(power[iy, ix]),
                timing=float(worst[iy, ix]) if np.isfinite(worst[iy, ix]) else None,
                fragments=fragments.get(idx, []),
            ))
    logger.info(f"🔍 Patch grid {grid.nx}x{grid.ny} with {len(patches)} patches")
    return grid, patches
