"""
Dataset Service - turn Foundation Data bundles into AI-ready tensors and tables
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

import constants
from exceptions import ConfigError, DatasetError, EmptyDataset, GridTooSmall, IncompleteBundle, SampleSkipped
from models.schemas import DatasetConfig, DatasetManifest, FoundationBundle, GridSpec, NetVec, SubnetRecord
from services.bundle_service import BundleService
from services.insight_service import feature_maps
from services.tensor_io import save_npy, write_csv
from utils import write_json
from workspace import Workspace

logger = logging.getLogger(__name__)

TASKS = ("tabular", "sequence", "spatial", "mask", "graph")
MASK_CHANNELS = (
    [f"{c}_norm" for c in constants.SPATIAL_CHANNELS]
    + [f"{c}_rel" for c in constants.SPATIAL_CHANNELS]
    + ["source", "target"]
)
GRAPH_NODE_FEATURES = ["x", "y", "capacitance", "slew"] + [f"is_{c}" for c in constants.NODE_CLASSES]


@dataclass
class TabularSet:
    columns: List[str]
    values: np.ndarray  # (N, len(columns))
    label_columns: List[str]
    labels: np.ndarray  # (N, len(label_columns))
    designs: List[str]
    nets: List[str]
    diagnostics: List[str] = field(default_factory=list)


@dataclass
class SequenceSet:
    features: List[str]
    tensor: np.ndarray  # (N, L, F)
    mask: np.ndarray  # (N, L)
    lengths: np.ndarray  # original stage counts
    targets: np.ndarray  # raw path delay
    center: np.ndarray
    scale: np.ndarray
    designs: List[str]
    robust: bool = False
    diagnostics: List[str] = field(default_factory=list)

    def denormalize(self) -> np.ndarray:
        """Raw feature values; padded positions stay 0."""
        raw = self.tensor * self.scale + self.center
        return raw * self.mask[..., None]


@dataclass
class SpatialSet:
    channels: List[str]
    inputs: np.ndarray  # (N, C, H, W)
    labels: np.ndarray  # (N, 1, H, W)
    designs: List[str]
    origins: List[Tuple[int, int]]  # window (iy, ix) or region corner in patches
    skipped: int = 0
    diagnostics: List[str] = field(default_factory=list)


@dataclass
class GraphSet:
    features: List[str]
    nodes: np.ndarray  # (V, F)
    edges: np.ndarray  # (E, 2) global node indices
    offsets: np.ndarray  # (G + 1,)
    targets: np.ndarray  # per path, log then per-design z-score
    path_nodes: List[List[int]]
    path_offsets: np.ndarray  # (G + 1,)
    designs: List[str]
    target_stats: Dict[str, List[float]] = field(default_factory=dict)
    diagnostics: List[str] = field(default_factory=list)


def _design_name(bundle: FoundationBundle, index: int) -> str:
    return bundle.design.name if bundle.design is not None else f"design_{index}"


def _require(bundle: FoundationBundle, level: str, name: str):
    value = {"net": bundle.nets, "path": bundle.paths, "graph": bundle.graph, "patch": bundle.patches}[level]
    if value is None:
        raise IncompleteBundle(f"{name} bundle lacks the {level} level")
    return value


# ----------------------------------------------------------------------------- tabular

def tabular_wirelength(bundles: Sequence[FoundationBundle]) -> TabularSet:
    """
    One row per routed net: [aspect_ratio, fanout, hpwl, rsmt, l_ness] with
    labels [via_count, rwl_over_rsmt]. Nets with zero RSMT or zero routed
    length are excluded and counted.
    """
    rows, labels, designs, nets = [], [], [], []
    zero_rsmt = unrouted = 0
    for i, bundle in enumerate(bundles):
        name = _design_name(bundle, i)
        for nv in _require(bundle, "net", name):
            f = nv.features
            if f.rsmt == 0:
                zero_rsmt += 1
                continue
            if f.rwl <= 0:
                unrouted += 1
                continue
            rows.append([f.aspect_ratio, f.fanout, f.hpwl, f.rsmt, f.l_ness])
            labels.append([f.via_count, f.rwl / f.rsmt])
            designs.append(name)
            nets.append(nv.name)
    diagnostics = []
    if zero_rsmt:
        diagnostics.append(f"{zero_rsmt} nets with zero RSMT excluded")
    if unrouted:
        diagnostics.append(f"{unrouted} nets without routed wirelength excluded")
    for d in diagnostics:
        logger.warning(f"⚠️ {d}")
    if not rows:
        raise EmptyDataset("no net has both routed wirelength and a nonzero RSMT")
    return TabularSet(
        columns=list(constants.TABULAR_FEATURES),
        values=np.asarray(rows, dtype=np.float64),
        label_columns=list(constants.TABULAR_LABELS),
        labels=np.asarray(labels, dtype=np.float64),
        designs=designs,
        nets=nets,
        diagnostics=diagnostics,
    )


# ----------------------------------------------------------------------------- sequence

def sequence_paths(bundles: Sequence[FoundationBundle], max_len: int = constants.DEFAULT_SEQUENCE_LEN,
                   robust: bool = False) -> SequenceSet:
    """
    Per-stage [resistance, capacitance, slew, incr_delay] ordered source to
    sink, truncated to the first `max_len` stages or zero padded. Features are
    z-scored over all real stages (median / IQR with `robust`); constant
    features are dropped.
    """
    if max_len < 1:
        raise ConfigError("dataset.sequence_len", f"must be >= 1, got {max_len}")
    raw_rows: List[np.ndarray] = []
    targets, designs = [], []
    for i, bundle in enumerate(bundles):
        name = _design_name(bundle, i)
        for pv in _require(bundle, "path", name):
            if not pv.stages:
                continue
            raw_rows.append(np.asarray(
                [[s.resistance, s.capacitance, s.slew, s.incr_delay] for s in pv.stages], dtype=np.float64,
            ))
            targets.append(pv.delay)
            designs.append(name)
    if not raw_rows:
        raise EmptyDataset("no timing paths in the given bundles")

    features = list(constants.SEQUENCE_FEATURES)
    kept = [r[:max_len] for r in raw_rows]
    stacked = np.concatenate(kept, axis=0)
    if robust:
        center = np.median(stacked, axis=0)
        q1, q3 = np.percentile(stacked, [25, 75], axis=0)
        scale = q3 - q1
    else:
        center = stacked.mean(axis=0)
        scale = stacked.std(axis=0)

    diagnostics = []
    live = scale > 0
    if not np.all(live):
        dropped = [f for f, ok in zip(features, live) if not ok]
        msg = f"constant sequence features dropped: {', '.join(dropped)}"
        diagnostics.append(msg)
        logger.warning(f"⚠️ {msg}")
    if not np.any(live):
        raise EmptyDataset("every sequence feature is constant")
    features = [f for f, ok in zip(features, live) if ok]
    center, scale = center[live], scale[live]

    n = len(kept)
    tensor = np.zeros((n, max_len, len(features)), dtype=np.float64)
    mask = np.zeros((n, max_len), dtype=np.uint8)
    lengths = np.asarray([len(r) for r in raw_rows], dtype=np.int64)
    for k, rows in enumerate(kept):
        tensor[k, :len(rows)] = (rows[:, live] - center) / scale
        mask[k, :len(rows)] = 1
    truncated = int(np.sum(lengths > max_len))
    if truncated:
        diagnostics.append(f"{truncated} paths truncated to {max_len} stages")
    logger.info(f"✅ Sequence set: {n} paths x {max_len} stages x {len(features)} features")
    return SequenceSet(
        features=features,
        tensor=tensor,
        mask=mask,
        lengths=lengths,
        targets=np.asarray(targets, dtype=np.float64),
        center=center,
        scale=scale,
        designs=designs,
        robust=robust,
        diagnostics=diagnostics,
    )


# ----------------------------------------------------------------------------- spatial

def window_starts(dim: int, window: int, stride: int) -> List[int]:
    return list(range(0, dim - window + 1, stride))


def spatial_congestion(bundle: FoundationBundle, window: int = constants.DEFAULT_WINDOW,
                       stride: int = constants.DEFAULT_STRIDE) -> SpatialSet:
    """
    Sliding windows over the patch maps in row-major scan order. Inputs are the
    placement-stage channels, the label is the routed congestion window.
    """
    if window < 1 or stride < 1:
        raise ConfigError("dataset.window", "window and stride must be >= 1")
    name = _design_name(bundle, 0)
    maps = feature_maps(bundle)
    ny, nx = maps["cell_density"].shape
    if ny < window or nx < window:
        raise GridTooSmall(f"{name}: patch grid {nx}x{ny} is smaller than window {window}")
    stack = np.stack([maps[c] for c in constants.SPATIAL_CHANNELS])
    congestion = maps["congestion"]
    origins = [(wy, wx) for wy in window_starts(ny, window, stride) for wx in window_starts(nx, window, stride)]
    inputs = np.stack([stack[:, wy:wy + window, wx:wx + window] for wy, wx in origins])
    labels = np.stack([congestion[None, wy:wy + window, wx:wx + window] for wy, wx in origins])
    return SpatialSet(list(constants.SPATIAL_CHANNELS), inputs, labels, [name] * len(origins), origins)


def _concat_spatial(sets: List[SpatialSet]) -> SpatialSet:
    return SpatialSet(
        channels=sets[0].channels,
        inputs=np.concatenate([s.inputs for s in sets]),
        labels=np.concatenate([s.labels for s in sets]),
        designs=[d for s in sets for d in s.designs],
        origins=[o for s in sets for o in s.origins],
        skipped=sum(s.skipped for s in sets),
        diagnostics=[d for s in sets for d in s.diagnostics],
    )


# ----------------------------------------------------------------------------- routing mask

def pooling_matrix(src: int, dst: int) -> np.ndarray:
    """(dst, src) area weights: row i averages source cells overlapping output cell i."""
    weights = np.zeros((dst, src), dtype=np.float64)
    step = src / dst
    for i in range(dst):
        lo, hi = i * step, (i + 1) * step
        for j in range(int(np.floor(lo)), min(src, int(np.ceil(hi)))):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                weights[i, j] = overlap / step
    return weights


def area_resize(values: np.ndarray, size: int) -> np.ndarray:
    h, w = values.shape
    return pooling_matrix(h, size) @ values @ pooling_matrix(w, size).T


def _normalize_map(values: np.ndarray) -> np.ndarray:
    hi = float(values.max()) if values.size else 0.0
    return values / hi if hi > 0 else np.zeros_like(values)


@dataclass
class _Region:
    iy: int
    ix: int
    h: int
    w: int
    x0: float  # DBU
    y0: float
    width: float
    height: float


def _axis_region(lo: int, hi: int, side: int, cells: int) -> Tuple[int, int]:
    if side >= cells:
        return 0, cells
    start = lo - (side - (hi - lo + 1)) // 2
    start = max(0, min(start, cells - side))
    return start, side


def _region(grid: GridSpec, xs: List[int], ys: List[int], cfg: DatasetConfig) -> _Region:
    def cell(v: int, origin: int, size: int, n: int) -> int:
        return max(0, min(n - 1, (v - origin) // size))

    cx = [cell(x, grid.origin_x, grid.cell_w, grid.nx) for x in xs]
    cy = [cell(y, grid.origin_y, grid.cell_h, grid.ny) for y in ys]
    side = max(max(cx) - min(cx) + 1, max(cy) - min(cy) + 1) + 2 * cfg.mask_margin
    side = max(side, cfg.mask_min_region)
    if side > cfg.mask_max_region:
        raise SampleSkipped(f"route spans {side} patches, above {cfg.mask_max_region}")
    ix, w = _axis_region(min(cx), max(cx), side, grid.nx)
    iy, h = _axis_region(min(cy), max(cy), side, grid.ny)
    x0 = grid.origin_x + ix * grid.cell_w
    y0 = grid.origin_y + iy * grid.cell_h
    return _Region(iy, ix, h, w, x0, y0, w * grid.cell_w, h * grid.cell_h)


def _pixel(v: float, origin: float, extent: float, size: int) -> float:
    return (v - origin) / extent * size


def rasterize_route(points: Sequence[Tuple[float, float]], region: _Region, size: int,
                    threshold: float) -> np.ndarray:
    """
    Binary (size, size) mask of a rectilinear polyline. A pixel is set when the
    route covers at least `threshold` of its side; endpoint pixels are always set.
    """
    cover = np.zeros((size, size), dtype=np.float64)

    def clamp(p: float) -> int:
        return max(0, min(size - 1, int(np.floor(p))))

    px = [(_pixel(x, region.x0, region.width, size), _pixel(y, region.y0, region.height, size)) for x, y in points]
    for (ax, ay), (bx, by) in zip(px, px[1:]):
        if ay == by and ax != bx:
            row = clamp(ay)
            lo, hi = sorted((ax, bx))
            for col in range(clamp(lo), clamp(hi) + 1):
                cover[row, col] += max(0.0, min(hi, col + 1) - max(lo, col))
        elif ax == bx and ay != by:
            col = clamp(ax)
            lo, hi = sorted((ay, by))
            for row in range(clamp(lo), clamp(hi) + 1):
                cover[row, col] += max(0.0, min(hi, row + 1) - max(lo, row))
    mask = (cover >= threshold).astype(np.float64)
    for x, y in (px[0], px[-1]):
        mask[clamp(y), clamp(x)] = 1.0
    return mask


def _mask_sample(subnet: SubnetRecord, grid: GridSpec, norm: np.ndarray, cfg: DatasetConfig):
    points = [(x, y) for x, y, _ in subnet.nodes]
    if len(points) < 2:
        raise SampleSkipped("subnet has fewer than two nodes")
    region = _region(grid, [p[0] for p in points], [p[1] for p in points], cfg)
    for x, y in (points[0], points[-1]):
        if not (region.x0 <= x <= region.x0 + region.width and region.y0 <= y <= region.y0 + region.height):
            raise SampleSkipped(f"endpoint ({x}, {y}) outside its region")

    size = cfg.mask_size
    crop = norm[:, region.iy:region.iy + region.h, region.ix:region.ix + region.w]
    raw = np.stack([area_resize(c, size) for c in crop])
    rel = raw - raw.mean(axis=(1, 2), keepdims=True)
    ends = np.zeros((2, size, size), dtype=np.float64)
    for k, (x, y) in enumerate((points[0], points[-1])):
        col = max(0, min(size - 1, int(np.floor(_pixel(x, region.x0, region.width, size)))))
        row = max(0, min(size - 1, int(np.floor(_pixel(y, region.y0, region.height, size)))))
        ends[k, row, col] = 1.0
    label = rasterize_route(points, region, size, cfg.mask_threshold)
    return np.concatenate([raw, rel, ends]), label[None], (region.iy, region.ix)


def routing_mask(bundle: FoundationBundle, config: Optional[DatasetConfig] = None) -> SpatialSet:
    """
    One sample per driver-to-load subnet: 4 design-normalized patch channels,
    4 region-relative channels, one-hot source and target, and the rasterized
    route as label. Subnets that do not fit a region are skipped and counted.
    """
    cfg = config or DatasetConfig()
    name = _design_name(bundle, 0)
    nets = _require(bundle, "net", name)
    if bundle.grid is None:
        raise IncompleteBundle(f"{name} bundle lacks the patch level")
    maps = feature_maps(bundle)
    norm = np.stack([_normalize_map(maps[c]) for c in constants.SPATIAL_CHANNELS])

    subnets = [s for nv in nets for s in nv.subnets]
    if len(subnets) > cfg.mask_max_samples:
        rng = np.random.default_rng(cfg.seed)
        picked = np.sort(rng.choice(len(subnets), size=cfg.mask_max_samples, replace=False))
        subnets = [subnets[i] for i in picked]

    inputs, labels, origins = [], [], []
    skipped = 0
    for s in subnets:
        try:
            x, y, origin = _mask_sample(s, bundle.grid, norm, cfg)
        except SampleSkipped as e:
            skipped += 1
            logger.debug(f"🔍 {name}: skipped subnet to {s.load}: {e}")
            continue
        inputs.append(x)
        labels.append(y)
        origins.append(origin)
    diagnostics = [f"{skipped} subnets skipped"] if skipped else []
    size = cfg.mask_size
    return SpatialSet(
        channels=list(MASK_CHANNELS),
        inputs=np.stack(inputs) if inputs else np.zeros((0, len(MASK_CHANNELS), size, size)),
        labels=np.stack(labels) if labels else np.zeros((0, 1, size, size)),
        designs=[name] * len(inputs),
        origins=origins,
        skipped=skipped,
        diagnostics=diagnostics,
    )


# ----------------------------------------------------------------------------- graph

def _node_electricals(nets: Optional[List[NetVec]]) -> Tuple[Dict[str, float], Dict[str, float]]:
    """Driven capacitance and worst load slew keyed by driver owner."""
    cap: Dict[str, float] = {}
    slew: Dict[str, float] = {}
    for nv in nets or []:
        if nv.electricals is None:
            continue
        drivers = [p for p in nv.pins if p.direction == "driver"]
        if not drivers:
            continue
        d = drivers[0]
        key = f"PIN:{d.pin}" if d.owner == "PIN" else d.owner
        cap[key] = cap.get(key, 0.0) + nv.electricals.capacitance
        worst = max((l.slew for l in nv.electricals.loads), default=0.0)
        slew[key] = max(slew.get(key, 0.0), worst)
    return cap, slew


def graph_batch(bundles: Sequence[FoundationBundle]) -> GraphSet:
    """
    Design graphs batched into one node matrix. Node features are die-relative
    coordinates, driven capacitance, worst load slew and a class one-hot; path
    delays are log transformed and z-scored per design.
    """
    node_rows: List[np.ndarray] = []
    edge_rows: List[np.ndarray] = []
    offsets = [0]
    path_offsets = [0]
    targets: List[float] = []
    path_nodes: List[List[int]] = []
    designs: List[str] = []
    stats: Dict[str, List[float]] = {}
    diagnostics: List[str] = []

    for i, bundle in enumerate(bundles):
        name = _design_name(bundle, i)
        graph = _require(bundle, "graph", name)
        paths = _require(bundle, "path", name)
        base = offsets[-1]
        cap, slew = _node_electricals(bundle.nets)
        if bundle.design is not None:
            dx0, dy0, dx1, dy1 = bundle.design.die
        else:
            xs = [n.x for n in graph.nodes] or [0]
            ys = [n.y for n in graph.nodes] or [0]
            dx0, dy0, dx1, dy1 = min(xs), min(ys), max(xs), max(ys)
        span_x = max(dx1 - dx0, 1)
        span_y = max(dy1 - dy0, 1)

        feats = np.zeros((len(graph.nodes), len(GRAPH_NODE_FEATURES)), dtype=np.float64)
        inst_ids: Dict[str, int] = {}
        port_ids: Dict[str, int] = {}
        for k, node in enumerate(graph.nodes):
            key = f"PIN:{node.name}" if node.cls == "port" else node.name
            feats[k, 0] = (node.x - dx0) / span_x
            feats[k, 1] = (node.y - dy0) / span_y
            feats[k, 2] = cap.get(key, 0.0)
            feats[k, 3] = slew.get(key, 0.0)
            feats[k, 4 + constants.NODE_CLASSES.index(node.cls)] = 1.0
            (port_ids if node.cls == "port" else inst_ids)[node.name] = k
        # graph node ids are positions in the node list
        edges = np.asarray([[e.src, e.dst] for e in graph.edges], dtype=np.int64).reshape(-1, 2)
        node_rows.append(feats)
        edge_rows.append(edges + base)
        offsets.append(base + len(graph.nodes))
        designs.append(name)

        delays = []
        for pv in paths:
            ids = []
            for s in pv.stages:
                owner = s.name.split("/", 1)[0] if "/" in s.name else None
                k = inst_ids.get(owner) if owner is not None else port_ids.get(s.name)
                if k is not None and (not ids or ids[-1] != base + k):
                    ids.append(base + k)
            end_owner = pv.endpoint.split("/", 1)[0]
            if end_owner in inst_ids and (not ids or ids[-1] != base + inst_ids[end_owner]):
                ids.append(base + inst_ids[end_owner])
            path_nodes.append(ids)
            delays.append(pv.delay)
        logd = np.log(np.maximum(np.asarray(delays, dtype=np.float64), np.finfo(np.float64).tiny))
        if logd.size == 0:
            stats[name] = [0.0, 1.0]
        else:
            mu, sd = float(logd.mean()), float(logd.std())
            if sd > 0:
                targets.extend(((logd - mu) / sd).tolist())
            else:
                msg = f"{name}: path delays are constant, targets set to 0"
                diagnostics.append(msg)
                logger.warning(f"⚠️ {msg}")
                targets.extend([0.0] * logd.size)
                sd = 1.0
            stats[name] = [mu, sd]
        path_offsets.append(path_offsets[-1] + len(delays))

    if not node_rows:
        raise EmptyDataset("no graphs to batch")
    return GraphSet(
        features=list(GRAPH_NODE_FEATURES),
        nodes=np.concatenate(node_rows),
        edges=np.concatenate(edge_rows),
        offsets=np.asarray(offsets, dtype=np.int64),
        targets=np.asarray(targets, dtype=np.float64),
        path_nodes=path_nodes,
        path_offsets=np.asarray(path_offsets, dtype=np.int64),
        designs=designs,
        target_stats=stats,
        diagnostics=diagnostics,
    )


# ----------------------------------------------------------------------------- split

def largest_remainder(total: int, weights: Sequence[float]) -> List[int]:
    quotas = [total * w for w in weights]
    counts = [int(np.floor(q)) for q in quotas]
    order = sorted(range(len(weights)), key=lambda j: (-(quotas[j] - counts[j]), j))
    for j in order[: total - sum(counts)]:
        counts[j] += 1
    return counts


def split_stratified(designs: Dict[str, int], strata: int = constants.DEFAULT_STRATA,
                     fractions: Sequence[float] = constants.DEFAULT_SPLIT_FRACTIONS,
                     seed: int = 0) -> Tuple[List[str], List[str], List[str]]:
    """
    Design-level (train, val, test) split. Designs are sorted by patch count and
    cut into equal-count strata; each stratum is shuffled with the seed and
    apportioned so split sizes match the fractions by largest remainder.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError("dataset.split_fractions", f"need three non-negative fractions summing to 1, got {list(fractions)}")
    if strata < 1 or len(designs) < strata:
        raise ConfigError("dataset.strata", f"{len(designs)} designs cannot fill {strata} strata")

    ordered = sorted(designs, key=lambda d: (designs[d], d))
    groups = [list(g) for g in np.array_split(np.asarray(ordered, dtype=object), strata)]
    totals = largest_remainder(len(ordered), fractions)

    # integer table with row sums = stratum sizes and column sums = split sizes
    quotas = np.asarray([[len(g) * f for f in fractions] for g in groups])
    table = np.floor(quotas).astype(int)
    row_need = [len(g) - int(table[k].sum()) for k, g in enumerate(groups)]
    col_need = [totals[j] - int(table[:, j].sum()) for j in range(3)]
    cells = sorted(((k, j) for k in range(len(groups)) for j in range(3)),
                   key=lambda kj: (-(quotas[kj] - table[kj]), kj))
    for k, j in cells + cells:
        if row_need[k] > 0 and col_need[j] > 0:
            table[k, j] += 1
            row_need[k] -= 1
            col_need[j] -= 1

    rng = np.random.default_rng(seed)
    splits: Tuple[List[str], List[str], List[str]] = ([], [], [])
    for k, group in enumerate(groups):
        shuffled = [group[i] for i in rng.permutation(len(group))]
        start = 0
        for j in range(3):
            splits[j].extend(shuffled[start:start + table[k, j]])
            start += table[k, j]
    return splits


# ----------------------------------------------------------------------------- service

class DatasetService:
    """load_data -> parse_data -> get_data, then emit into a workspace."""

    def __init__(self, config: Optional[DatasetConfig] = None, threads: int = 1):
        self.config = config or DatasetConfig()
        self.threads = threads
        self.bundles: List[FoundationBundle] = []
        self.parsed: Dict[str, object] = {}
        self.diagnostics: List[str] = []

    def _map(self, fn, items):
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(fn, items))
        return [fn(i) for i in items]

    def load_data(self, roots: Sequence[Union[str, Path, Workspace]]) -> List[FoundationBundle]:
        """Bundles from each workspace (or bundle directory), in the given order."""
        def load(root):
            path = root.vectors if isinstance(root, Workspace) else Path(root)
            if (path / "vectors").is_dir():
                path = path / "vectors"
            return BundleService().load(path)

        self.bundles = self._map(load, list(roots))
        names = [_design_name(b, i) for i, b in enumerate(self.bundles)]
        if len(set(names)) != len(names):
            raise DatasetError(f"duplicate design names across bundles: {names}")
        logger.info(f"📦 Loaded {len(self.bundles)} bundles for dataset assembly")
        return self.bundles

    def parse_data(self, task: str):
        if task not in TASKS:
            raise ConfigError("task", f"unknown task {task}; expected one of {', '.join(TASKS)}")
        if not self.bundles:
            raise EmptyDataset("no bundles loaded")
        cfg = self.config
        if task == "tabular":
            result = tabular_wirelength(self.bundles)
        elif task == "sequence":
            result = sequence_paths(self.bundles, cfg.sequence_len, cfg.robust_scaling)
        elif task == "spatial":
            result = self._spatial(lambda b: spatial_congestion(b, cfg.window, cfg.stride))
        elif task == "mask":
            result = self._spatial(lambda b: routing_mask(b, cfg))
        else:
            result = graph_batch(self.bundles)
        self.parsed[task] = result
        self.diagnostics.extend(result.diagnostics)
        return result

    def _spatial(self, build) -> SpatialSet:
        sets = []
        for s in self._map(lambda b: self._try_spatial(build, b), self.bundles):
            if isinstance(s, str):
                self.diagnostics.append(s)
            else:
                sets.append(s)
        if not sets or sum(len(s.inputs) for s in sets) == 0:
            raise EmptyDataset("no spatial samples could be cut from the given bundles")
        return _concat_spatial(sets)

    @staticmethod
    def _try_spatial(build, bundle):
        try:
            return build(bundle)
        except GridTooSmall as e:
            logger.warning(f"⚠️ {e}")
            return str(e)

    def get_data(self, task: str) -> Dict[str, np.ndarray]:
        """Arrays of a parsed task keyed by their output file stem."""
        data = self.parsed.get(task) or self.parse_data(task)
        if task == "tabular":
            return {"tabular_X": data.values, "tabular_y": data.labels}
        if task == "sequence":
            return {
                "sequence_X": data.tensor,
                "sequence_mask": data.mask,
                "sequence_len": data.lengths,
                "sequence_y": data.targets,
            }
        if task in ("spatial", "mask"):
            return {f"{task}_X": data.inputs, f"{task}_y": data.labels}
        return {
            "graph_nodes": data.nodes,
            "graph_edges": data.edges,
            "graph_offsets": data.offsets,
            "graph_y": data.targets,
            "graph_path_offsets": data.path_offsets,
        }

    def split(self) -> Dict[str, List[str]]:
        cfg = self.config
        counts = {}
        for i, b in enumerate(self.bundles):
            counts[_design_name(b, i)] = len(b.patches) if b.patches is not None else 0
        strata = min(cfg.strata, len(counts))
        train, val, test = split_stratified(counts, strata, cfg.split_fractions, cfg.seed)
        return {"train": train, "val": val, "test": test}

    def emit(self, ws: Workspace, tasks: Sequence[str]) -> DatasetManifest:
        """
        Write NPY tensors, CSV side tables and dataset_manifest.json under
        feature/. A task that yields no samples is recorded as a diagnostic.
        """
        out = ws.feature
        out.mkdir(parents=True, exist_ok=True)
        names = [_design_name(b, i) for i, b in enumerate(self.bundles)]
        manifest = DatasetManifest(task=",".join(tasks), designs=names, seed=self.config.seed)
        manifest.split = self.split()

        for task in tasks:
            try:
                arrays = self.get_data(task)
            except EmptyDataset as e:
                msg = f"{task}: {e}"
                self.diagnostics.append(msg)
                logger.warning(f"⚠️ {msg}")
                continue
            for stem, arr in arrays.items():
                if arr.dtype == np.uint8:
                    dtype = "|u1"
                elif arr.dtype.kind in "iu":
                    dtype = "<i8"
                else:
                    dtype = "<f4"
                save_npy(out / f"{stem}.npy", arr, dtype=dtype)
                manifest.shapes[stem] = list(arr.shape)
            self._emit_tables(out, task, manifest)

        manifest.diagnostics = list(self.diagnostics)
        write_json(out / "dataset_manifest.json", manifest)
        logger.info(f"✅ Dataset written to {out} ({', '.join(tasks)})")
        return manifest

    def _emit_tables(self, out: Path, task: str, manifest: DatasetManifest) -> None:
        data = self.parsed[task]
        if task == "tabular":
            frame = pd.DataFrame(data.values, columns=data.columns)
            frame[data.label_columns] = data.labels
            frame.insert(0, "net", data.nets)
            frame.insert(0, "design", data.designs)
            write_csv(out / "tabular.csv", frame)
            manifest.columns["tabular_X"] = data.columns
            manifest.columns["tabular_y"] = data.label_columns
            manifest.counts["tabular"] = len(data.values)
        elif task == "sequence":
            manifest.columns["sequence_X"] = data.features
            center, scale = ("median", "iqr") if data.robust else ("mean", "std")
            manifest.normalization["sequence"] = {center: data.center.tolist(), scale: data.scale.tolist()}
            write_csv(out / "sequence_index.csv", pd.DataFrame({
                "design": data.designs, "length": data.lengths, "delay": data.targets,
            }))
            manifest.counts["sequence"] = len(data.tensor)
        elif task in ("spatial", "mask"):
            manifest.columns[f"{task}_X"] = data.channels
            write_csv(out / f"{task}_index.csv", pd.DataFrame({
                "design": data.designs,
                "iy": [o[0] for o in data.origins],
                "ix": [o[1] for o in data.origins],
            }))
            manifest.counts[task] = len(data.inputs)
            if data.skipped:
                manifest.counts[f"{task}_skipped"] = data.skipped
        else:
            manifest.columns["graph_nodes"] = data.features
            manifest.normalization["graph_delay"] = data.target_stats
            rows = []
            for g, design in enumerate(data.designs):
                for p in range(data.path_offsets[g], data.path_offsets[g + 1]):
                    rows.append({
                        "design": design,
                        "path": int(p - data.path_offsets[g]),
                        "target": float(data.targets[p]),
                        "nodes": " ".join(str(n) for n in data.path_nodes[p]),
                    })
            write_csv(out / "graph_paths.csv", pd.DataFrame(rows, columns=["design", "path", "target", "nodes"]))
            manifest.counts["graph"] = len(data.designs)
            manifest.counts["graph_paths"] = len(data.targets)


def build_dataset(ws: Workspace, tasks: Sequence[str], extra: Sequence[Union[str, Path]] = ()) -> DatasetManifest:
    service = DatasetService(ws.config.dataset, ws.config.threads)
    service.load_data([ws, *extra])
    for task in tasks:
        try:
            service.parse_data(task)
        except EmptyDataset as e:
            service.diagnostics.append(f"{task}: {e}")
            logger.warning(f"⚠️ {task}: {e}")
    return service.emit(ws, [t for t in tasks if t in service.parsed])
