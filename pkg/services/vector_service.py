"""
Vector Service - orchestrates design-to-vector extraction across the net, graph, path, patch and design levels
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar

import constants
from models.design import Design, InstanceClass, Net, PinDirection
from models.geometry import GcellGrid
from models.schemas import (
    DesignCounts,
    DesignMetrics,
    DesignVec,
    FoundationBundle,
    GraphVec,
    NetElectricals,
    NetVec,
    PatchVec,
    PathVec,
    WorkspaceConfig,
)
from services.geom_service import hpwl
from services.graph_service import build_graph
from services.net_service import decompose_with_tree
from services.patch_service import grid_spec, patch_features
from services.rc_service import lumped_electricals, tree_electricals
from services.timing_service import TimingLimits, extract_paths

logger = logging.getLogger(__name__)

LEVELS = ("net", "graph", "path", "patch", "design")

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class NetLevel:
    netvecs: List[NetVec] = field(default_factory=list)
    electricals: Dict[str, NetElectricals] = field(default_factory=dict)


def pin_caps(design: Design) -> Dict[str, float]:
    """Input capacitance per load pin label; ports present no load."""
    caps: Dict[str, float] = {}
    for net in design.nets:
        for p in net.pins:
            if p.direction != PinDirection.LOAD or p.is_port:
                continue
            caps[p.label] = design.master_of(design.instance(p.owner)).pin_cap
    return caps


def route_points(netvecs: Iterable[NetVec]) -> Dict[str, Dict[str, List[Tuple[int, int]]]]:
    """Planar driver-to-load walks per net; via hops collapse onto one point."""
    routes: Dict[str, Dict[str, List[Tuple[int, int]]]] = {}
    for nv in netvecs:
        per_load = {}
        for sub in nv.subnets:
            pts: List[Tuple[int, int]] = []
            for x, y, _ in sub.nodes:
                if not pts or pts[-1] != (x, y):
                    pts.append((x, y))
            per_load[sub.load] = pts
        routes[nv.name] = per_load
    return routes


def extract_design_stats(
    design: Design,
    paths: Sequence[PathVec],
    netvecs: Sequence[NetVec],
    patches: Optional[Sequence[PatchVec]] = None,
    electricals: Optional[Dict[str, NetElectricals]] = None,
    clock_period: float = constants.DEFAULT_CLOCK_PERIOD,
) -> DesignVec:
    """Design-level statistics and summary metrics."""
    instance_area = sum(design.footprint(i).area for i in design.instances)
    core_area = design.core.area
    class_counts = {c.value: 0 for c in InstanceClass}
    for inst in design.instances:
        class_counts[inst.cls.value] += 1
    n_inst = len(design.instances)
    shares = {k: (v / n_inst if n_inst else 0.0) for k, v in class_counts.items()}

    layer_wl: Dict[int, int] = {}
    hist: Dict[int, int] = {}
    total_hpwl = 0
    for net in design.nets:
        for s in net.routing:
            layer_wl[s.layer] = layer_wl.get(s.layer, 0) + s.length
        hist[len(net.pins)] = hist.get(len(net.pins), 0) + 1
        if net.pins:
            total_hpwl += hpwl([p.position for p in net.pins])

    if electricals is not None:
        total_power = sum(e.power for _, e in sorted(electricals.items()))
    else:
        total_power = sum(nv.electricals.power for nv in netvecs if nv.electricals)

    slacks = [p.slack for p in paths]
    metrics = DesignMetrics(
        total_rwl=sum(layer_wl.values()),
        total_hpwl=total_hpwl,
        max_congestion=max((p.congestion_total for p in patches), default=None) if patches else None,
        wns=min(slacks) if slacks else None,
        tns=sum(s for s in slacks if s < 0),
        violating_paths=sum(1 for s in slacks if s < 0),
        total_power=total_power,
        path_count=len(paths),
    )
    counts = DesignCounts(
        cells=n_inst,
        nets=len(design.nets),
        wires=sum(len(n.routing) for n in design.nets),
        vias=sum(len(n.vias) for n in design.nets),
        pins=sum(len(n.pins) for n in design.nets),
        ports=len(design.ports),
        wired_nets=sum(1 for n in design.nets if n.is_routed),
    )
    return DesignVec(
        name=design.name,
        dbu_per_micron=design.tech.dbu_per_micron,
        die=design.die.as_tuple(),
        core=design.core.as_tuple(),
        clock_period=clock_period,
        counts=counts,
        core_usage=instance_area / core_area if core_area else 0.0,
        class_shares=shares,
        layer_wirelength=dict(sorted(layer_wl.items())),
        pin_histogram=dict(sorted(hist.items())),
        metrics=metrics,
    )


class VectorService:
    def __init__(self, config: Optional[WorkspaceConfig] = None, threads: Optional[int] = None):
        self.config = config or WorkspaceConfig()
        self.threads = threads or self.config.threads

    def _map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        # executor.map yields in submission order, so the merge is canonical for any worker count
        if self.threads <= 1 or len(items) < 2:
            return [fn(i) for i in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))

    def generate_nets(self, design: Design) -> NetLevel:
        """NetVecs for wired nets (ids in name order) and electricals for every net."""
        cfg = self.config
        caps = pin_caps(design)
        freq = cfg.effective_frequency
        wired = [n for n in design.nets if n.is_routed]

        def one(item: Tuple[int, Net]) -> NetVec:
            idx, net = item
            nv, tree = decompose_with_tree(net, idx, cfg.l_ness_max_bends)
            nv.electricals = tree_electricals(tree, design.tech, caps, cfg.activity, cfg.vdd, freq)
            return nv

        netvecs = self._map(one, list(enumerate(wired)))
        electricals = {nv.name: nv.electricals for nv in netvecs}
        for net in design.nets:
            if not net.is_routed:
                labels = [p.label for p in net.loads]
                electricals[net.name] = lumped_electricals(labels, caps, cfg.activity, cfg.vdd, freq)
        skipped = len(design.nets) - len(wired)
        if skipped:
            logger.info(f"🔍 {skipped} nets without wiring get no net file")
        logger.info(f"✅ Net level: {len(netvecs)} nets vectorized with {self.threads} threads")
        return NetLevel(netvecs=netvecs, electricals=electricals)

    def generate_graph(self, design: Design, diagnostics: Optional[List[str]] = None) -> GraphVec:
        return build_graph(design, diagnostics)

    def generate_paths(self, design: Design, nets: NetLevel, diagnostics: Optional[List[str]] = None) -> List[PathVec]:
        cfg = self.config
        limits = TimingLimits(
            max_paths=cfg.max_paths,
            max_stages=cfg.max_stages,
            max_expansions=cfg.max_expansions,
            clock_period=cfg.clock_period,
            port_drive_resistance=cfg.port_drive_resistance,
        )
        return extract_paths(design, nets.electricals, limits, route_points(nets.netvecs), diagnostics)

    def generate_patches(
        self,
        design: Design,
        nets: NetLevel,
        paths: Sequence[PathVec],
        diagnostics: Optional[List[str]] = None,
    ) -> Tuple[GcellGrid, List[PatchVec]]:
        cfg = self.config
        return patch_features(design, cfg.patch_multiple, cfg.reference_layer, nets.electricals, paths, diagnostics)

    def vectorize(
        self,
        design: Design,
        levels: Sequence[str] = LEVELS,
        diagnostics: Optional[List[str]] = None,
    ) -> FoundationBundle:
        """
        Extract the requested levels. Lower levels that a requested level
        depends on are computed but only requested ones land in the bundle.
        """
        wanted = set(levels)
        bundle = FoundationBundle()
        nets = self.generate_nets(design)
        if "net" in wanted:
            bundle.nets = nets.netvecs
        if "graph" in wanted:
            bundle.graph = self.generate_graph(design, diagnostics)
        paths: List[PathVec] = []
        if wanted & {"path", "patch", "design"}:
            paths = self.generate_paths(design, nets, diagnostics)
        if "path" in wanted:
            bundle.paths = paths
        patches: Optional[List[PatchVec]] = None
        if wanted & {"patch", "design"}:
            grid, patches = self.generate_patches(design, nets, paths, diagnostics)
            if "patch" in wanted:
                bundle.grid = grid_spec(grid, self.config.patch_multiple, self.config.reference_layer)
                bundle.patches = patches
        if "design" in wanted:
            bundle.design = extract_design_stats(
                design, paths, nets.netvecs, patches, nets.electricals, self.config.clock_period
            )
        logger.info(f"✅ Vectorized {design.name}: {', '.join(l for l in LEVELS if l in wanted)}")
        return bundle


# Global service instance
vector_service = VectorService()
