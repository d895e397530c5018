"""
Fidelity Service - rebuild a design from Foundation Data and measure what was lost
"""
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

import constants
from exceptions import ConstantColumn, IncompleteBundle, IncomparableDesigns, TechError
from models.design import Design, Instance, InstanceClass, Net, NetPin, PinDirection, Port
from models.geometry import Point, Rect, ViaInstance, WireSegment
from models.schemas import FidelityMetrics, FidelityReport, FoundationBundle, WorkspaceConfig
from services.def_service import pin_position
from services.insight_service import pearson
from services.patch_service import cell_density_map, patch_grid
from services.vector_service import VectorService

logger = logging.getLogger(__name__)


def reconstruct_design(bundle: FoundationBundle, tech) -> Design:
    """
    Design rebuilt from the design, graph and net levels.

    Wired nets come back from their NetVec geometry verbatim; nets without
    wiring are recovered from graph edges.
    """
    missing = [lvl for lvl, val in (("design", bundle.design), ("graph", bundle.graph), ("net", bundle.nets)) if val is None]
    if missing:
        raise IncompleteBundle(f"bundle lacks {', '.join(missing)} level(s) needed for reconstruction")
    dv = bundle.design
    if dv.dbu_per_micron != tech.dbu_per_micron:
        raise TechError(f"bundle DBU {dv.dbu_per_micron} differs from technology DBU {tech.dbu_per_micron}")

    instances: List[Instance] = []
    ports: List[Port] = []
    for node in bundle.graph.nodes:
        if node.cls == "port":
            ports.append(Port(node.name, Point(node.x, node.y), node.direction or "INPUT"))
        else:
            if node.master is None:
                raise IncompleteBundle(f"graph node {node.name} has no master")
            instances.append(Instance(node.name, node.master, Point(node.x, node.y), InstanceClass(node.cls), node.orient))
    by_inst = {i.name: i for i in instances}
    by_port = {p.name: p for p in ports}
    node_name = {n.id: n.name for n in bundle.graph.nodes}
    node_is_port = {n.id: n.cls == "port" for n in bundle.graph.nodes}

    def net_pin(owner_id: int, pin: str, direction: PinDirection) -> NetPin:
        name = node_name[owner_id]
        if node_is_port[owner_id]:
            return NetPin("PIN", name, by_port[name].position, direction)
        pos = pin_position(tech, by_inst[name], pin)
        if pos is None:
            raise IncompleteBundle(f"pin {name}/{pin} not found in master {by_inst[name].master}")
        return NetPin(name, pin, pos, direction)

    nets: Dict[str, Net] = {}
    for nv in bundle.nets:
        pins = [
            NetPin(p.owner, p.pin, Point(p.x, p.y), PinDirection.DRIVER if p.direction == "driver" else PinDirection.LOAD)
            for p in nv.pins
        ]
        nets[nv.name] = Net(
            nv.name,
            pins,
            [WireSegment(*w) for w in nv.wires],
            [ViaInstance(*v) for v in nv.vias],
        )
    wireless: Dict[str, List] = defaultdict(list)
    for e in bundle.graph.edges:
        if e.net not in nets:
            wireless[e.net].append(e)
    for name, edges in wireless.items():
        first = edges[0]
        pins = [net_pin(first.src, first.src_pin, PinDirection.DRIVER)]
        pins += [net_pin(e.dst, e.dst_pin, PinDirection.LOAD) for e in edges]
        nets[name] = Net(name, pins)

    design = Design(
        name=dv.name,
        tech=tech,
        die=Rect.from_coords(*dv.die),
        core=Rect.from_coords(*dv.core),
        instances=instances,
        ports=ports,
        nets=list(nets.values()),
    )
    lost = dv.counts.nets - len(design.nets)
    if lost > 0:
        msg = f"{lost} nets without wiring or loads could not be recovered"
        design.diagnostics.append(msg)
        logger.warning(f"⚠️ {msg}")
    logger.info(f"✅ Reconstructed {design.name}: {len(instances)} instances, {len(design.nets)} nets")
    return design


def fidelity_ratio(original: Optional[float], reconstructed: Optional[float]) -> Tuple[Optional[float], Optional[float]]:
    """
    (ratio, difference) with sign-safe handling: equal signs divide, mixed
    signs report only the difference, two zeros give 1.0.
    """
    if original is None or reconstructed is None:
        return None, None
    diff = reconstructed - original
    if original == 0 and reconstructed == 0:
        return 1.0, 0.0
    if original == 0 or (original < 0) != (reconstructed < 0) or reconstructed == 0:
        return None, diff
    return reconstructed / original, diff


@dataclass
class _Analysis:
    metrics: FidelityMetrics
    density: np.ndarray


class FidelityService:
    def __init__(self, config: Optional[WorkspaceConfig] = None):
        self.config = config or WorkspaceConfig()

    def _analyse(self, design: Design, coarsen: int) -> _Analysis:
        vs = VectorService(self.config, threads=1)
        nets = vs.generate_nets(design)
        paths = vs.generate_paths(design, nets)
        slacks = [p.slack for p in paths]
        metrics = FidelityMetrics(
            rwl=sum(s.length for n in design.nets for s in n.routing),
            wns=min(slacks) if slacks else None,
            tns=sum(s for s in slacks if s < 0),
            violating_paths=sum(1 for s in slacks if s < 0),
            power=sum(e.power for _, e in sorted(nets.electricals.items())),
        )
        grid = patch_grid(design, self.config.patch_multiple * coarsen, self.config.reference_layer)
        return _Analysis(metrics, cell_density_map(design, grid))

    def compare(self, original: Design, reconstructed: Design, coarsen: int = constants.DEFAULT_COARSEN) -> FidelityReport:
        """
        Metric ratios (reconstructed / original) and the Pearson correlation of
        cell-density maps, the reconstructed one taken on a grid `coarsen`
        times coarser and expanded back onto the original grid.
        """
        if original.die != reconstructed.die:
            raise IncomparableDesigns(f"die {original.die.as_tuple()} vs {reconstructed.die.as_tuple()}")
        if original.tech.dbu_per_micron != reconstructed.tech.dbu_per_micron:
            raise IncomparableDesigns("designs use different DBU scales")
        if coarsen < 1:
            raise IncomparableDesigns(f"coarsen factor must be >= 1, got {coarsen}")

        with ThreadPoolExecutor(max_workers=2) as pool:
            fut_o = pool.submit(self._analyse, original, 1)
            fut_r = pool.submit(self._analyse, reconstructed, coarsen)
            orig, recon = fut_o.result(), fut_r.result()

        diagnostics: List[str] = list(reconstructed.diagnostics)
        ny, nx = orig.density.shape
        expanded = recon.density[np.arange(ny)[:, None] // coarsen, np.arange(nx)[None, :] // coarsen]
        try:
            corr = pearson(orig.density.ravel(), expanded.ravel(), "cell_density")
        except ConstantColumn as e:
            corr = None
            diagnostics.append(f"density correlation undefined: {e}")
            logger.warning(f"⚠️ density correlation undefined: {e}")

        o, r = orig.metrics, recon.metrics
        wl_ratio, _ = fidelity_ratio(o.rwl, r.rwl)
        wns_ratio, wns_diff = fidelity_ratio(o.wns, r.wns)
        tns_ratio, tns_diff = fidelity_ratio(o.tns, r.tns)
        power_ratio, _ = fidelity_ratio(o.power, r.power)

        def near_one(ratio: Optional[float]) -> Optional[bool]:
            return None if ratio is None else abs(ratio - 1.0) <= constants.FIDELITY_RATIO_TOLERANCE

        report = FidelityReport(
            design=original.name,
            coarsen=coarsen,
            wirelength_ratio=wl_ratio,
            wns_ratio=wns_ratio,
            wns_diff=wns_diff,
            tns_ratio=tns_ratio,
            tns_diff=tns_diff,
            violating_paths=(o.violating_paths, r.violating_paths),
            power_ratio=power_ratio,
            density_correlation=corr,
            original=o,
            reconstructed=r,
            passed={
                "wirelength": near_one(wl_ratio),
                "wns": near_one(wns_ratio),
                "tns": near_one(tns_ratio),
                "violating_paths": o.violating_paths == r.violating_paths,
                "power": near_one(power_ratio),
                "density": None if corr is None else corr >= constants.FIDELITY_MIN_CORRELATION,
            },
            diagnostics=diagnostics,
        )
        logger.info(f"🔍 Fidelity {original.name}: wirelength {wl_ratio}, WNS {wns_ratio}, density r={corr}")
        return report


def compare(original: Design, reconstructed: Design, coarsen: int = 1, config: Optional[WorkspaceConfig] = None) -> FidelityReport:
    return FidelityService(config).compare(original, reconstructed, coarsen)
