"""
Graph Service - star expansion of the netlist hypergraph into a directed graph
"""
import logging
from typing import Dict, List, Optional

from models.design import Design, PinDirection
from models.schemas import GraphEdge, GraphNode, GraphVec

logger = logging.getLogger(__name__)


def node_ids(design: Design) -> Dict[str, int]:
    """Dense ids: instances by name, then ports by name (ports keyed as PIN:<name>)."""
    ids: Dict[str, int] = {}
    for inst in sorted(design.instances, key=lambda i: i.name):
        ids[inst.name] = len(ids)
    for port in sorted(design.ports, key=lambda p: p.name):
        ids[f"PIN:{port.name}"] = len(ids)
    return ids


def owner_key(owner: str, pin: str) -> str:
    return f"PIN:{pin}" if owner == "PIN" else owner


def build_graph(design: Design, diagnostics: Optional[List[str]] = None) -> GraphVec:
    """One node per instance and port; one driver->load edge per load pin."""
    ids = node_ids(design)
    nodes: List[GraphNode] = []
    for inst in sorted(design.instances, key=lambda i: i.name):
        nodes.append(GraphNode(
            id=ids[inst.name],
            name=inst.name,
            cls=inst.cls.value,
            master=inst.master,
            x=inst.origin.x,
            y=inst.origin.y,
            orient=inst.orient,
        ))
    for port in sorted(design.ports, key=lambda p: p.name):
        nodes.append(GraphNode(
            id=ids[f"PIN:{port.name}"],
            name=port.name,
            cls="port",
            x=port.position.x,
            y=port.position.y,
            direction=port.direction,
        ))

    edges: List[GraphEdge] = []
    skipped = 0
    for net in sorted(design.nets, key=lambda n: n.name):
        driver = net.driver
        if driver is None:
            continue
        src = ids[owner_key(driver.owner, driver.pin)]
        for load in net.pins:
            if load.direction != PinDirection.LOAD:
                continue
            dst = ids[owner_key(load.owner, load.pin)]
            if dst == src:
                skipped += 1
                msg = f"net {net.name}: self-loop {driver.label} -> {load.label} skipped"
                logger.warning(f"⚠️ {msg}")
                if diagnostics is not None:
                    diagnostics.append(msg)
                continue
            edges.append(GraphEdge(src=src, dst=dst, net=net.name, src_pin=driver.pin, dst_pin=load.pin))
    logger.info(f"🔍 Graph built: {len(nodes)} nodes, {len(edges)} edges")
    return GraphVec(nodes=nodes, edges=edges)
