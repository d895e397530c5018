"""
RC Service - Elmore delay on RC trees and per-net electricals
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import constants
from exceptions import TechError
from models.design import TechLib
from models.schemas import LoadTiming, NetElectricals, NetVec
from services.net_service import RoutingTree, routing_tree_of

logger = logging.getLogger(__name__)


def elmore(parent: Sequence[int], order: Sequence[int], edge_r: Sequence[float], node_cap: Sequence[float]) -> Tuple[List[float], List[float]]:
    """
    Elmore delay at every node of an RC tree.

    parent[v] is -1 at the root; order lists nodes parents-first; edge_r[v] is
    the resistance between v and its parent. Returns (delay, downstream cap).
    """
    n = len(parent)
    down = list(node_cap)
    for v in reversed(order):
        p = parent[v]
        if p >= 0:
            down[p] += down[v]
    delay = [0.0] * n
    for v in order:
        p = parent[v]
        if p >= 0:
            delay[v] = delay[p] + edge_r[v] * down[v]
    return delay, down


def switching_power(capacitance: float, activity: float, vdd: float, frequency: float) -> float:
    return activity * frequency * vdd * vdd * capacitance


def _unit_rc(tech: TechLib, layer: int) -> Tuple[float, float]:
    try:
        l = tech.metal(layer)
    except KeyError:
        raise TechError(f"routing layer {layer} not in technology")
    if l.unit_r is None or l.unit_c is None:
        raise TechError(f"layer {l.name} has no unit R/C")
    return l.unit_r, l.unit_c


def tree_electricals(
    tree: RoutingTree,
    tech: TechLib,
    pin_caps: Dict[str, float],
    activity: float = constants.DEFAULT_ACTIVITY,
    vdd: float = constants.DEFAULT_VDD,
    frequency: float = 1.0 / constants.DEFAULT_CLOCK_PERIOD,
) -> NetElectricals:
    n = len(tree.nodes)
    node_cap = [0.0] * n
    edge_r = [0.0] * n
    r_total = 0.0
    c_wire = 0.0
    tree_edge = {v: e for v, e in enumerate(tree.parent_edge) if e >= 0}
    for e_idx, (u, v, length, layer) in enumerate(tree.edges):
        if layer is None:
            continue
        ur, uc = _unit_rc(tech, layer)
        r, c = ur * length, uc * length
        r_total += r
        c_wire += c
        node_cap[u] += c / 2.0
        node_cap[v] += c / 2.0
    for v, e_idx in tree_edge.items():
        u, w, length, layer = tree.edges[e_idx]
        if layer is not None:
            edge_r[v] = _unit_rc(tech, layer)[0] * length
    c_pins = 0.0
    for label, node in tree.load_nodes.items():
        cap = pin_caps.get(label, 0.0)
        node_cap[node] += cap
        c_pins += cap

    delay, down = elmore(tree.parent, tree.order, edge_r, node_cap)
    path_r = [0.0] * n
    for v in tree.order:
        p = tree.parent[v]
        if p >= 0:
            path_r[v] = path_r[p] + edge_r[v]
    loads = [
        LoadTiming(
            pin=label,
            elmore=delay[node],
            slew=constants.LN9 * delay[node],
            resistance=path_r[node],
        )
        for label, node in tree.load_nodes.items()
    ]
    c_total = c_wire + c_pins
    return NetElectricals(
        resistance=r_total,
        capacitance=c_total,
        wire_capacitance=c_wire,
        loads=loads,
        power=switching_power(c_total, activity, vdd, frequency),
    )


def net_electricals(
    netvec: NetVec,
    tech: TechLib,
    pin_caps: Dict[str, float],
    activity: float = constants.DEFAULT_ACTIVITY,
    vdd: float = constants.DEFAULT_VDD,
    frequency: Optional[float] = None,
) -> NetElectricals:
    """Segment R/C from unit values, Elmore and slew per load, switching power."""
    freq = frequency if frequency is not None else 1.0 / constants.DEFAULT_CLOCK_PERIOD
    return tree_electricals(routing_tree_of(netvec), tech, pin_caps, activity, vdd, freq)


def lumped_electricals(
    load_labels: Sequence[str],
    pin_caps: Dict[str, float],
    activity: float = constants.DEFAULT_ACTIVITY,
    vdd: float = constants.DEFAULT_VDD,
    frequency: float = 1.0 / constants.DEFAULT_CLOCK_PERIOD,
) -> NetElectricals:
    """Electricals of a net without wiring: zero R, pin capacitance only."""
    c = sum(pin_caps.get(l, 0.0) for l in load_labels)
    return NetElectricals(
        resistance=0.0,
        capacitance=c,
        wire_capacitance=0.0,
        loads=[LoadTiming(pin=l, elmore=0.0, slew=0.0, resistance=0.0) for l in load_labels],
        power=switching_power(c, activity, vdd, frequency),
    )
