"""
Net Service - routing graph construction and pin-to-pin net decomposition
"""
import bisect
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from exceptions import ConnectivityError
from models.design import Net, PinDirection
from models.geometry import Point, ViaInstance, WireSegment
from models.schemas import NetFeatures, NetVec, PinRecord, SubnetRecord
from services.geom_service import bounding_box, hpwl
from services.steiner_service import estimate_rsmt

logger = logging.getLogger(__name__)

Node = Tuple[int, int, int]  # (x, y, layer)


@dataclass
class RoutingTree:
    """
    Routing graph of one net reduced to its BFS spanning tree from the driver.

    edges are (u, v, length, layer); layer is None for vias and pin ties.
    Off-tree edges stay in `edges` so their capacitance is still counted.
    """
    nodes: List[Node] = field(default_factory=list)
    edges: List[Tuple[int, int, int, Optional[int]]] = field(default_factory=list)
    parent: List[int] = field(default_factory=list)
    parent_edge: List[int] = field(default_factory=list)
    order: List[int] = field(default_factory=list)
    root: int = -1
    load_nodes: Dict[str, int] = field(default_factory=dict)

    def path_to(self, node: int) -> List[int]:
        out = []
        while node >= 0:
            out.append(node)
            node = self.parent[node]
        out.reverse()
        return out

    def children_count(self) -> List[int]:
        count = [0] * len(self.nodes)
        for v, p in enumerate(self.parent):
            if p >= 0:
                count[p] += 1
        return count


@dataclass(frozen=True)
class _PinRef:
    label: str
    position: Point
    is_driver: bool


def _split_points(segments: Sequence[WireSegment], vias: Sequence[ViaInstance], pins: Sequence[_PinRef]):
    # per layer: y -> sorted xs (for horizontal cuts) and x -> sorted ys (vertical cuts)
    by_y: Dict[int, Dict[int, set]] = defaultdict(lambda: defaultdict(set))
    by_x: Dict[int, Dict[int, set]] = defaultdict(lambda: defaultdict(set))
    global_pts = [(p.position.x, p.position.y) for p in pins]

    def add(layer: int, x: int, y: int) -> None:
        by_y[layer][y].add(x)
        by_x[layer][x].add(y)

    for s in segments:
        add(s.layer, s.xs, s.ys)
        add(s.layer, s.xe, s.ye)
    for v in vias:
        add(v.layer_bot, v.xc, v.yc)
        add(v.layer_top, v.xc, v.yc)
    layers = {s.layer for s in segments}
    for layer in layers:
        for x, y in global_pts:
            add(layer, x, y)
    sorted_y = {l: {y: sorted(xs) for y, xs in d.items()} for l, d in by_y.items()}
    sorted_x = {l: {x: sorted(ys) for x, ys in d.items()} for l, d in by_x.items()}
    return sorted_y, sorted_x


def build_routing_tree(
    net_name: str,
    pins: Sequence[_PinRef],
    segments: Sequence[WireSegment],
    vias: Sequence[ViaInstance],
) -> RoutingTree:
    tree = RoutingTree()
    index: Dict[Node, int] = {}

    def node(key: Node) -> int:
        i = index.get(key)
        if i is None:
            i = len(tree.nodes)
            index[key] = i
            tree.nodes.append(key)
        return i

    sorted_y, sorted_x = _split_points(segments, vias, pins)
    for s in segments:
        if s.length == 0:
            node((s.xs, s.ys, s.layer))
            continue
        if s.ys == s.ye:
            lo, hi = sorted((s.xs, s.xe))
            xs = sorted_y[s.layer][s.ys]
            cuts = xs[bisect.bisect_left(xs, lo): bisect.bisect_right(xs, hi)]
            keys = [(x, s.ys, s.layer) for x in cuts]
        else:
            lo, hi = sorted((s.ys, s.ye))
            ys = sorted_x[s.layer][s.xs]
            cuts = ys[bisect.bisect_left(ys, lo): bisect.bisect_right(ys, hi)]
            keys = [(s.xs, y, s.layer) for y in cuts]
        for a, b in zip(keys, keys[1:]):
            length = abs(b[0] - a[0]) + abs(b[1] - a[1])
            tree.edges.append((node(a), node(b), length, s.layer))
    for v in vias:
        tree.edges.append((node((v.xc, v.yc, v.layer_bot)), node((v.xc, v.yc, v.layer_top)), 0, None))

    # pins tie every routing node at their point together
    at_point: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for i, (x, y, _) in enumerate(tree.nodes):
        at_point[(x, y)].append(i)
    pin_node: Dict[str, int] = {}
    tied = set()
    for p in pins:
        key = (p.position.x, p.position.y)
        here = sorted(at_point.get(key, []), key=lambda i: tree.nodes[i][2])
        if not here:
            continue
        pin_node[p.label] = here[0]
        if key not in tied:
            tied.add(key)
            for other in here[1:]:
                tree.edges.append((here[0], other, 0, None))

    driver = next((p for p in pins if p.is_driver), None)
    loads = [p for p in pins if not p.is_driver]
    if driver is None:
        raise ConnectivityError(net_name, ["<driver>"])
    if driver.label not in pin_node:
        if not all(p.position == driver.position for p in loads):
            raise ConnectivityError(net_name, [driver.label] + [p.label for p in loads if p.label not in pin_node])
        # every pin sits on one point: a single-node tree
        only = node((driver.position.x, driver.position.y, 1))
        for p in pins:
            pin_node[p.label] = only
    unreached = [p.label for p in loads if p.label not in pin_node]

    n = len(tree.nodes)
    adj: List[List[Tuple[int, int]]] = [[] for _ in range(n)]
    for e_idx, (u, v, _, _) in enumerate(tree.edges):
        adj[u].append((v, e_idx))
        adj[v].append((u, e_idx))
    tree.parent = [-1] * n
    tree.parent_edge = [-1] * n
    if not unreached:
        root = pin_node[driver.label]
        tree.root = root
        seen = [False] * n
        seen[root] = True
        queue = deque([root])
        while queue:
            u = queue.popleft()
            tree.order.append(u)
            for v, e_idx in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    tree.parent[v] = u
                    tree.parent_edge[v] = e_idx
                    queue.append(v)
        unreached += [p.label for p in loads if p.label in pin_node and not seen[pin_node[p.label]]]
    if unreached:
        raise ConnectivityError(net_name, unreached)
    tree.load_nodes = {p.label: pin_node[p.label] for p in loads}
    return tree


def _pin_refs(pins: Sequence[PinRecord]) -> List[_PinRef]:
    out = []
    for p in pins:
        label = p.pin if p.owner == "PIN" else f"{p.owner}/{p.pin}"
        out.append(_PinRef(label, Point(p.x, p.y), p.direction == "driver"))
    return out


def routing_tree_of(netvec: NetVec) -> RoutingTree:
    segments = [WireSegment(*w) for w in netvec.wires]
    vias = [ViaInstance(*v) for v in netvec.vias]
    return build_routing_tree(netvec.name, _pin_refs(netvec.pins), segments, vias)


def _critical_walk(tree: RoutingTree, path: List[int], branching: List[int]) -> List[Node]:
    nodes = [tree.nodes[i] for i in path]
    if len(nodes) <= 2:
        return nodes
    keep = [nodes[0]]
    for k in range(1, len(nodes) - 1):
        a, b, c = nodes[k - 1], nodes[k], nodes[k + 1]
        same_layer = a[2] == b[2] == c[2]
        collinear = (a[0] == b[0] == c[0]) or (a[1] == b[1] == c[1])
        if not (same_layer and collinear) or branching[path[k]] > 1:
            keep.append(b)
    keep.append(nodes[-1])
    return keep


def count_bends(walk: Sequence[Node]) -> int:
    """Direction changes of a planar walk; vias and repeated points are ignored."""
    dirs = []
    for a, b in zip(walk, walk[1:]):
        if a[0] != b[0]:
            d = "h"
        elif a[1] != b[1]:
            d = "v"
        else:
            continue
        if not dirs or dirs[-1] != d:
            dirs.append(d)
    return max(0, len(dirs) - 1)


def aspect_ratio(w: int, h: int) -> float:
    if max(w, h) == 0:
        return 1.0
    return min(w, h) / max(w, h)


def pin_records(net: Net) -> List[PinRecord]:
    return [
        PinRecord(
            owner=p.owner,
            pin=p.pin,
            x=p.position.x,
            y=p.position.y,
            direction="driver" if p.direction == PinDirection.DRIVER else "load",
        )
        for p in net.pins
    ]


def decompose_net(net: Net, net_id: int = 0, max_bends: int = 1) -> NetVec:
    """
    Geometry part of a NetVec: wire/via tuples, driver-to-load subnets
    through Steiner and bend points, and the wirelength features.
    """
    return decompose_with_tree(net, net_id, max_bends)[0]


def decompose_with_tree(net: Net, net_id: int = 0, max_bends: int = 1) -> Tuple[NetVec, RoutingTree]:
    records = pin_records(net)
    refs = _pin_refs(records)
    tree = build_routing_tree(net.name, refs, net.routing, net.vias)
    branching = tree.children_count()

    subnets = []
    bends_ok = 0
    for label, node_idx in tree.load_nodes.items():
        walk = _critical_walk(tree, tree.path_to(node_idx), branching)
        if count_bends(walk) <= max_bends:
            bends_ok += 1
        subnets.append(SubnetRecord(load=label, nodes=walk))

    points = [p.position for p in net.pins]
    box = bounding_box(points)
    layer_wl: Dict[int, int] = {}
    for s in net.routing:
        layer_wl[s.layer] = layer_wl.get(s.layer, 0) + s.length
    n_loads = len(tree.load_nodes)
    features = NetFeatures(
        fanout=len(net.loads),
        aspect_ratio=aspect_ratio(box.width, box.height),
        hpwl=hpwl(points),
        rsmt=estimate_rsmt(points),
        l_ness=bends_ok / n_loads if n_loads else 1.0,
        rwl=sum(s.length for s in net.routing),
        via_count=len(net.vias),
        layer_wirelength=dict(sorted(layer_wl.items())),
    )
    netvec = NetVec(
        id=net_id,
        name=net.name,
        pins=records,
        bbox=box.as_tuple(),
        features=features,
        wires=[s.as_tuple() for s in net.routing],
        vias=[v.as_tuple() for v in net.vias],
        subnets=subnets,
    )
    return netvec, tree
