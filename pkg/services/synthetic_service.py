"""
Synthetic Design Service - seeded placed-and-routed designs without external EDA tools

Pipeline: technology -> instance sequence -> row placement (snake order over a
utilization field) -> star netlist drawn from a rank window -> MST L-routing.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

import constants
from exceptions import CapacityError, ValidationFailure
from models.design import (
    CellMaster,
    Design,
    Instance,
    Layer,
    MasterPin,
    Net,
    NetPin,
    PinDirection,
    Port,
    Site,
    TechLib,
    ViaDef,
)
from models.geometry import Point, Rect, ViaInstance, WireSegment
from models.schemas import SyntheticParams
from services.def_service import pin_position
from services.design_service import classify_instance, validate_design

logger = logging.getLogger(__name__)

# name: (sites, inputs, outputs, intrinsic s, drive ohm, pin cap F)
COMB_MASTERS = {
    "INV": (2, ["A"], ["Y"], 12e-12, 1800.0, 1.0e-15),
    "BUF": (3, ["A"], ["Y"], 20e-12, 1200.0, 1.0e-15),
    "NAND2": (3, ["A", "B"], ["Y"], 16e-12, 2200.0, 1.2e-15),
    "NOR2": (3, ["A", "B"], ["Y"], 20e-12, 2600.0, 1.2e-15),
    "NAND3": (4, ["A", "B", "C"], ["Y"], 22e-12, 2800.0, 1.3e-15),
    "AOI21": (4, ["A1", "A2", "B"], ["Y"], 24e-12, 3000.0, 1.3e-15),
    "AOI22": (5, ["A1", "A2", "B1", "B2"], ["Y"], 28e-12, 3200.0, 1.4e-15),
}
COMB_MIX = {"INV": 0.15, "BUF": 0.05, "NAND2": 0.25, "NOR2": 0.15, "NAND3": 0.10, "AOI21": 0.15, "AOI22": 0.15}
FANOUT_PER_CLKBUF = 16
MACRO_SITES = 100
MACRO_ROWS = 10
MACRO_BITS = 8


def build_synthetic_tech(n_layers: int = 6, with_macro: bool = False) -> TechLib:
    """Technology with alternating H/V metals, adjacent-layer vias and a small cell library."""
    layers: List[Layer] = []
    for n in range(1, n_layers + 1):
        pitch = constants.SYNTH_PITCH if n <= 4 else 2 * constants.SYNTH_PITCH
        layers.append(Layer(
            name=f"M{n}",
            index=len(layers),
            kind="ROUTING",
            pitch=pitch,
            width=pitch // 2,
            direction="HORIZONTAL" if n % 2 else "VERTICAL",
            unit_r=2.0e-3 if n <= 2 else (1.0e-3 if n <= 4 else 0.3e-3),
            unit_c=1.6e-19 if n <= 2 else (1.8e-19 if n <= 4 else 2.0e-19),
        ))
        if n < n_layers:
            layers.append(Layer(name=f"V{n}", index=len(layers), kind="CUT", direction="NONE"))
    vias = [ViaDef(name=f"VIA{n}{n + 1}", layer_bot=n, layer_top=n + 1) for n in range(1, n_layers)]

    sw, rh = constants.SYNTH_SITE_WIDTH, constants.SYNTH_ROW_HEIGHT
    masters = []
    for name, (sites, ins, outs, intrinsic, drive, cap) in COMB_MASTERS.items():
        masters.append(_cell_master(name, sites * sw, rh, ins, outs, intrinsic, drive, cap))
    masters.append(_cell_master("DFF", 10 * sw, rh, ["D", "CK"], ["Q"], 60e-12, 1500.0, 1.5e-15,
                                clock_pin="CK", sequential=True))
    masters.append(_cell_master("CLKBUF", 4 * sw, rh, ["A"], ["Y"], 18e-12, 600.0, 2.0e-15))
    if with_macro:
        w, h = MACRO_SITES * sw, MACRO_ROWS * rh
        pins = []
        ins = [f"A{i}" for i in range(MACRO_BITS)] + ["CLK"]
        for i, p in enumerate(ins):
            pins.append(MasterPin(p, "INPUT", Point((2 * i + 1) * w // (2 * len(ins)), 100),
                                  "CLOCK" if p == "CLK" else "SIGNAL"))
        for i in range(MACRO_BITS):
            pins.append(MasterPin(f"Q{i}", "OUTPUT", Point((2 * i + 1) * w // (2 * MACRO_BITS), h - 100)))
        masters.append(CellMaster(
            name="SRAM8X8", width=w, height=h, cls="BLOCK", pins=tuple(pins),
            pin_cap=3.0e-15, drive_resistance=800.0, intrinsic_delay=300e-12, is_sequential=True,
        ))
    return TechLib(
        dbu_per_micron=constants.DEFAULT_DBU_PER_MICRON,
        layers=layers,
        vias=vias,
        masters=masters,
        site=Site("core", sw, rh),
    )


def _cell_master(name, width, height, ins, outs, intrinsic, drive, cap, clock_pin=None, sequential=False) -> CellMaster:
    names = list(ins) + list(outs)
    pins = []
    for i, p in enumerate(names):
        x = (2 * i + 1) * width // (2 * len(names))
        if p in outs:
            pins.append(MasterPin(p, "OUTPUT", Point(x, 900)))
        else:
            pins.append(MasterPin(p, "INPUT", Point(x, 500), "CLOCK" if p == clock_pin else "SIGNAL"))
    return CellMaster(
        name=name, width=width, height=height, cls="CORE", pins=tuple(pins),
        pin_cap=cap, drive_resistance=drive, intrinsic_delay=intrinsic, is_sequential=sequential,
    )


@dataclass
class _Slot:
    owner: str
    pin: str
    sink: bool  # sequential data input: legal load for any driver


class SyntheticGenerator:
    def __init__(self, params: SyntheticParams):
        self.params = params
        self.rng = np.random.default_rng(params.seed)
        self.tech = build_synthetic_tech(params.n_routing_layers, params.n_macros > 0)
        self.sw = constants.SYNTH_SITE_WIDTH
        self.rh = constants.SYNTH_ROW_HEIGHT

    # instance sequence
    def _instances(self) -> Tuple[List[Tuple[str, str]], List[Tuple[str, str]]]:
        p = self.params
        n = p.n_instances
        n_seq = int(round(p.sequential_fraction * n))
        while n_seq > 0 and n_seq + math.ceil(n_seq / FANOUT_PER_CLKBUF) > n:
            n_seq -= 1
        n_clk = math.ceil(n_seq / FANOUT_PER_CLKBUF)
        n_comb = n - n_seq - n_clk
        names = list(COMB_MIX)
        weights = np.array([COMB_MIX[k] for k in names])
        picks = self.rng.choice(len(names), size=n_comb, p=weights / weights.sum())
        cells = [(f"u{i}", names[int(k)]) for i, k in enumerate(picks)]
        cells += [(f"ff{i}", "DFF") for i in range(n_seq)]
        cells += [(f"cb{i}", "CLKBUF") for i in range(n_clk)]
        order = self.rng.permutation(len(cells))
        sequence = [cells[int(i)] for i in order]
        macros = [(f"mem{i}", "SRAM8X8") for i in range(p.n_macros)]
        return sequence, macros

    # placement
    def _core(self, sequence, macros) -> Rect:
        p = self.params
        cell_area = sum(self.tech.master(m).width * self.rh for _, m in sequence)
        macro_area = sum(self.tech.master(m).width * self.tech.master(m).height for _, m in macros)
        if p.core_width and p.core_height:
            w = (p.core_width // self.sw) * self.sw
            h = (p.core_height // self.rh) * self.rh
        else:
            area = cell_area / p.utilization + macro_area * 1.05
            side = math.sqrt(area)
            w = max(1, math.ceil(side / self.sw)) * self.sw
            if macros:
                w = max(w, (MACRO_SITES + 20) * self.sw)
            h = max(1, math.ceil(area / w / self.rh)) * self.rh
            if macros:
                h = max(h, len(macros) * MACRO_ROWS * self.rh + self.rh)
        if w <= 0 or h <= 0:
            raise CapacityError("core is smaller than one site")
        free = w * h - macro_area
        if free <= 0 or cell_area / free > 0.95:
            raise CapacityError(f"cell area {cell_area} exceeds 95% of the free core area {max(free, 0)}")
        return Rect(Point(0, 0), Point(int(w), int(h)))

    def _utilization_field(self, core: Rect):
        p = self.params
        if p.profile == "uniform" or p.n_hotspots == 0:
            return lambda x, y: p.utilization
        centres = self.rng.uniform(0.0, 1.0, size=(p.n_hotspots, 2)) * [core.width, core.height]
        sigma = 0.18 * min(core.width, core.height)
        base = 0.55 * p.utilization
        peak = min(0.95, 1.3 * p.utilization) - base

        def field(x: float, y: float) -> float:
            d2 = ((centres[:, 0] - x) ** 2 + (centres[:, 1] - y) ** 2) / (2.0 * sigma * sigma)
            return float(min(0.95, max(0.1, base + peak * np.exp(-d2).max())))
        return field

    def _rows(self, core: Rect, macros) -> Tuple[List[Tuple[int, List[Tuple[int, int]]]], Dict[str, Point]]:
        n_rows = core.height // self.rh
        blocked: Dict[int, int] = {}
        macro_at: Dict[str, Point] = {}
        top = n_rows
        for name, master in macros:
            m = self.tech.master(master)
            rows = m.height // self.rh
            top -= rows
            if top < 0 or m.width > core.width:
                raise CapacityError(f"macro {name} does not fit the core")
            macro_at[name] = Point(core.lo.x, core.lo.y + top * self.rh)
            for r in range(top, top + rows):
                blocked[r] = max(blocked.get(r, 0), m.width)
        rows = []
        for r in range(n_rows):
            x0 = core.lo.x + blocked.get(r, 0)
            rows.append((core.lo.y + r * self.rh, [(x0, core.hi.x)] if x0 < core.hi.x else []))
        return rows, macro_at

    def _place(self, sequence, rows, field, scale: float) -> Optional[List[Tuple[Point, str]]]:
        placed: List[Tuple[Point, str]] = []
        slots = []
        for r, (y, ivs) in enumerate(rows):
            for iv in (ivs if r % 2 == 0 else list(reversed(ivs))):
                slots.append((r, y, iv))
        si = 0
        cursor = None
        for _, master in sequence:
            w = self.tech.master(master).width
            while True:
                if si >= len(slots):
                    return None
                r, y, (x0, x1) = slots[si]
                forward = r % 2 == 0
                if cursor is None:
                    cursor = x0 if forward else x1
                room = (x1 - cursor) if forward else (cursor - x0)
                if room >= w:
                    break
                si += 1
                cursor = None
            u = field(cursor, y + self.rh / 2)
            gap = int(round(scale * w * (1.0 / u - 1.0) / self.sw)) * self.sw
            orient = "N" if r % 2 == 0 else "FS"
            if forward:
                placed.append((Point(int(cursor), int(y)), orient))
                cursor += w + gap
            else:
                placed.append((Point(int(cursor - w), int(y)), orient))
                cursor -= w + gap
        return placed

    def _placement(self, sequence, rows, core):
        field = self._utilization_field(core)
        scale = 1.0
        for _ in range(40):
            placed = self._place(sequence, rows, field, scale)
            if placed is not None:
                return placed
            scale *= 0.85
        placed = self._place(sequence, rows, field, 0.0)
        if placed is None:
            raise CapacityError("instances do not fit the core rows")
        return placed

    # netlist
    def _pin_counts(self, n: int) -> np.ndarray:
        dist = self.params.pin_distribution
        keys = np.array(sorted(dist))
        probs = np.array([dist[k] for k in keys], dtype=float)
        return keys[self.rng.choice(len(keys), size=n, p=probs / probs.sum())]

    def generate(self) -> Design:
        p = self.params
        sequence, macros = self._instances()
        core = self._core(sequence, macros)
        rows, macro_at = self._rows(core, macros)
        placed = self._placement(sequence, rows, core)

        instances: List[Instance] = []
        inst_by_name: Dict[str, Instance] = {}
        for (name, master), (origin, orient) in zip(sequence, placed):
            inst = Instance(name, master, origin, classify_instance(master, self.tech), orient)
            instances.append(inst)
            inst_by_name[name] = inst
        for name, master in macros:
            inst = Instance(name, master, macro_at[name], classify_instance(master, self.tech), "N")
            instances.append(inst)
            inst_by_name[name] = inst

        n_seq_pos = len(sequence)
        # free load slots per sequence position; macros attach to the nearest placed cell
        free: List[List[_Slot]] = [[] for _ in range(n_seq_pos)]
        kind: List[str] = []
        for i, (name, master) in enumerate(sequence):
            m = self.tech.master(master)
            if master == "CLKBUF":
                kind.append("clock")
                continue
            kind.append("seq" if m.is_sequential else "comb")
            for pin in m.input_pins:
                if pin.use != "CLOCK":
                    free[i].append(_Slot(name, pin.name, m.is_sequential))
        macro_pos: Dict[str, int] = {}
        if n_seq_pos:
            centres = np.array([[o.x, o.y] for o, _ in placed], dtype=float)
            for name, master in macros:
                m = self.tech.master(master)
                c = macro_at[name]
                d = np.abs(centres[:, 0] - (c.x + m.width / 2)) + np.abs(centres[:, 1] - (c.y + m.height / 2))
                pos = int(np.argmin(d))
                macro_pos[name] = pos
                for pin in m.input_pins:
                    if pin.use != "CLOCK":
                        free[pos].append(_Slot(name, pin.name, True))

        # driver pool: (position, owner, pin, is_source)
        pool: List[Tuple[int, str, str, bool]] = []
        for i, (name, master) in enumerate(sequence):
            if master == "CLKBUF":
                continue
            m = self.tech.master(master)
            for pin in m.output_pins:
                pool.append((i, name, pin.name, m.is_sequential))
        for name, master in macros:
            for pin in self.tech.master(master).output_pins:
                pool.append((macro_pos.get(name, 0), name, pin.name, True))
        n_ports = min(p.n_inputs, p.n_nets)
        if p.n_nets > len(pool) + n_ports:
            raise CapacityError(f"{p.n_nets} nets requested but only {len(pool) + n_ports} drivers exist")
        drivers: List[Tuple[int, str, str, bool]] = []
        for k in range(n_ports):
            pos = int(self.rng.integers(0, max(n_seq_pos, 1)))
            drivers.append((pos, "PIN", f"in_{k}", True))
        chosen = self.rng.choice(len(pool), size=p.n_nets - n_ports, replace=False) if p.n_nets > n_ports else []
        drivers += [pool[int(i)] for i in sorted(int(c) for c in chosen)]
        drivers.sort(key=lambda d: (d[0], d[1], d[2]))

        counts = self._pin_counts(len(drivers))
        ports: Dict[str, str] = {f"in_{k}": "INPUT" for k in range(n_ports)}
        net_specs: List[Tuple[str, Tuple[str, str], List[Tuple[str, str]]]] = []
        window = p.locality
        n_out = 0
        for j, (pos, owner, pin, source) in enumerate(drivers):
            need = int(counts[j]) - 1
            loads: List[Tuple[str, str]] = []
            owners = {owner}
            tries = 0
            limit = 12 * need + 8
            while len(loads) < need and tries < limit and n_seq_pos:
                span = window if tries < limit // 2 else 4 * window
                tries += 1
                c = pos + int(self.rng.integers(-span, span + 1))
                if c < 0 or c >= n_seq_pos or not free[c]:
                    continue
                for si, slot in enumerate(free[c]):
                    if slot.owner in owners:
                        continue
                    if not slot.sink and not source and c <= pos:
                        continue
                    loads.append((slot.owner, slot.pin))
                    owners.add(slot.owner)
                    del free[c][si]
                    break
            if not loads:
                port = f"out_{n_out}"
                n_out += 1
                ports[port] = "OUTPUT"
                loads.append(("PIN", port))
            net_specs.append((f"n{j}", (owner, pin), loads))

        # clock tree: clk port -> CLKBUF inputs; each CLKBUF -> nearest DFF clock pins
        clkbufs = [i for i, (_, m) in enumerate(sequence) if m == "CLKBUF"]
        flops = [i for i, (_, m) in enumerate(sequence) if m == "DFF"]
        macro_names = [name for name, _ in macros]
        if clkbufs or macro_names:
            ports["clk"] = "INPUT"
            root_loads = [(sequence[i][0], "A") for i in clkbufs] + [(name, "CLK") for name in macro_names]
            net_specs.append(("clk", ("PIN", "clk"), root_loads))
            groups: Dict[int, List[Tuple[str, str]]] = {i: [] for i in clkbufs}
            cb = np.array(clkbufs)
            for f in flops:
                nearest = int(cb[np.argmin(np.abs(cb - f))])
                groups[nearest].append((sequence[f][0], "CK"))
            for k, i in enumerate(clkbufs):
                if groups[i]:
                    net_specs.append((f"clk_{k}", (sequence[i][0], "Y"), groups[i]))

        port_objs = self._place_ports(ports, net_specs, inst_by_name, core)
        design = Design(
            name=p.name,
            tech=self.tech,
            die=core,
            core=core,
            instances=instances,
            ports=list(port_objs.values()),
            nets=[],
        )
        nets = []
        for name, drv, loads in net_specs:
            pins = [self._net_pin(drv, PinDirection.DRIVER, inst_by_name, port_objs)]
            pins += [self._net_pin(l, PinDirection.LOAD, inst_by_name, port_objs) for l in loads]
            routing, vias = self._route([pn.position for pn in pins], core)
            nets.append(Net(name=name, pins=pins, routing=routing, vias=vias))
        design.nets = sorted(nets, key=lambda n: n.name)
        design.reindex()

        violations = validate_design(design)
        if violations:
            raise ValidationFailure(violations)
        logger.info(
            f"✅ Generated {design.name}: {len(design.instances)} instances, {len(design.nets)} nets, "
            f"core {core.width}x{core.height} DBU"
        )
        return design

    def _net_pin(self, ref, direction, inst_by_name, ports) -> NetPin:
        owner, pin = ref
        if owner == "PIN":
            return NetPin(owner, pin, ports[pin].position, direction)
        return NetPin(owner, pin, pin_position(self.tech, inst_by_name[owner], pin), direction)

    def _place_ports(self, ports, net_specs, inst_by_name, core: Rect) -> Dict[str, Port]:
        anchor: Dict[str, List[Point]] = {name: [] for name in ports}
        for _, drv, loads in net_specs:
            refs = [drv] + loads
            others = [pin_position(self.tech, inst_by_name[o], pn) for o, pn in refs if o != "PIN"]
            for o, pn in refs:
                if o == "PIN":
                    anchor[pn].extend(others)
        taken = set()
        out: Dict[str, Port] = {}
        step = self.tech.metal(1).pitch
        for name in sorted(ports):
            pts = anchor[name]
            if name == "clk":
                x, y = core.lo.x + (core.width // 2 // step) * step, core.lo.y
                horizontal_edge = True
            else:
                cx = sum(q.x for q in pts) / len(pts) if pts else core.lo.x
                cy = sum(q.y for q in pts) / len(pts) if pts else core.lo.y + core.height / 2
                x = core.lo.x if cx - core.lo.x <= core.hi.x - cx else core.hi.x
                y = core.lo.y + int(round((cy - core.lo.y) / step)) * step
                y = min(max(y, core.lo.y), core.hi.y)
                horizontal_edge = False
            while (x, y) in taken:
                if horizontal_edge:
                    x = x + step if x + step <= core.hi.x else core.lo.x
                else:
                    y = y + step if y + step <= core.hi.y else core.lo.y
            taken.add((x, y))
            out[name] = Port(name, Point(int(x), int(y)), ports[name])
        return out

    # routing
    def _layer_pair(self, length: int) -> Tuple[int, int]:
        n = self.params.n_routing_layers
        h_layers = [l for l in range(3, n + 1, 2)] or [1]
        v_layers = [l for l in range(2, n + 1, 2)]
        pitch = constants.SYNTH_PITCH
        tier = 0 if length < 10 * pitch else (1 if length < 50 * pitch else 2)
        pairs = []
        for t in range(max(len(h_layers), len(v_layers))):
            pairs.append((h_layers[min(t, len(h_layers) - 1)], v_layers[min(t, len(v_layers) - 1)]))
        return pairs[min(tier, len(pairs) - 1)]

    @staticmethod
    def _via_stack(x: int, y: int, lo: int, hi: int, vias: List[ViaInstance]) -> None:
        for n in range(min(lo, hi), max(lo, hi)):
            vias.append(ViaInstance(x, y, n, n + 1))

    def _route(self, pts: List[Point], core: Rect) -> Tuple[List[WireSegment], List[ViaInstance]]:
        unique = sorted(set(pts), key=pts.index)
        if len(unique) < 2:
            return [], []
        xy = np.array([[q.x, q.y] for q in unique], dtype=np.int64)
        n = len(unique)
        in_tree = np.zeros(n, dtype=bool)
        in_tree[0] = True
        best = np.abs(xy[:, 0] - xy[0, 0]) + np.abs(xy[:, 1] - xy[0, 1])
        parent = np.zeros(n, dtype=np.int64)
        edges = []
        for _ in range(n - 1):
            cand = np.where(in_tree, np.iinfo(np.int64).max, best)
            v = int(np.argmin(cand))
            edges.append((int(parent[v]), v))
            in_tree[v] = True
            d = np.abs(xy[:, 0] - xy[v, 0]) + np.abs(xy[:, 1] - xy[v, 1])
            closer = d < best
            best = np.where(closer, d, best)
            parent = np.where(closer, v, parent)

        segments: List[WireSegment] = []
        vias: List[ViaInstance] = []
        for a_i, b_i in edges:
            a, b = unique[a_i], unique[b_i]
            h_layer, v_layer = self._layer_pair(abs(a.x - b.x) + abs(a.y - b.y))
            if a.y == b.y:
                segments.append(WireSegment(a.x, a.y, b.x, b.y, h_layer))
                self._via_stack(a.x, a.y, 1, h_layer, vias)
                self._via_stack(b.x, b.y, 1, h_layer, vias)
            elif a.x == b.x:
                segments.append(WireSegment(a.x, a.y, b.x, b.y, v_layer))
                self._via_stack(a.x, a.y, 1, v_layer, vias)
                self._via_stack(b.x, b.y, 1, v_layer, vias)
            else:
                shape = int(self.rng.integers(0, 4))
                if shape == 2 and abs(b.x - a.x) >= 2:
                    # Z: horizontal, vertical jog at xm, horizontal
                    xm = min(a.x, b.x) + int(self.rng.integers(1, abs(b.x - a.x)))
                    segments.append(WireSegment(a.x, a.y, xm, a.y, h_layer))
                    segments.append(WireSegment(xm, a.y, xm, b.y, v_layer))
                    segments.append(WireSegment(xm, b.y, b.x, b.y, h_layer))
                    self._via_stack(a.x, a.y, 1, h_layer, vias)
                    self._via_stack(xm, a.y, v_layer, h_layer, vias)
                    self._via_stack(xm, b.y, v_layer, h_layer, vias)
                    self._via_stack(b.x, b.y, 1, h_layer, vias)
                elif shape == 3 and abs(b.y - a.y) >= 2:
                    # Z: vertical, horizontal jog at ym, vertical
                    ym = min(a.y, b.y) + int(self.rng.integers(1, abs(b.y - a.y)))
                    segments.append(WireSegment(a.x, a.y, a.x, ym, v_layer))
                    segments.append(WireSegment(a.x, ym, b.x, ym, h_layer))
                    segments.append(WireSegment(b.x, ym, b.x, b.y, v_layer))
                    self._via_stack(a.x, a.y, 1, v_layer, vias)
                    self._via_stack(a.x, ym, v_layer, h_layer, vias)
                    self._via_stack(b.x, ym, v_layer, h_layer, vias)
                    self._via_stack(b.x, b.y, 1, v_layer, vias)
                elif shape % 2 == 0:
                    # horizontal first
                    segments.append(WireSegment(a.x, a.y, b.x, a.y, h_layer))
                    segments.append(WireSegment(b.x, a.y, b.x, b.y, v_layer))
                    self._via_stack(a.x, a.y, 1, h_layer, vias)
                    self._via_stack(b.x, a.y, v_layer, h_layer, vias)
                    self._via_stack(b.x, b.y, 1, v_layer, vias)
                else:
                    segments.append(WireSegment(a.x, a.y, a.x, b.y, v_layer))
                    segments.append(WireSegment(a.x, b.y, b.x, b.y, h_layer))
                    self._via_stack(a.x, a.y, 1, v_layer, vias)
                    self._via_stack(a.x, b.y, v_layer, h_layer, vias)
                    self._via_stack(b.x, b.y, 1, h_layer, vias)
        deduped = list(dict.fromkeys(vias))
        return segments, deduped


def generate_synthetic(params: SyntheticParams) -> Design:
    """Placed, fully routed design; identical output for identical params."""
    return SyntheticGenerator(params).generate()
