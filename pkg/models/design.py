"""
Design database: technology, cell masters, placed instances, ports and routed nets.

The Design is the single source of truth for every extraction. Lists are kept
in canonical (name) order so that structurally equal designs compare equal and
serialize identically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from models.geometry import Point, Rect, ViaInstance, WireSegment


class InstanceClass(str, Enum):
    CLOCK = "clock"
    LOGIC = "logic"
    MACRO = "macro"
    IOPAD = "iopad"


class PinDirection(str, Enum):
    DRIVER = "driver"
    LOAD = "load"


@dataclass(frozen=True)
class Layer:
    name: str
    index: int  # stack index; cut layers interleave so metals land on even indices
    kind: str = "ROUTING"  # ROUTING or CUT
    pitch: int = 0
    width: int = 0
    direction: str = "HORIZONTAL"
    unit_r: Optional[float] = None  # ohm per DBU
    unit_c: Optional[float] = None  # farad per DBU

    @property
    def is_routing(self) -> bool:
        return self.kind == "ROUTING"


@dataclass(frozen=True)
class ViaDef:
    name: str
    layer_bot: int  # routing layer numbers
    layer_top: int


@dataclass(frozen=True)
class Site:
    name: str
    width: int
    height: int


@dataclass(frozen=True)
class MasterPin:
    name: str
    direction: str  # INPUT / OUTPUT / INOUT
    offset: Point
    use: str = "SIGNAL"


@dataclass(frozen=True)
class CellMaster:
    name: str
    width: int
    height: int
    cls: str = "CORE"  # LEF CLASS keyword
    pins: Tuple[MasterPin, ...] = ()
    pin_cap: float = 0.0
    drive_resistance: float = 0.0
    intrinsic_delay: float = 0.0
    is_sequential: bool = False

    def pin(self, name: str) -> Optional[MasterPin]:
        for p in self.pins:
            if p.name == name:
                return p
        return None

    @property
    def output_pins(self) -> List[MasterPin]:
        return [p for p in self.pins if p.direction == "OUTPUT"]

    @property
    def input_pins(self) -> List[MasterPin]:
        return [p for p in self.pins if p.direction != "OUTPUT"]


@dataclass
class TechLib:
    dbu_per_micron: int
    layers: List[Layer] = field(default_factory=list)
    vias: List[ViaDef] = field(default_factory=list)
    masters: List[CellMaster] = field(default_factory=list)
    site: Optional[Site] = None
    diagnostics: List[str] = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        self._rebuild()

    def _rebuild(self) -> None:
        self._masters: Dict[str, CellMaster] = {m.name: m for m in self.masters}
        self._routing: List[Layer] = [l for l in self.layers if l.is_routing]
        self._by_name: Dict[str, Layer] = {l.name: l for l in self.layers}

    def master(self, name: str) -> Optional[CellMaster]:
        return self._masters.get(name)

    @property
    def routing_layers(self) -> List[Layer]:
        return self._routing

    def metal(self, number: int) -> Layer:
        """Routing layer by number (M1 = 1)."""
        if number < 1 or number > len(self._routing):
            raise KeyError(f"routing layer {number} not in technology")
        return self._routing[number - 1]

    def metal_number(self, layer_name: str) -> Optional[int]:
        for i, layer in enumerate(self._routing, start=1):
            if layer.name == layer_name:
                return i
        return None

    def layer(self, name: str) -> Optional[Layer]:
        return self._by_name.get(name)

    def via_between(self, bot: int, top: int) -> Optional[ViaDef]:
        for v in self.vias:
            if v.layer_bot == bot and v.layer_top == top:
                return v
        return None

    def via(self, name: str) -> Optional[ViaDef]:
        for v in self.vias:
            if v.name == name:
                return v
        return None


@dataclass(frozen=True)
class Instance:
    name: str
    master: str
    origin: Point
    cls: InstanceClass = InstanceClass.LOGIC
    orient: str = "N"


@dataclass(frozen=True)
class Port:
    name: str
    position: Point
    direction: str  # INPUT / OUTPUT


@dataclass(frozen=True)
class NetPin:
    owner: str  # instance name, or "PIN" for a design port
    pin: str
    position: Point
    direction: PinDirection

    @property
    def is_port(self) -> bool:
        return self.owner == "PIN"

    @property
    def label(self) -> str:
        return self.pin if self.is_port else f"{self.owner}/{self.pin}"


@dataclass
class Net:
    name: str
    pins: List[NetPin] = field(default_factory=list)
    routing: List[WireSegment] = field(default_factory=list)
    vias: List[ViaInstance] = field(default_factory=list)

    @property
    def driver(self) -> Optional[NetPin]:
        for p in self.pins:
            if p.direction == PinDirection.DRIVER:
                return p
        return None

    @property
    def loads(self) -> List[NetPin]:
        return [p for p in self.pins if p.direction == PinDirection.LOAD]

    @property
    def is_routed(self) -> bool:
        return bool(self.routing or self.vias)


@dataclass
class Design:
    name: str
    tech: TechLib
    die: Rect
    core: Rect
    instances: List[Instance] = field(default_factory=list)
    ports: List[Port] = field(default_factory=list)
    nets: List[Net] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        self.instances.sort(key=lambda i: i.name)
        self.ports.sort(key=lambda p: p.name)
        self.nets.sort(key=lambda n: n.name)
        self.reindex()

    def reindex(self) -> None:
        self._instances = {i.name: i for i in self.instances}
        self._ports = {p.name: p for p in self.ports}
        self._nets = {n.name: n for n in self.nets}

    def instance(self, name: str) -> Optional[Instance]:
        return self._instances.get(name)

    def port(self, name: str) -> Optional[Port]:
        return self._ports.get(name)

    def net(self, name: str) -> Optional[Net]:
        return self._nets.get(name)

    def master_of(self, inst: Instance) -> CellMaster:
        master = self.tech.master(inst.master)
        if master is None:
            raise KeyError(inst.master)
        return master

    def footprint(self, inst: Instance) -> Rect:
        m = self.master_of(inst)
        if inst.orient in ("E", "W", "FE", "FW"):
            w, h = m.height, m.width
        else:
            w, h = m.width, m.height
        return Rect(inst.origin, Point(inst.origin.x + w, inst.origin.y + h))


def oriented_offset(offset: Point, width: int, height: int, orient: str) -> Point:
    """Pin offset inside a footprint placed with the given orientation."""
    if orient == "N":
        return offset
    if orient == "S":
        return Point(width - offset.x, height - offset.y)
    if orient == "FN":
        return Point(width - offset.x, offset.y)
    if orient == "FS":
        return Point(offset.x, height - offset.y)
    raise ValueError(f"unsupported orientation {orient}")


SUPPORTED_ORIENTS = ("N", "S", "FN", "FS")
