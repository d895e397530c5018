"""
DEF Service - reads and writes the supported DEF subset (see docs/formats.md)
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

from exceptions import (
    DesignError,
    DuplicateName,
    GeometryError,
    ParseError,
    RouteGeometryError,
    TechError,
    UnknownMaster,
)
from models.design import (
    SUPPORTED_ORIENTS,
    Design,
    Instance,
    Net,
    NetPin,
    PinDirection,
    Port,
    TechLib,
    oriented_offset,
)
from models.geometry import Point, Rect, ViaInstance, WireSegment
from models.schemas import ClassRule
from services.design_service import classify_instance, validate_design
from services.token_stream import TokenStream

logger = logging.getLogger(__name__)

HEADER_STATEMENTS = {"VERSION", "DIVIDERCHAR", "BUSBITCHARS", "TECHNOLOGY", "HISTORY", "TRACKS", "GCELLGRID", "NAMESCASESENSITIVE"}
SKIPPED_SECTIONS = {"VIAS", "SPECIALNETS", "BLOCKAGES", "REGIONS", "GROUPS", "PROPERTYDEFINITIONS", "NONDEFAULTRULES", "FILLS", "STYLES", "SCANCHAINS", "PINPROPERTIES"}
ROUTE_KEYWORDS = {"ROUTED", "FIXED", "COVER", "NOSHIELD"}


def pin_position(design_tech: TechLib, inst: Instance, pin_name: str) -> Optional[Point]:
    master = design_tech.master(inst.master)
    if master is None:
        return None
    mp = master.pin(pin_name)
    if mp is None:
        return None
    off = oriented_offset(mp.offset, master.width, master.height, inst.orient)
    return Point(inst.origin.x + off.x, inst.origin.y + off.y)


class _DefReader:
    def __init__(self, text: str, tech: TechLib, rules: Optional[Sequence[ClassRule]]):
        self.ts = TokenStream(text)
        self.tech = tech
        self.rules = rules
        self.name = ""
        self.die: Optional[Rect] = None
        self.rows: List[Rect] = []
        self.instances: Dict[str, Instance] = {}
        self.ports: Dict[str, Port] = {}
        self.nets: Dict[str, Net] = {}
        self.diagnostics: List[str] = []

    def warn(self, message: str) -> None:
        msg = f"line {self.ts.line}: {message}"
        self.diagnostics.append(msg)
        logger.warning(f"⚠️ {msg}")

    def read(self) -> Design:
        ts = self.ts
        while not ts.at_end:
            kw = ts.next().upper()
            if kw == "END":
                if ts.accept("DESIGN"):
                    break
                raise ts.error("unexpected END")
            elif kw == "DESIGN":
                args = ts.statement()
                if len(args) != 1:
                    raise ts.error("DESIGN expects one name")
                self.name = args[0]
            elif kw == "UNITS":
                args = ts.statement()
                if len(args) != 3 or args[0].upper() != "DISTANCE" or args[1].upper() != "MICRONS":
                    raise ts.error("UNITS expects 'DISTANCE MICRONS <n>'")
                dbu = ts.parse_int(args[2])
                if dbu != self.tech.dbu_per_micron:
                    raise ts.error(f"DEF units {dbu} differ from technology units {self.tech.dbu_per_micron}")
            elif kw == "DIEAREA":
                self._diearea()
            elif kw == "ROW":
                self._row()
            elif kw == "COMPONENTS":
                self._section("COMPONENTS", self._component)
            elif kw == "PINS":
                self._section("PINS", self._pin)
            elif kw == "NETS":
                self._section("NETS", self._net)
            elif kw in HEADER_STATEMENTS:
                ts.statement()
            elif kw in SKIPPED_SECTIONS:
                self.warn(f"skipped section {kw}")
                ts.skip_block(kw)
            else:
                ts.pos -= 1
                self.warn(f"skipped unsupported statement {ts.peek()}")
                ts.statement()
        if self.die is None:
            raise ts.error("missing DIEAREA")
        core = self.die
        if self.rows:
            core = Rect(
                Point(min(r.lo.x for r in self.rows), min(r.lo.y for r in self.rows)),
                Point(max(r.hi.x for r in self.rows), max(r.hi.y for r in self.rows)),
            )
        return Design(
            name=self.name,
            tech=self.tech,
            die=self.die,
            core=core,
            instances=list(self.instances.values()),
            ports=list(self.ports.values()),
            nets=list(self.nets.values()),
            diagnostics=self.tech.diagnostics + self.diagnostics,
        )

    def _diearea(self) -> None:
        ts = self.ts
        pts = [ts.point()]
        while ts.peek() == "(":
            pts.append(ts.point())
        ts.expect(";")
        if len(pts) < 2:
            raise ts.error("DIEAREA needs two points")
        if len(pts) > 2:
            self.warn("rectilinear DIEAREA reduced to its bounding box")
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        self.die = Rect(Point(min(xs), min(ys)), Point(max(xs), max(ys)))

    def _row(self) -> None:
        ts = self.ts
        args = ts.statement()
        if len(args) < 5:
            raise ts.error("ROW expects '<name> <site> <x> <y> <orient>'")
        site = self.tech.site
        if site is None or site.name != args[1]:
            self.warn(f"row {args[0]} uses unknown site {args[1]}")
            return
        x, y = ts.parse_int(args[2]), ts.parse_int(args[3])
        nx = ny = 1
        sx = sy = 0
        rest = [a.upper() for a in args[5:]]
        if "DO" in rest:
            i = rest.index("DO")
            nx, ny = ts.parse_int(args[5 + i + 1]), ts.parse_int(args[5 + i + 3])
        if "STEP" in rest:
            i = rest.index("STEP")
            sx, sy = ts.parse_int(args[5 + i + 1]), ts.parse_int(args[5 + i + 2])
        if nx < 1 or ny < 1:
            raise ts.error("ROW repeat counts must be positive")
        w = (nx - 1) * sx + site.width if sx else nx * site.width
        h = (ny - 1) * sy + site.height if sy else site.height
        self.rows.append(Rect(Point(x, y), Point(x + w, y + h)))

    def _section(self, name: str, item) -> None:
        ts = self.ts
        declared = ts.integer()
        ts.expect(";")
        count = 0
        while True:
            tok = ts.next()
            if tok == "-":
                item()
                count += 1
            elif tok.upper() == "END":
                ts.expect(name)
                break
            else:
                raise ts.error(f"unexpected '{tok}' in {name}")
        if count != declared:
            raise ts.error(f"{name} declares {declared} entries but holds {count}")

    def _component(self) -> None:
        ts = self.ts
        name = ts.next()
        master_name = ts.next()
        if name in self.instances:
            raise ts.error(f"duplicate component {name}", DuplicateName)
        if self.tech.master(master_name) is None:
            raise ts.error(f"unknown master {master_name}", UnknownMaster)
        origin = None
        orient = "N"
        while True:
            tok = ts.next()
            if tok == ";":
                break
            if tok != "+":
                continue
            kw = ts.next().upper()
            if kw in ("PLACED", "FIXED", "COVER"):
                origin = ts.point()
                orient = ts.next().upper()
                if orient not in SUPPORTED_ORIENTS:
                    raise ts.error(f"unsupported orientation {orient}")
        if origin is None:
            raise ts.error(f"component {name} is not placed")
        self.instances[name] = Instance(
            name=name,
            master=master_name,
            origin=Point(*origin),
            cls=classify_instance(master_name, self.tech, self.rules),
            orient=orient,
        )

    def _pin(self) -> None:
        ts = self.ts
        name = ts.next()
        if name in self.ports:
            raise ts.error(f"duplicate pin {name}", DuplicateName)
        direction = "INPUT"
        position = None
        while True:
            tok = ts.next()
            if tok == ";":
                break
            if tok != "+":
                continue
            kw = ts.next().upper()
            if kw == "DIRECTION":
                direction = ts.next().upper()
            elif kw in ("PLACED", "FIXED", "COVER"):
                position = ts.point()
                ts.next()
        if position is None:
            raise ts.error(f"pin {name} is not placed")
        self.ports[name] = Port(name=name, position=Point(*position), direction=direction)

    def _net(self) -> None:
        ts = self.ts
        name = ts.next()
        if name in self.nets:
            raise ts.error(f"duplicate net {name}", DuplicateName)
        refs: List[Tuple[str, str, int]] = []
        segments: List[WireSegment] = []
        vias: List[ViaInstance] = []
        while ts.peek() == "(":
            line = ts.line
            ts.next()
            owner = ts.next()
            pin = ts.next()
            while ts.peek() != ")":
                ts.next()  # + SYNTHESIZED and similar
            ts.expect(")")
            refs.append((owner, pin, line))
        while True:
            tok = ts.next()
            if tok == ";":
                break
            if tok != "+":
                continue
            kw = ts.next().upper()
            if kw in ROUTE_KEYWORDS:
                self._wiring(segments, vias)
        if not refs:
            raise ts.error(f"net {name} has no pins")
        self.nets[name] = Net(name=name, pins=self._net_pins(name, refs), routing=segments, vias=vias)

    def _wiring(self, segments: List[WireSegment], vias: List[ViaInstance]) -> None:
        ts = self.ts
        while True:
            layer_name = ts.next()
            layer = self.tech.metal_number(layer_name)
            if layer is None:
                raise ts.error(f"unknown routing layer {layer_name}")
            while ts.peek() is not None and ts.peek().upper() in ("TAPER", "TAPERRULE", "STYLE", "MASK"):
                kw = ts.next().upper()
                if kw != "TAPER":
                    ts.next()
            prev: Optional[Tuple[int, int]] = None
            while True:
                tok = ts.peek()
                if tok == "(":
                    line = ts.line
                    p = ts.point(prev)
                    if prev is not None and p != prev:
                        if p[0] != prev[0] and p[1] != prev[1]:
                            raise RouteGeometryError(f"diagonal route {prev} -> {p}", line)
                        segments.append(WireSegment(prev[0], prev[1], p[0], p[1], layer))
                    prev = p
                elif tok is None or tok in (";", "+") or tok.upper() == "NEW":
                    break
                else:
                    via_name = ts.next()
                    if via_name.upper() in ("MASK",):
                        ts.next()
                        continue
                    via = self.tech.via(via_name)
                    if via is None:
                        raise ts.error(f"unknown via {via_name}")
                    if prev is None:
                        raise ts.error(f"via {via_name} before any route point")
                    if layer not in (via.layer_bot, via.layer_top):
                        raise ts.error(f"via {via_name} does not touch layer {layer_name}")
                    vias.append(ViaInstance(prev[0], prev[1], via.layer_bot, via.layer_top))
                    layer = via.layer_top if layer == via.layer_bot else via.layer_bot
            if not ts.accept("NEW"):
                return

    def _net_pins(self, net_name: str, refs: List[Tuple[str, str, int]]) -> List[NetPin]:
        pins: List[NetPin] = []
        is_driver: List[bool] = []
        for owner, pin, line in refs:
            if owner == "PIN":
                port = self.ports.get(pin)
                if port is None:
                    raise ParseError(f"net {net_name} references unknown pin {pin}", line)
                pos = port.position
                drives = port.direction == "INPUT"
            else:
                inst = self.instances.get(owner)
                if inst is None:
                    raise ParseError(f"net {net_name} references unknown component {owner}", line)
                master = self.tech.master(inst.master)
                mp = master.pin(pin)
                if mp is None:
                    raise ParseError(f"net {net_name} references unknown pin {owner}/{pin}", line)
                pos = pin_position(self.tech, inst, pin)
                drives = mp.direction == "OUTPUT"
            pins.append(NetPin(owner=owner, pin=pin, position=pos, direction=PinDirection.LOAD))
            is_driver.append(drives)
        drivers = [i for i, d in enumerate(is_driver) if d]
        if not drivers:
            self.warn(f"net {net_name} has no output pin, using {pins[0].label} as driver")
            drivers = [0]
        elif len(drivers) > 1:
            self.warn(f"net {net_name} has {len(drivers)} output pins, using {pins[drivers[0]].label} as driver")
        d = drivers[0]
        pins[d] = NetPin(pins[d].owner, pins[d].pin, pins[d].position, PinDirection.DRIVER)
        return pins


def parse_def(text: str, tech: TechLib, rules: Optional[Sequence[ClassRule]] = None) -> Design:
    """Read a DEF-subset design against a parsed technology."""
    if not isinstance(text, str):
        raise ParseError("DEF input must be text")
    reader = _DefReader(text, tech, rules)
    try:
        design = reader.read()
    except DesignError:
        raise
    except GeometryError as e:
        raise ParseError(str(e), reader.ts.line)
    except (IndexError, ValueError, KeyError, ArithmeticError, TypeError, AttributeError) as e:
        raise ParseError(f"malformed DEF: {e}", reader.ts.line)
    violations = validate_design(design, check_overlap=False)
    if violations:
        raise ParseError(f"design {design.name} is invalid: {violations[0]}")
    logger.info(
        f"✅ Parsed DEF {design.name}: {len(design.instances)} components, "
        f"{len(design.ports)} pins, {len(design.nets)} nets"
    )
    return design


def _row_lines(design: Design) -> List[str]:
    site = design.tech.site
    core = design.core
    if site is None or core == design.die:
        return []
    if core.width % site.width or core.height % site.height or core.width == 0 or core.height == 0:
        logger.warning(f"⚠️ core {core.as_tuple()} does not tile into {site.name} rows; rows omitted")
        return []
    nx = core.width // site.width
    return [
        f"ROW ROW_{r} {site.name} {core.lo.x} {core.lo.y + r * site.height} N DO {nx} BY 1 STEP {site.width} 0 ;"
        for r in range(core.height // site.height)
    ]


def write_def(design: Design) -> str:
    """Deterministic DEF text; parse_def(write_def(d), d.tech) == d."""
    tech = design.tech
    out = [
        "VERSION 5.8 ;",
        'DIVIDERCHAR "/" ;',
        'BUSBITCHARS "[]" ;',
        f"DESIGN {design.name} ;",
        f"UNITS DISTANCE MICRONS {tech.dbu_per_micron} ;",
        "",
        f"DIEAREA ( {design.die.lo.x} {design.die.lo.y} ) ( {design.die.hi.x} {design.die.hi.y} ) ;",
        "",
    ]
    rows = _row_lines(design)
    if rows:
        out += rows + [""]

    instances = sorted(design.instances, key=lambda i: i.name)
    out.append(f"COMPONENTS {len(instances)} ;")
    for inst in instances:
        out.append(f"- {inst.name} {inst.master} + PLACED ( {inst.origin.x} {inst.origin.y} ) {inst.orient} ;")
    out += ["END COMPONENTS", ""]

    port_net: Dict[str, str] = {}
    for net in design.nets:
        for p in net.pins:
            if p.is_port:
                port_net.setdefault(p.pin, net.name)
    ports = sorted(design.ports, key=lambda p: p.name)
    out.append(f"PINS {len(ports)} ;")
    for port in ports:
        net_clause = f" + NET {port_net[port.name]}" if port.name in port_net else ""
        out.append(
            f"- {port.name}{net_clause} + DIRECTION {port.direction} + USE SIGNAL"
            f" + PLACED ( {port.position.x} {port.position.y} ) N ;"
        )
    out += ["END PINS", ""]

    nets = sorted(design.nets, key=lambda n: n.name)
    out.append(f"NETS {len(nets)} ;")
    for net in nets:
        refs = " ".join(f"( {p.owner} {p.pin} )" for p in net.pins)
        out.append(f"- {net.name} {refs}")
        elements = []
        for seg in net.routing:
            elements.append(
                f"{tech.metal(seg.layer).name} ( {seg.xs} {seg.ys} ) ( {seg.xe} {seg.ye} )"
            )
        for via in net.vias:
            vdef = tech.via_between(via.layer_bot, via.layer_top)
            if vdef is None:
                raise TechError(f"no via definition between layers {via.layer_bot} and {via.layer_top}")
            elements.append(f"{tech.metal(via.layer_bot).name} ( {via.xc} {via.yc} ) {vdef.name}")
        for i, element in enumerate(elements):
            out.append(f"  {'+ ROUTED' if i == 0 else '  NEW'} {element}")
        out[-1] += " ;"
    out += ["END NETS", "", "END DESIGN"]
    return "\n".join(out) + "\n"
