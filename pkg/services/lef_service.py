"""
LEF Service - reads and writes the supported LEF subset (see docs/formats.md)
"""
import logging
from decimal import Decimal
from typing import Dict, List, Optional

from exceptions import DesignError, DuplicateName, GeometryError, ParseError
from models.design import CellMaster, Layer, MasterPin, Site, TechLib, ViaDef
from models.geometry import Point
from services.token_stream import TokenStream

logger = logging.getLogger(__name__)

HEADER_STATEMENTS = {"VERSION", "BUSBITCHARS", "DIVIDERCHAR", "NAMESCASESENSITIVE", "MANUFACTURINGGRID", "CLEARANCEMEASURE", "USEMINSPACING"}
NAMED_BLOCKS = {"VIARULE", "NONDEFAULTRULE", "BEGINEXT"}
KEYWORD_BLOCKS = {"PROPERTYDEFINITIONS", "SPACING", "UNITS", "MAXVIASTACK"}


def _find_units(ts: TokenStream) -> int:
    toks = ts.tokens
    for i in range(len(toks) - 3):
        if toks[i][0].upper() == "DATABASE" and toks[i + 1][0].upper() == "MICRONS":
            ts.pos = i + 2
            value = ts.integer()
            if value <= 0:
                raise ParseError("DATABASE MICRONS must be positive", toks[i][1])
            return value
    raise ParseError("missing UNITS DATABASE MICRONS", ts.last_line)


class _LefReader:
    def __init__(self, text: str):
        self.ts = TokenStream(text)
        self.dbu = _find_units(self.ts)
        self.ts.pos = 0
        self.layers: List[Layer] = []
        self.vias: List[ViaDef] = []
        self.masters: List[CellMaster] = []
        self.site: Optional[Site] = None
        self.diagnostics: List[str] = []

    def warn(self, message: str) -> None:
        msg = f"line {self.ts.line}: {message}"
        self.diagnostics.append(msg)
        logger.warning(f"⚠️ {msg}")

    def read(self) -> TechLib:
        ts = self.ts
        while not ts.at_end:
            kw = ts.next().upper()
            if kw == "END":
                if ts.accept("LIBRARY"):
                    break
                raise ts.error("unexpected END")
            elif kw == "LAYER":
                self._layer()
            elif kw == "VIA":
                self._via()
            elif kw == "SITE":
                self._site()
            elif kw == "MACRO":
                self._macro()
            elif kw in HEADER_STATEMENTS:
                ts.statement()
            elif kw in KEYWORD_BLOCKS:
                ts.skip_block(kw)
            elif kw in NAMED_BLOCKS:
                name = ts.next()
                self.warn(f"skipped {kw} {name}")
                ts.skip_block(name if kw != "BEGINEXT" else "ENDEXT")
            else:
                ts.pos -= 1
                self.warn(f"skipped unsupported statement {ts.peek()}")
                ts.statement()
        return TechLib(
            dbu_per_micron=self.dbu,
            layers=self.layers,
            vias=self.vias,
            masters=self.masters,
            site=self.site,
            diagnostics=self.diagnostics,
        )

    def _layer(self) -> None:
        ts = self.ts
        name = ts.next()
        if any(l.name == name for l in self.layers):
            raise ts.error(f"duplicate layer {name}", DuplicateName)
        kind, direction = "ROUTING", "HORIZONTAL"
        pitch: Optional[int] = None
        width: Optional[int] = None
        while True:
            kw = ts.next().upper()
            if kw == "END":
                ts.expect(name)
                break
            args = ts.statement()
            if kw == "TYPE" and args:
                kind = args[0].upper()
            elif kw == "DIRECTION" and args:
                direction = args[0].upper()
            elif kw == "PITCH" and args:
                pitch = ts.to_dbu(ts.parse_decimal(args[0]), self.dbu)
            elif kw == "WIDTH" and args:
                width = ts.to_dbu(ts.parse_decimal(args[0]), self.dbu)
        if kind == "ROUTING":
            if pitch is None or pitch <= 0:
                raise ts.error(f"routing layer {name} needs a positive PITCH")
            if width is None:
                width = pitch // 2
        self.layers.append(Layer(
            name=name,
            index=len(self.layers),
            kind="ROUTING" if kind == "ROUTING" else "CUT",
            pitch=pitch or 0,
            width=width or 0,
            direction=direction if kind == "ROUTING" else "NONE",
        ))

    def _metal_number(self, layer_name: str) -> Optional[int]:
        routing = [l for l in self.layers if l.is_routing]
        for i, l in enumerate(routing, start=1):
            if l.name == layer_name:
                return i
        return None

    def _via(self) -> None:
        ts = self.ts
        name = ts.next()
        if any(v.name == name for v in self.vias):
            raise ts.error(f"duplicate via {name}", DuplicateName)
        while ts.peek() not in (None, ";") and ts.peek().upper() == "DEFAULT":
            ts.next()
        metals = []
        while True:
            kw = ts.next().upper()
            if kw == "END":
                ts.expect(name)
                break
            args = ts.statement()
            if kw == "LAYER" and args:
                number = self._metal_number(args[0])
                if number is not None:
                    metals.append(number)
        if len(set(metals)) < 2:
            self.warn(f"via {name} does not connect two routing layers")
            return
        self.vias.append(ViaDef(name=name, layer_bot=min(metals), layer_top=max(metals)))

    def _site(self) -> None:
        ts = self.ts
        name = ts.next()
        w = h = None
        while True:
            kw = ts.next().upper()
            if kw == "END":
                ts.expect(name)
                break
            args = ts.statement()
            if kw == "SIZE":
                w, h = self._size(args)
        if w is None:
            raise ts.error(f"site {name} has no SIZE")
        if self.site is not None:
            self.warn(f"additional site {name} ignored")
            return
        self.site = Site(name=name, width=w, height=h)

    def _size(self, args: List[str]):
        ts = self.ts
        if len(args) != 3 or args[1].upper() != "BY":
            raise ts.error("SIZE expects '<w> BY <h>'")
        w = ts.to_dbu(ts.parse_decimal(args[0]), self.dbu)
        h = ts.to_dbu(ts.parse_decimal(args[2]), self.dbu)
        if w < 0 or h < 0:
            raise ts.error("negative SIZE")
        return w, h

    def _macro(self) -> None:
        ts = self.ts
        name = ts.next()
        if any(m.name == name for m in self.masters):
            raise ts.error(f"duplicate macro {name}", DuplicateName)
        cls = "CORE"
        size = None
        pins: List[MasterPin] = []
        pending: List[tuple] = []
        while True:
            kw = ts.next().upper()
            if kw == "END":
                ts.expect(name)
                break
            if kw == "PIN":
                pending.append(self._pin())
            elif kw == "OBS":
                ts.skip_block(None)
            else:
                args = ts.statement()
                if kw == "CLASS" and args:
                    cls = args[0].upper()
                elif kw == "SIZE":
                    size = self._size(args)
        if size is None:
            raise ts.error(f"macro {name} has no SIZE")
        w, h = size
        for pin_name, direction, use, offset in pending:
            if any(p.name == pin_name for p in pins):
                raise ts.error(f"duplicate pin {pin_name} on {name}", DuplicateName)
            if offset is None:
                offset = Point(w // 2, h // 2)
                self.warn(f"pin {name}/{pin_name} has no PORT RECT, using footprint centre")
            if not (0 <= offset.x <= w and 0 <= offset.y <= h):
                raise ts.error(f"pin {name}/{pin_name} lies outside the footprint")
            pins.append(MasterPin(name=pin_name, direction=direction, offset=offset, use=use))
        self.masters.append(CellMaster(
            name=name,
            width=w,
            height=h,
            cls=cls,
            pins=tuple(pins),
            is_sequential=any(p.use == "CLOCK" for p in pins),
        ))

    def _pin(self):
        ts = self.ts
        pin_name = ts.next()
        direction, use = "INPUT", "SIGNAL"
        offset = None
        while True:
            kw = ts.next().upper()
            if kw == "END":
                ts.expect(pin_name)
                break
            if kw == "PORT":
                while True:
                    pk = ts.next().upper()
                    if pk == "END":
                        break
                    args = ts.statement()
                    if pk == "RECT" and offset is None:
                        if len(args) < 4:
                            raise ts.error("RECT expects four coordinates")
                        x1, y1, x2, y2 = (ts.to_dbu(ts.parse_decimal(a), self.dbu) for a in args[-4:])
                        offset = Point((x1 + x2) // 2, (y1 + y2) // 2)
                continue
            args = ts.statement()
            if kw == "DIRECTION" and args:
                direction = args[0].upper()
            elif kw == "USE" and args:
                use = args[0].upper()
        return pin_name, direction, use, offset


def parse_lef(text: str) -> TechLib:
    """Read a LEF-subset technology; raises ParseError on any malformed input."""
    if not isinstance(text, str):
        raise ParseError("LEF input must be text")
    reader = None
    try:
        reader = _LefReader(text)
        tech = reader.read()
    except DesignError:
        raise
    except GeometryError as e:
        raise ParseError(str(e), reader.ts.line if reader else None)
    except (IndexError, ValueError, KeyError, ArithmeticError, TypeError) as e:
        raise ParseError(f"malformed LEF: {e}", reader.ts.line if reader else None)
    logger.info(f"✅ Parsed LEF: {len(tech.routing_layers)} routing layers, {len(tech.masters)} masters")
    return tech


def dbu_to_microns(value: int, dbu: int) -> str:
    text = format(Decimal(value) / Decimal(dbu), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text if text not in ("", "-0") else "0"


def write_lef(tech: TechLib) -> str:
    """Emit the technology geometry (layers, vias, site, macros) as LEF text."""
    u = tech.dbu_per_micron

    def um(v: int) -> str:
        return dbu_to_microns(v, u)

    out = [
        "VERSION 5.8 ;",
        'BUSBITCHARS "[]" ;',
        'DIVIDERCHAR "/" ;',
        "",
        "UNITS",
        f"  DATABASE MICRONS {u} ;",
        "END UNITS",
        "",
    ]
    if tech.site is not None:
        out += [
            f"SITE {tech.site.name}",
            "  CLASS CORE ;",
            f"  SIZE {um(tech.site.width)} BY {um(tech.site.height)} ;",
            f"END {tech.site.name}",
            "",
        ]
    for layer in sorted(tech.layers, key=lambda l: l.index):
        out.append(f"LAYER {layer.name}")
        if layer.is_routing:
            out += [
                "  TYPE ROUTING ;",
                f"  DIRECTION {layer.direction} ;",
                f"  PITCH {um(layer.pitch)} ;",
                f"  WIDTH {um(layer.width)} ;",
            ]
        else:
            out.append("  TYPE CUT ;")
        out += [f"END {layer.name}", ""]
    for via in tech.vias:
        out.append(f"VIA {via.name} DEFAULT")
        for n in range(via.layer_bot, via.layer_top + 1):
            out.append(f"  LAYER {tech.metal(n).name} ;")
        out += [f"END {via.name}", ""]
    for m in tech.masters:
        out += [
            f"MACRO {m.name}",
            f"  CLASS {m.cls} ;",
            "  ORIGIN 0 0 ;",
            f"  SIZE {um(m.width)} BY {um(m.height)} ;",
        ]
        pin_layer = tech.metal(1).name if tech.routing_layers else "M1"
        for p in m.pins:
            x, y = p.offset.x, p.offset.y
            out += [
                f"  PIN {p.name}",
                f"    DIRECTION {p.direction} ;",
                f"    USE {p.use} ;",
                "    PORT",
                f"      LAYER {pin_layer} ;",
                f"        RECT {um(x - 1)} {um(y - 1)} {um(x + 1)} {um(y + 1)} ;",
                "    END",
                f"  END {p.name}",
            ]
        out += [f"END {m.name}", ""]
    out.append("END LIBRARY")
    return "\n".join(out) + "\n"
