"""
Design Service - instance classification, technology sidecar handling and design validation
"""
import fnmatch
import json
import logging
from dataclasses import replace
from typing import Iterable, List, Optional, Sequence, Tuple

from pydantic import ValidationError

import constants
from exceptions import ConfigError, TechError, UnknownMaster
from models.design import Design, InstanceClass, PinDirection, TechLib
from models.schemas import ClassRule, LayerElectricals, MasterElectricals, TechSidecar
from utils import error_field, error_message

logger = logging.getLogger(__name__)


def default_rules() -> List[ClassRule]:
    return [ClassRule(pattern=p, tag=t) for p, t in constants.DEFAULT_CLASS_RULES]


def classify_instance(master_name: str, tech: TechLib, rules: Optional[Sequence[ClassRule]] = None) -> InstanceClass:
    """LEF CLASS first, then name-prefix rules (first match wins), else logic."""
    master = tech.master(master_name)
    if master is None:
        raise UnknownMaster(f"unknown master {master_name}")
    mapped = constants.LEF_CLASS_MAP.get(master.cls.upper())
    if mapped:
        return InstanceClass(mapped)
    for rule in rules if rules is not None else default_rules():
        if fnmatch.fnmatchcase(master_name, rule.pattern):
            return InstanceClass(rule.tag)
    return InstanceClass.LOGIC


def load_tech_sidecar(text: str) -> TechSidecar:
    try:
        return TechSidecar.model_validate(json.loads(text))
    except json.JSONDecodeError as e:
        raise ConfigError("tech_sidecar", f"invalid JSON: {e.msg}")
    except ValidationError as e:
        raise ConfigError(f"tech_sidecar.{error_field(e)}", error_message(e) or "")


def merge_sidecar(tech: TechLib, sidecar: TechSidecar) -> TechLib:
    """Attach unit R/C and cell electricals to a parsed technology."""
    if sidecar.dbu_per_micron != tech.dbu_per_micron:
        raise TechError(
            f"sidecar dbu_per_micron {sidecar.dbu_per_micron} differs from LEF {tech.dbu_per_micron}"
        )
    layer_elec = {l.name: l for l in sidecar.layers}
    master_elec = {m.name: m for m in sidecar.masters}
    layers = []
    for layer in tech.layers:
        e = layer_elec.get(layer.name)
        layers.append(replace(layer, unit_r=e.unit_r, unit_c=e.unit_c) if e else layer)
    masters = []
    for m in tech.masters:
        e = master_elec.get(m.name)
        if e is None:
            masters.append(m)
            continue
        masters.append(replace(
            m,
            pin_cap=e.pin_cap,
            drive_resistance=e.drive_resistance,
            intrinsic_delay=e.intrinsic_delay,
            is_sequential=e.is_sequential,
        ))
    unknown = sorted(set(layer_elec) - {l.name for l in tech.layers}) + sorted(set(master_elec) - {m.name for m in tech.masters})
    diagnostics = list(tech.diagnostics)
    for name in unknown:
        msg = f"sidecar entry {name} has no LEF counterpart"
        diagnostics.append(msg)
        logger.warning(f"⚠️ {msg}")
    return TechLib(
        dbu_per_micron=tech.dbu_per_micron,
        layers=layers,
        vias=list(tech.vias),
        masters=masters,
        site=tech.site,
        diagnostics=diagnostics,
    )


def sidecar_of(tech: TechLib) -> TechSidecar:
    """Electrical part of a technology in sidecar form."""
    return TechSidecar(
        dbu_per_micron=tech.dbu_per_micron,
        layers=[
            LayerElectricals(name=l.name, unit_r=l.unit_r, unit_c=l.unit_c)
            for l in tech.routing_layers
            if l.unit_r is not None and l.unit_c is not None
        ],
        masters=[
            MasterElectricals(
                name=m.name,
                pin_cap=m.pin_cap,
                drive_resistance=m.drive_resistance,
                intrinsic_delay=m.intrinsic_delay,
                is_sequential=m.is_sequential,
            )
            for m in tech.masters
        ],
    )


def validate_tech(tech: TechLib) -> List[str]:
    violations = []
    indices = [l.index for l in tech.layers]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        violations.append("layer indices are not strictly increasing")
    for l in tech.routing_layers:
        if l.pitch <= 0:
            violations.append(f"layer {l.name} has non-positive pitch")
    for m in tech.masters:
        for p in m.pins:
            if not (0 <= p.offset.x <= m.width and 0 <= p.offset.y <= m.height):
                violations.append(f"pin {m.name}/{p.name} outside footprint")
    return violations


def _overlaps(rects: List[Tuple[int, int, int, int, str]]) -> Iterable[Tuple[str, str]]:
    # sweep over x; rects are (x0, y0, x1, y1, name)
    rects = sorted(rects)
    active: List[Tuple[int, int, int, int, str]] = []
    for r in rects:
        active = [a for a in active if a[2] > r[0]]
        for a in active:
            if a[1] < r[3] and r[1] < a[3] and a[0] < r[2]:
                yield a[4], r[4]
        active.append(r)


def validate_design(design: Design, check_overlap: bool = True) -> List[str]:
    """Every Design invariant that does not hold, as human-readable violations."""
    violations = validate_tech(design.tech)
    die = design.die
    n_routing = len(design.tech.routing_layers)

    seen = set()
    for inst in design.instances:
        if inst.name in seen:
            violations.append(f"duplicate instance {inst.name}")
        seen.add(inst.name)
        if design.tech.master(inst.master) is None:
            violations.append(f"instance {inst.name} uses unknown master {inst.master}")
            continue
        if not die.contains_rect(design.footprint(inst)):
            violations.append(f"instance {inst.name} outside die")
    if len({p.name for p in design.ports}) != len(design.ports):
        violations.append("duplicate port names")
    for port in design.ports:
        if not die.contains(port.position):
            violations.append(f"port {port.name} outside die")

    if check_overlap:
        rects = []
        for inst in design.instances:
            if design.tech.master(inst.master) is None:
                continue
            fp = design.footprint(inst)
            if fp.area > 0:
                rects.append((fp.lo.x, fp.lo.y, fp.hi.x, fp.hi.y, inst.name))
        for a, b in _overlaps(rects):
            violations.append(f"instances {a} and {b} overlap")

    if len({n.name for n in design.nets}) != len(design.nets):
        violations.append("duplicate net names")
    for net in design.nets:
        if not net.pins:
            violations.append(f"net {net.name} has no pins")
        drivers = [p for p in net.pins if p.direction == PinDirection.DRIVER]
        if len(drivers) > 1:
            violations.append(f"net {net.name} has {len(drivers)} drivers")
        for p in net.pins:
            if p.is_port:
                if design.port(p.pin) is None:
                    violations.append(f"net {net.name} references missing port {p.pin}")
            else:
                inst = design.instance(p.owner)
                if inst is None:
                    violations.append(f"net {net.name} references missing instance {p.owner}")
                    continue
                master = design.tech.master(inst.master)
                if master is not None and master.pin(p.pin) is None:
                    violations.append(f"net {net.name} references missing pin {p.label}")
        for seg in net.routing:
            if seg.layer > n_routing:
                violations.append(f"net {net.name} uses missing layer {seg.layer}")
            if not (die.contains(seg.start) and die.contains(seg.end)):
                violations.append(f"net {net.name} has wiring outside the die")
        for via in net.vias:
            if via.layer_top > n_routing:
                violations.append(f"net {net.name} via uses missing layer {via.layer_top}")
            if not die.contains(via.position):
                violations.append(f"net {net.name} has a via outside the die")
    return violations
