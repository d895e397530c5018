"""
Timing Service - register-to-register path enumeration with a linear cell model and Elmore wires
"""
import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import constants
from models.design import Design, PinDirection
from models.schemas import NetElectricals, PathStage, PathVec, RoutePoint

logger = logging.getLogger(__name__)

NEG_INF = -math.inf


@dataclass
class _Load:
    label: str
    owner: str
    pin: str
    wire_delay: float
    slew: float
    resistance: float
    kind: str  # "end", "comb", "none"


@dataclass
class _NetStage:
    net: str
    driver_label: str
    x: int
    y: int
    cell_delay: float
    capacitance: float
    loads: List[_Load] = field(default_factory=list)


@dataclass
class TimingLimits:
    max_paths: int = constants.DEFAULT_MAX_PATHS
    max_stages: int = constants.DEFAULT_MAX_STAGES
    max_expansions: int = constants.DEFAULT_MAX_EXPANSIONS
    clock_period: float = constants.DEFAULT_CLOCK_PERIOD
    port_drive_resistance: float = constants.DEFAULT_PORT_DRIVE_RESISTANCE


class PathExtractor:
    def __init__(
        self,
        design: Design,
        electricals: Dict[str, NetElectricals],
        routes: Optional[Dict[str, Dict[str, List[Tuple[int, int]]]]] = None,
        limits: Optional[TimingLimits] = None,
        diagnostics: Optional[List[str]] = None,
    ):
        self.design = design
        self.limits = limits or TimingLimits()
        self.diagnostics = diagnostics if diagnostics is not None else []
        self.routes = routes or {}
        self.stages: Dict[str, _NetStage] = {}
        self.out_nets: Dict[str, List[str]] = {}
        self.starts: List[str] = []
        self.cut: set = set()
        self.rem: Dict[str, float] = {}
        self._build(electricals)

    def warn(self, msg: str) -> None:
        self.diagnostics.append(msg)
        logger.warning(f"⚠️ {msg}")

    def _is_sequential(self, owner: str) -> bool:
        inst = self.design.instance(owner)
        return inst is not None and self.design.master_of(inst).is_sequential

    def _build(self, electricals: Dict[str, NetElectricals]) -> None:
        d = self.design
        for net in d.nets:
            drv = net.driver
            elec = electricals.get(net.name)
            if drv is None or elec is None:
                continue
            if drv.is_port:
                cell = self.limits.port_drive_resistance * elec.capacitance
            else:
                m = d.master_of(d.instance(drv.owner))
                cell = m.intrinsic_delay + m.drive_resistance * elec.capacitance
            stage = _NetStage(net.name, drv.label, drv.position.x, drv.position.y, cell, elec.capacitance)
            timing = {lt.pin: lt for lt in elec.loads}
            for p in net.pins:
                if p.direction != PinDirection.LOAD:
                    continue
                lt = timing.get(p.label)
                if p.is_port:
                    kind = "none"
                else:
                    inst = d.instance(p.owner)
                    m = d.master_of(inst)
                    mp = m.pin(p.pin)
                    if m.is_sequential:
                        kind = "none" if mp is not None and mp.use == "CLOCK" else "end"
                    else:
                        kind = "comb"
                stage.loads.append(_Load(
                    label=p.label,
                    owner=p.owner,
                    pin=p.pin,
                    wire_delay=lt.elmore if lt else 0.0,
                    slew=lt.slew if lt else 0.0,
                    resistance=lt.resistance if lt else 0.0,
                    kind=kind,
                ))
            self.stages[net.name] = stage
            key = f"PIN:{drv.pin}" if drv.is_port else drv.owner
            self.out_nets.setdefault(key, []).append(net.name)
            if drv.is_port:
                port = d.port(drv.pin)
                if port is not None and port.direction == "INPUT":
                    self.starts.append(net.name)
            elif self._is_sequential(drv.owner):
                self.starts.append(net.name)
        for nets in self.out_nets.values():
            nets.sort()
        self.starts.sort()

    def _deps(self, owner: str):
        for n in self.out_nets.get(owner, []):
            st = self.stages[n]
            for ld in st.loads:
                yield n, ld

    def _load_rem(self, ld: _Load) -> float:
        if ld.kind == "end":
            return 0.0
        if ld.kind == "comb":
            return self.rem.get(ld.owner, NEG_INF)
        return NEG_INF

    def _compute_remaining(self) -> None:
        # iterative post-order longest-path DP over combinational instances; back edges are cut
        state: Dict[str, int] = {}
        comb_owners = sorted({ld.owner for st in self.stages.values() for ld in st.loads if ld.kind == "comb"})
        for root in comb_owners:
            if state.get(root) == 2:
                continue
            state[root] = 1
            stack = [(root, self._deps(root))]
            while stack:
                owner, it = stack[-1]
                advanced = False
                for n, ld in it:
                    if ld.kind != "comb":
                        continue
                    s = state.get(ld.owner, 0)
                    if s == 1:
                        self.cut.add((n, ld.label))
                        self.warn(f"combinational cycle through {ld.owner} cut at net {n}")
                    elif s == 0:
                        state[ld.owner] = 1
                        stack.append((ld.owner, self._deps(ld.owner)))
                        advanced = True
                        break
                if advanced:
                    continue
                best = NEG_INF
                for n, ld in self._deps(owner):
                    if (n, ld.label) in self.cut:
                        continue
                    r = self._load_rem(ld)
                    if r > NEG_INF:
                        best = max(best, self.stages[n].cell_delay + ld.wire_delay + r)
                self.rem[owner] = best
                state[owner] = 2
                stack.pop()

    def extract(self) -> List[PathVec]:
        lim = self.limits
        if lim.max_paths <= 0:
            return []
        if not self.starts:
            self.warn("no sequential startpoints or input ports; no paths extracted")
            return []
        self._compute_remaining()

        heap: List[tuple] = []
        for n in self.starts:
            st = self.stages[n]
            for ld in st.loads:
                r = self._load_rem(ld)
                if r == NEG_INF:
                    continue
                acc = st.cell_delay + ld.wire_delay
                steps = ((n, ld.label),)
                heapq.heappush(heap, (-(acc + r), steps, acc, ld))
        done: List[Tuple[float, tuple]] = []
        expansions = 0
        truncated = 0
        while heap and len(done) < lim.max_paths:
            if expansions >= lim.max_expansions:
                self.warn(f"path search stopped after {expansions} expansions")
                break
            expansions += 1
            _, steps, acc, ld = heapq.heappop(heap)
            if ld.kind == "end":
                done.append((acc, steps))
                continue
            if len(steps) >= lim.max_stages:
                truncated += 1
                continue
            visited = {self._step_owner(s) for s in steps}
            for n, nxt in self._deps(ld.owner):
                if (n, nxt.label) in self.cut:
                    continue
                r = self._load_rem(nxt)
                if r == NEG_INF or nxt.owner in visited:
                    continue
                a = acc + self.stages[n].cell_delay + nxt.wire_delay
                heapq.heappush(heap, (-(a + r), steps + ((n, nxt.label),), a, nxt))
        if truncated:
            self.warn(f"{truncated} partial paths exceeded {lim.max_stages} stages")

        done.sort(key=lambda t: (-t[0], t[1]))
        paths = [self._path(i, steps) for i, (_, steps) in enumerate(done)]
        logger.info(f"🔍 Extracted {len(paths)} timing paths")
        return paths

    def _step_owner(self, step) -> str:
        n, _ = step
        st = self.stages[n]
        return st.driver_label.split("/")[0]

    def _path(self, idx: int, steps) -> PathVec:
        stages = []
        total = 0.0
        for n, label in steps:
            st = self.stages[n]
            ld = next(l for l in st.loads if l.label == label)
            incr = st.cell_delay + ld.wire_delay
            total += incr
            route = [RoutePoint(x=x, y=y) for x, y in self.routes.get(n, {}).get(label, [])]
            stages.append(PathStage(
                name=st.driver_label,
                net=n,
                x=st.x,
                y=st.y,
                capacitance=st.capacitance,
                slew=ld.slew,
                resistance=ld.resistance,
                cell_delay=st.cell_delay,
                wire_delay=ld.wire_delay,
                incr_delay=incr,
                route=route,
            ))
        return PathVec(
            id=idx,
            startpoint=stages[0].name,
            endpoint=steps[-1][1],
            stages=stages,
            delay=total,
            slack=self.limits.clock_period - total,
            stage_count=len(stages),
        )


def extract_paths(
    design: Design,
    electricals: Dict[str, NetElectricals],
    limits: Optional[TimingLimits] = None,
    routes: Optional[Dict[str, Dict[str, List[Tuple[int, int]]]]] = None,
    diagnostics: Optional[List[str]] = None,
) -> List[PathVec]:
    """Register-to-register and port-to-register paths, longest first, at most max_paths."""
    return PathExtractor(design, electricals, routes, limits, diagnostics).extract()
