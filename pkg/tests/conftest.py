import os
from typing import List, Tuple

import pytest

from models.design import Design, Instance, InstanceClass, Net, NetPin, PinDirection, Port
from models.geometry import Point, Rect, ViaInstance, WireSegment
from models.schemas import SyntheticParams, WorkspaceConfig
from services.def_service import pin_position
from services.synthetic_service import build_synthetic_tech, generate_synthetic
from services.vector_service import VectorService
from workspace import create_workspace

slow = pytest.mark.skipif(os.getenv("CHIPVEC_RUN_SLOW") != "1", reason="set CHIPVEC_RUN_SLOW=1 to run")


def l_route(a: Point, b: Point) -> Tuple[List[WireSegment], List[ViaInstance]]:
    """Horizontal run on M1 to b's column, via, vertical run on M2 down to b."""
    if a.y == b.y:
        return [WireSegment(a.x, a.y, b.x, b.y, 1)], []
    wires = [WireSegment(a.x, a.y, b.x, a.y, 1), WireSegment(b.x, a.y, b.x, b.y, 2)]
    if a.x == b.x:
        wires = wires[1:]
    return wires, [ViaInstance(b.x, a.y, 1, 2)]


def make_chain_design(routed: bool = True) -> Design:
    """
    in1 -> ff1/D, ff1/Q -> inv1/A, inv1/Y -> ff2/D on a 12000 x 14000 die.
    """
    tech = build_synthetic_tech(4)
    instances = [
        Instance("ff1", "DFF", Point(0, 0)),
        Instance("inv1", "INV", Point(4000, 0)),
        Instance("ff2", "DFF", Point(8000, 0)),
    ]
    ports = [Port("in1", Point(0, 7000), "INPUT")]
    by_name = {i.name: i for i in instances}

    def pin(owner: str, name: str, direction: PinDirection) -> NetPin:
        if owner == "PIN":
            return NetPin("PIN", name, ports[0].position, direction)
        return NetPin(owner, name, pin_position(tech, by_name[owner], name), direction)

    nets = []
    for net_name, (src, dst) in {
        "nin": (("PIN", "in1"), ("ff1", "D")),
        "n1": (("ff1", "Q"), ("inv1", "A")),
        "n2": (("inv1", "Y"), ("ff2", "D")),
    }.items():
        d = pin(*src, PinDirection.DRIVER)
        l = pin(*dst, PinDirection.LOAD)
        wires, vias = l_route(d.position, l.position) if routed else ([], [])
        nets.append(Net(net_name, [d, l], wires, vias))
    die = Rect(Point(0, 0), Point(12000, 14000))
    return Design("chain", tech, die, die, instances, ports, nets)


@pytest.fixture
def tech():
    return build_synthetic_tech(4)


@pytest.fixture
def chain_design():
    return make_chain_design()


def synth_params(seed: int = 1, **overrides) -> SyntheticParams:
    values = dict(name=f"synth{seed}", seed=seed, n_instances=200, n_nets=180, n_routing_layers=4, n_inputs=4)
    values.update(overrides)
    return SyntheticParams(**values)


@pytest.fixture(scope="session")
def synth_design():
    return generate_synthetic(synth_params(1))


@pytest.fixture(scope="session")
def synth_bundle(synth_design):
    return VectorService(WorkspaceConfig()).vectorize(synth_design)


@pytest.fixture
def workspace(tmp_path):
    return create_workspace(tmp_path / "ws")
