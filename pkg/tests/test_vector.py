import math
import time

import numpy as np
import pytest

import constants
from models.design import Net, NetPin, PinDirection
from models.schemas import WorkspaceConfig
from services.bundle_service import save_bundle
from services.def_service import pin_position
from services.graph_service import build_graph, node_ids
from services.net_service import count_bends, decompose_net
from services.patch_service import patch_features
from services.rc_service import elmore, switching_power
from services.synthetic_service import generate_synthetic
from services.timing_service import TimingLimits, extract_paths
from services.vector_service import LEVELS, VectorService, pin_caps
from tests.conftest import make_chain_design, slow, synth_params
from workspace import create_workspace

M1_R, M1_C = 2.0e-3, 1.6e-19
INV_CAP = 1.0e-15


@pytest.fixture
def service():
    return VectorService(WorkspaceConfig())


def test_elmore_on_a_chain():
    delay, down = elmore([-1, 0, 1], [0, 1, 2], [0.0, 1.0, 2.0], [0.0, 1.0, 1.0])
    assert down == [2.0, 2.0, 1.0]
    assert delay == [0.0, 2.0, 4.0]


def test_switching_power():
    assert switching_power(2e-15, 0.1, 1.0, 1e9) == pytest.approx(2e-7)


def test_count_bends():
    walk = [(0, 0, 1), (5, 0, 1), (5, 0, 2), (5, 5, 2), (9, 5, 2)]
    assert count_bends(walk) == 2
    assert count_bends(walk[:2]) == 0


def test_decompose_l_shaped_net(chain_design):
    nv = decompose_net(chain_design.net("n1"), 1)
    f = nv.features
    assert (f.rwl, f.hpwl, f.rsmt, f.via_count, f.fanout) == (2834, 2834, 2834, 1, 1)
    assert f.l_ness == 1.0
    assert f.aspect_ratio == pytest.approx(400 / 2434)
    assert f.layer_wirelength == {1: 2434, 2: 400}
    assert nv.bbox == (1666, 500, 4100, 900)
    sub = nv.subnets[0]
    assert sub.load == "inv1/A"
    assert sub.nodes[0] == (1666, 900, 1)
    assert sub.nodes[-1] == (4100, 500, 2)


def test_net_electricals_match_hand_elmore(service, chain_design):
    level = service.generate_nets(chain_design)
    assert [nv.name for nv in level.netvecs] == ["n1", "n2", "nin"]
    e = level.electricals["n1"]
    r1, r2 = M1_R * 2434, M1_R * 400
    c1, c2 = M1_C * 2434, M1_C * 400
    expected = r1 * (c1 / 2 + c2 + INV_CAP) + r2 * (c2 / 2 + INV_CAP)
    load = e.loads[0]
    assert load.pin == "inv1/A"
    assert load.elmore == pytest.approx(expected)
    assert load.slew == pytest.approx(math.log(9) * expected)
    assert load.resistance == pytest.approx(r1 + r2)
    assert e.wire_capacitance == pytest.approx(c1 + c2)
    assert e.capacitance == pytest.approx(c1 + c2 + INV_CAP)


def test_pin_caps_skip_ports(chain_design):
    caps = pin_caps(chain_design)
    assert caps["inv1/A"] == INV_CAP
    assert "in1" not in caps


def test_graph_ids_and_edges(chain_design):
    assert node_ids(chain_design) == {"ff1": 0, "ff2": 1, "inv1": 2, "PIN:in1": 3}
    graph = build_graph(chain_design)
    assert [(e.src, e.dst, e.net) for e in graph.edges] == [(0, 2, "n1"), (2, 1, "n2"), (3, 0, "nin")]
    assert graph.nodes[3].cls == "port"
    assert graph.nodes[3].direction == "INPUT"


def test_paths_longest_first(service, chain_design):
    level = service.generate_nets(chain_design)
    paths = extract_paths(chain_design, level.electricals)
    assert len(paths) == 2
    first, second = paths
    assert (first.startpoint, first.endpoint, first.stage_count) == ("ff1/Q", "ff2/D", 2)
    assert (second.startpoint, second.endpoint, second.stage_count) == ("in1", "ff1/D", 1)
    assert first.delay >= second.delay
    assert first.delay == pytest.approx(sum(s.incr_delay for s in first.stages))
    assert first.slack == pytest.approx(constants.DEFAULT_CLOCK_PERIOD - first.delay)
    dff = chain_design.tech.master("DFF")
    assert first.stages[0].cell_delay == pytest.approx(
        dff.intrinsic_delay + dff.drive_resistance * level.electricals["n1"].capacitance
    )
    port_stage = second.stages[0]
    assert port_stage.cell_delay == pytest.approx(
        constants.DEFAULT_PORT_DRIVE_RESISTANCE * level.electricals["nin"].capacitance
    )


def test_max_paths_limits_output(service, chain_design):
    level = service.generate_nets(chain_design)
    paths = extract_paths(chain_design, level.electricals, TimingLimits(max_paths=1))
    assert [p.endpoint for p in paths] == ["ff2/D"]
    assert extract_paths(chain_design, level.electricals, TimingLimits(max_paths=0)) == []


def test_unrouted_design_uses_lumped_nets(service):
    design = make_chain_design(routed=False)
    level = service.generate_nets(design)
    assert level.netvecs == []
    assert level.electricals["n1"].resistance == 0.0
    assert level.electricals["n1"].capacitance == pytest.approx(INV_CAP)
    paths = service.generate_paths(design, level)
    assert all(s.wire_delay == 0.0 for p in paths for s in p.stages)


def test_patches_conserve_wirelength(synth_design, synth_bundle):
    grid = synth_bundle.grid
    assert len(synth_bundle.patches) == grid.nx * grid.ny
    per_layer = {}
    for p in synth_bundle.patches:
        for layer, wl in p.wirelength.items():
            per_layer[layer] = per_layer.get(layer, 0) + wl
    expected = {}
    for net in synth_design.nets:
        for s in net.routing:
            expected[s.layer] = expected.get(s.layer, 0) + s.length
    assert per_layer == expected
    assert sum(p.via_count for p in synth_bundle.patches) == sum(len(n.vias) for n in synth_design.nets)
    assert sum(p.power for p in synth_bundle.patches) == pytest.approx(synth_bundle.design.metrics.total_power)


def test_design_stats(service, chain_design):
    bundle = service.vectorize(chain_design)
    counts = bundle.design.counts
    assert (counts.cells, counts.nets, counts.wires, counts.vias, counts.ports, counts.wired_nets) == (3, 3, 6, 3, 1, 3)
    assert bundle.design.pin_histogram == {2: 3}
    assert bundle.design.metrics.path_count == 2
    assert bundle.design.metrics.total_rwl == sum(bundle.design.layer_wirelength.values())


def test_vectorize_only_requested_levels(service, chain_design):
    bundle = service.vectorize(chain_design, ["net"])
    assert len(bundle.nets) == 3
    assert bundle.paths is None and bundle.patches is None and bundle.design is None
    full = service.vectorize(chain_design, LEVELS)
    assert full.graph is not None and full.grid is not None


def test_thread_count_does_not_change_output(synth_design):
    one = VectorService(WorkspaceConfig(), threads=1).generate_nets(synth_design)
    four = VectorService(WorkspaceConfig(), threads=4).generate_nets(synth_design)
    assert one.netvecs == four.netvecs


def _path_edges(parent, v):
    edges = set()
    while parent[v] >= 0:
        edges.add(v)
        v = parent[v]
    return edges


@pytest.mark.parametrize("seed", range(20))
def test_elmore_matches_shared_resistance_sums(seed):
    rng = np.random.default_rng(seed)
    for _ in range(50):
        n = int(rng.integers(1, 65))
        parent = [-1] + [int(rng.integers(0, v)) for v in range(1, n)]
        edge_r = [0.0] + rng.uniform(0.1, 100.0, n - 1).tolist()
        caps = rng.uniform(1e-16, 1e-14, n).tolist()
        delay, _ = elmore(parent, list(range(n)), edge_r, caps)
        paths = [_path_edges(parent, v) for v in range(n)]
        for v in range(n):
            expected = sum(caps[k] * sum(edge_r[e] for e in paths[v] & paths[k]) for k in range(n))
            assert delay[v] == pytest.approx(expected, rel=1e-12, abs=0.0)


@slow
def test_throughput_on_large_design(tmp_path):
    design = generate_synthetic(synth_params(11, n_instances=120_000, n_nets=100_000, n_routing_layers=6))
    assert sum(1 for n in design.nets if not n.name.startswith("clk")) == 100_000
    start = time.perf_counter()
    bundle = VectorService(WorkspaceConfig(), threads=8).vectorize(design)
    assert time.perf_counter() - start < 60.0
    ws = create_workspace(tmp_path / "ws", {"threads": 8})
    start = time.perf_counter()
    save_bundle(ws, bundle, design.name)
    assert time.perf_counter() - start < 60.0


def test_pin_density_is_per_unit_area_on_partial_patches(chain_design):
    # 7000-DBU patches on a 12000 x 14000 die: the right column is 5000 wide
    grid, patches = patch_features(chain_design, 7000 // 200)
    assert (grid.nx, grid.ny) == (2, 2)
    by_cell = {(p.ix, p.iy): p for p in patches}
    assert by_cell[(0, 0)].pin_density == 1.0
    assert by_cell[(1, 0)].pin_density == pytest.approx((1 / 35.0e6) / (4 / 49.0e6))
    assert by_cell[(0, 1)].pin_density == pytest.approx(0.25)
    assert by_cell[(1, 1)].pin_density == 0.0


def test_self_loop_edges_are_skipped_with_diagnostic():
    design = make_chain_design(routed=False)
    inv = design.instance("inv1")
    design.nets.append(Net("loop", [
        NetPin("inv1", "Y", pin_position(design.tech, inv, "Y"), PinDirection.DRIVER),
        NetPin("inv1", "A", pin_position(design.tech, inv, "A"), PinDirection.LOAD),
    ]))
    design.reindex()
    diagnostics = []
    graph = build_graph(design, diagnostics)
    assert len(graph.edges) == sum(len(n.loads) for n in design.nets) - 1
    assert diagnostics == ["net loop: self-loop inv1/Y -> inv1/A skipped"]
