import math

import numpy as np
import pandas as pd
import pytest

from exceptions import ConfigError, DatasetError, EmptyDataset, GridTooSmall, IncompleteBundle
from models.schemas import (
    DatasetConfig,
    FoundationBundle,
    GraphEdge,
    GraphNode,
    GraphVec,
    GridSpec,
    NetFeatures,
    NetVec,
    PatchVec,
    PathStage,
    PathVec,
    PinRecord,
    SubnetRecord,
)
from services.bundle_service import save_bundle
from services.dataset_service import (
    MASK_CHANNELS,
    DatasetService,
    area_resize,
    build_dataset,
    graph_batch,
    largest_remainder,
    pooling_matrix,
    routing_mask,
    sequence_paths,
    spatial_congestion,
    split_stratified,
    tabular_wirelength,
    window_starts,
)
from services.vector_service import VectorService
from utils import read_json
from workspace import create_workspace

CELL = 100


@pytest.fixture(scope="module")
def chain_bundle():
    from tests.conftest import make_chain_design

    return VectorService().vectorize(make_chain_design())


def grid_bundle(nx, ny, nets=None):
    grid = GridSpec(origin_x=0, origin_y=0, cell_w=CELL, cell_h=CELL, nx=nx, ny=ny,
                    width=nx * CELL, height=ny * CELL)
    patches = [
        PatchVec(
            id=iy * nx + ix, ix=ix, iy=iy,
            bbox=(ix * CELL, iy * CELL, (ix + 1) * CELL, (iy + 1) * CELL),
            cell_density=0.1 * ix, pin_density=0.1 * iy, net_density=0.5, rudy=0.01 * (ix + iy),
            congestion_total=float(ix * iy),
        )
        for iy in range(ny) for ix in range(nx)
    ]
    return FoundationBundle(grid=grid, patches=patches, nets=nets)


def straight_net():
    features = NetFeatures(fanout=1, aspect_ratio=0.0, hpwl=500, rsmt=500, l_ness=1.0, rwl=500, via_count=0)
    return NetVec(
        id=0, name="n", bbox=(150, 450, 650, 450), features=features,
        pins=[PinRecord(owner="a", pin="Y", x=150, y=450, direction="driver"),
              PinRecord(owner="b", pin="A", x=650, y=450, direction="load")],
        wires=[(150, 450, 650, 450, 1)],
        subnets=[SubnetRecord(load="b/A", nodes=[(150, 450, 1), (650, 450, 1)])],
    )


def test_tabular_rows(chain_bundle):
    data = tabular_wirelength([chain_bundle])
    assert data.columns == ["aspect_ratio", "fanout", "hpwl", "rsmt", "l_ness"]
    assert data.nets == ["n1", "n2", "nin"]
    n1 = data.nets.index("n1")
    assert data.values[n1].tolist() == pytest.approx([400 / 2434, 1, 2834, 2834, 1.0])
    assert data.labels[n1].tolist() == [1.0, 1.0]


def test_tabular_excludes_zero_rsmt(chain_bundle):
    nets = [nv.model_copy(deep=True) for nv in chain_bundle.nets]
    nets[0].features.rsmt = 0
    data = tabular_wirelength([FoundationBundle(design=chain_bundle.design, nets=nets)])
    assert len(data.values) == 2
    assert data.diagnostics == ["1 nets with zero RSMT excluded"]


def test_tabular_needs_nets():
    with pytest.raises(IncompleteBundle):
        tabular_wirelength([FoundationBundle()])


def test_sequence_padding_and_denormalize(chain_bundle):
    data = sequence_paths([chain_bundle], max_len=4)
    assert data.tensor.shape == (2, 4, len(data.features))
    assert data.mask.tolist() == [[1, 1, 0, 0], [1, 0, 0, 0]]
    assert data.lengths.tolist() == [2, 1]
    raw = data.denormalize()
    first = chain_bundle.paths[0].stages[0]
    col = data.features.index("resistance")
    assert raw[0, 0, col] == pytest.approx(first.resistance)
    assert np.all(raw[1, 1:] == 0.0)
    assert data.targets.tolist() == [p.delay for p in chain_bundle.paths]


def test_sequence_truncation_keeps_prefix(chain_bundle):
    data = sequence_paths([chain_bundle], max_len=1)
    assert data.mask.tolist() == [[1], [1]]
    assert data.lengths.tolist() == [2, 1]
    assert "1 paths truncated to 1 stages" in data.diagnostics


def test_sequence_robust_scaling(chain_bundle):
    data = sequence_paths([chain_bundle], max_len=2, robust=True)
    assert data.robust
    stacked = np.asarray([[s.resistance] for p in chain_bundle.paths for s in p.stages])
    assert data.center[0] == pytest.approx(float(np.median(stacked)))


def test_sequence_length_must_be_positive(chain_bundle):
    with pytest.raises(ConfigError) as e:
        sequence_paths([chain_bundle], max_len=0)
    assert e.value.field == "dataset.sequence_len"


def test_window_starts():
    assert window_starts(10, 4, 3) == [0, 3, 6]
    assert window_starts(4, 4, 3) == [0]


def test_spatial_windows_row_major():
    data = spatial_congestion(grid_bundle(10, 10), window=4, stride=3)
    assert data.inputs.shape == (9, 4, 4, 4)
    assert data.labels.shape == (9, 1, 4, 4)
    assert data.origins[:4] == [(0, 0), (0, 3), (0, 6), (3, 0)]
    assert data.labels[4, 0, 0, 0] == 3.0 * 3.0
    assert data.inputs[1, 0, 0, 0] == pytest.approx(0.3)


def test_spatial_grid_too_small():
    with pytest.raises(GridTooSmall):
        spatial_congestion(grid_bundle(3, 10), window=4, stride=3)


def test_pooling_matrix_rows_sum_to_one():
    w = pooling_matrix(10, 16)
    assert w.shape == (16, 10)
    assert np.allclose(w.sum(axis=1), 1.0)
    assert np.allclose(pooling_matrix(4, 2), [[0.5, 0.5, 0, 0], [0, 0, 0.5, 0.5]])


def test_area_resize_preserves_mean():
    values = np.arange(12, dtype=float).reshape(3, 4)
    assert area_resize(values, 6).mean() == pytest.approx(values.mean())


def test_routing_mask_straight_route():
    cfg = DatasetConfig(mask_size=16, mask_margin=2)
    data = routing_mask(grid_bundle(10, 10, [straight_net()]), cfg)
    assert data.channels == list(MASK_CHANNELS)
    assert data.inputs.shape == (1, 10, 16, 16)
    assert data.labels.shape == (1, 1, 16, 16)
    source, target = data.inputs[0, 8], data.inputs[0, 9]
    assert source.sum() == 1.0 and target.sum() == 1.0
    assert source[7, 2] == 1.0 and target[7, 10] == 1.0
    rows = np.nonzero(data.labels[0, 0].any(axis=1))[0]
    assert rows.tolist() == [7]
    assert data.labels[0, 0, 7].sum() == 9


def test_routing_mask_skips_oversized_regions():
    cfg = DatasetConfig(mask_max_region=4)
    data = routing_mask(grid_bundle(10, 10, [straight_net()]), cfg)
    assert data.inputs.shape[0] == 0
    assert data.skipped == 1


def test_graph_batch_offsets(chain_bundle):
    small = FoundationBundle(
        graph=GraphVec(
            nodes=[GraphNode(id=i, name=f"u{i}", cls="logic", master="INV", x=100 * i, y=0) for i in range(3)],
            edges=[GraphEdge(src=0, dst=1, net="a", src_pin="Y", dst_pin="A"),
                   GraphEdge(src=1, dst=2, net="b", src_pin="Y", dst_pin="A")],
        ),
        paths=[
            PathVec(id=k, startpoint="u0/Y", endpoint="u2/A", delay=d, slack=1e-9 - d, stage_count=1,
                    stages=[PathStage(name="u0/Y", net="a", x=0, y=0, capacitance=0.0, slew=0.0, resistance=0.0,
                                      cell_delay=d, wire_delay=0.0, incr_delay=d)])
            for k, d in enumerate((1e-10, 4e-10))
        ],
    )
    data = graph_batch([small, chain_bundle])
    assert data.offsets.tolist() == [0, 3, 7]
    assert data.nodes.shape == (7, 9)
    assert data.edges.tolist() == [[0, 1], [1, 2], [3, 5], [5, 4], [6, 3]]
    assert data.path_offsets.tolist() == [0, 2, 4]
    assert data.targets[:2].tolist() == pytest.approx([-1.0, 1.0])
    assert data.path_nodes[2] == [3, 5, 4]
    assert data.path_nodes[3] == [6, 3]
    assert data.nodes[4, 0] == pytest.approx(8000 / 12000)
    assert data.nodes[6, 4 + 4] == 1.0
    mu, sd = data.target_stats["design_0"]
    assert mu == pytest.approx((math.log(1e-10) + math.log(4e-10)) / 2)


def test_largest_remainder():
    assert largest_remainder(30, (0.7, 0.1, 0.2)) == [21, 3, 6]
    assert largest_remainder(1, (0.7, 0.1, 0.2)) == [1, 0, 0]
    assert sum(largest_remainder(7, (1 / 3, 1 / 3, 1 / 3))) == 7


def test_split_reproduces_design_counts():
    designs = {f"d{i:02d}": 10 + i for i in range(30)}
    fractions = (19 / 30, 3 / 30, 8 / 30)
    train, val, test = split_stratified(designs, 3, fractions, seed=5)
    assert (len(train), len(val), len(test)) == (19, 3, 8)
    assert sorted(train + val + test) == sorted(designs)
    assert split_stratified(designs, 3, fractions, seed=5) == (train, val, test)


def test_split_rejects_bad_fractions():
    with pytest.raises(ConfigError) as e:
        split_stratified({"a": 1, "b": 2, "c": 3}, 1, (0.5, 0.5, 0.5))
    assert e.value.field == "dataset.split_fractions"
    with pytest.raises(ConfigError):
        split_stratified({"a": 1}, 3)


def test_duplicate_design_names_rejected(tmp_path, chain_bundle):
    a = create_workspace(tmp_path / "a")
    b = create_workspace(tmp_path / "b")
    save_bundle(a, chain_bundle)
    save_bundle(b, chain_bundle)
    with pytest.raises(DatasetError):
        DatasetService().load_data([a, b])


def test_unknown_task(chain_bundle):
    service = DatasetService()
    service.bundles = [chain_bundle]
    with pytest.raises(ConfigError):
        service.parse_data("images")
    with pytest.raises(EmptyDataset):
        DatasetService().parse_data("tabular")


def test_build_dataset_writes_feature_files(workspace, chain_bundle):
    save_bundle(workspace, chain_bundle)
    manifest = build_dataset(workspace, ["tabular", "sequence", "spatial", "graph"])
    out = workspace.feature
    assert manifest.designs == ["chain"]
    assert manifest.split == {"train": ["chain"], "val": [], "test": []}
    assert manifest.shapes["tabular_X"] == [3, 5]
    assert manifest.shapes["sequence_mask"][0] == 2
    assert manifest.counts["graph_paths"] == 2
    for stem in ("tabular_X", "tabular_y", "sequence_X", "spatial_X", "graph_nodes", "graph_offsets"):
        assert (out / f"{stem}.npy").is_file()
    assert np.load(out / "sequence_mask.npy").dtype == np.uint8
    assert np.load(out / "graph_offsets.npy").tolist() == [0, 4]
    table = pd.read_csv(out / "tabular.csv")
    assert list(table.columns[:2]) == ["design", "net"]
    assert read_json(out / "dataset_manifest.json")["seed"] == 0
