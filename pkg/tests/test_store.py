import io

import numpy as np
import pandas as pd
import pytest

from exceptions import ConfigError, CorruptBundle, NotABundle, ShapeError, WorkspaceError
from models.schemas import FoundationBundle, WorkspaceConfig
from services.bundle_service import BundleService, load_bundle, manifest_digest, save_bundle
from services.synthetic_service import generate_synthetic
from services.tensor_io import save_npy, write_csv, write_npy
from services.vector_service import VectorService
from tests.conftest import slow, synth_params
from utils import canonical_json, fnv1a64, fnv1a64_many, format_float
from workspace import create_workspace, open_workspace


def test_fnv1a64_known_values():
    assert fnv1a64(b"") == "cbf29ce484222325"
    assert fnv1a64(b"a") == "af63dc4c8601ec8c"


def test_batched_digests_match_single_digests():
    rng = np.random.default_rng(3)
    blobs = [b"", b"a"] + [rng.integers(0, 256, int(n), dtype=np.uint8).tobytes() for n in rng.integers(0, 900, 40)]
    blobs.append(bytes(range(256)) * 300)
    assert fnv1a64_many(blobs, batch=7) == [fnv1a64(b) for b in blobs]
    assert fnv1a64_many([]) == []


def test_format_float_keeps_full_precision():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(3.0) == "3.0"
    with pytest.raises(ValueError):
        format_float(float("nan"))


def test_canonical_json_preserves_order():
    assert canonical_json({"b": 1, "a": [1.5, None, True]}) == '{"b":1,"a":[1.5,null,true]}\n'


def test_npy_header_is_aligned_and_loadable():
    data = write_npy(np.arange(6), (2, 3), "<f4")
    assert data.startswith(b"\x93NUMPY\x01\x00")
    header_len = int.from_bytes(data[8:10], "little")
    assert (10 + header_len) % 64 == 0
    assert b"'shape': (2, 3)" in data
    arr = np.load(io.BytesIO(data))
    assert arr.dtype == np.dtype("<f4")
    assert arr.tolist() == [[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]]


def test_npy_one_dimensional_shape():
    data = write_npy([1, 2, 3], dtype="<i8")
    assert b"'shape': (3,)" in data
    assert np.load(io.BytesIO(data)).tolist() == [1, 2, 3]


def test_npy_empty_tensor():
    data = write_npy(np.zeros((0, 4)), (0, 4))
    assert np.load(io.BytesIO(data)).shape == (0, 4)


def test_npy_shape_mismatch():
    with pytest.raises(ShapeError):
        write_npy(np.arange(5), (2, 3))
    with pytest.raises(ShapeError):
        write_npy(np.arange(4), dtype=">f4")


def test_save_npy(tmp_path):
    data = save_npy(tmp_path / "x.npy", np.ones((2, 2)), dtype="<f8")
    assert (tmp_path / "x.npy").read_bytes() == data


def test_csv_uses_crlf_and_full_precision(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, pd.DataFrame({"name": ["a,b", "c"], "value": [0.1, 2.0]}))
    raw = path.read_bytes()
    assert raw.startswith(b"name,value\r\n")
    assert b'"a,b",0.10000000000000001\r\n' in raw


def test_workspace_layout(workspace):
    assert sorted(p.name for p in workspace.root.iterdir()) == ["config.json", "feature", "report", "result", "vectors"]
    assert open_workspace(workspace.root).config == workspace.config


def test_workspace_rejects_bad_config(tmp_path):
    with pytest.raises(ConfigError) as e:
        create_workspace(tmp_path / "ws", {"patch_multiple": 0})
    assert e.value.field == "patch_multiple"


def test_missing_workspace(tmp_path):
    with pytest.raises(WorkspaceError):
        open_workspace(tmp_path / "nowhere")


def test_workspace_paths_stay_inside(workspace):
    with pytest.raises(WorkspaceError):
        workspace.path("../outside.txt")


def test_bundle_round_trip(workspace, synth_bundle):
    manifest = save_bundle(workspace, synth_bundle, "synth1")
    assert manifest.levels["net"].count == len(synth_bundle.nets)
    assert list(manifest.levels) == ["design", "net", "graph", "path", "patch"]
    assert load_bundle(workspace) == synth_bundle


def test_tampered_file_is_detected(workspace, synth_bundle):
    save_bundle(workspace, synth_bundle, "synth1")
    target = workspace.vectors / "nets" / "net_0.json"
    target.write_bytes(target.read_bytes().replace(b'"id":0', b'"id":9'))
    with pytest.raises(CorruptBundle) as e:
        load_bundle(workspace)
    assert e.value.file == "nets/net_0.json"


def test_missing_file_is_detected(workspace, synth_bundle):
    save_bundle(workspace, synth_bundle, "synth1")
    (workspace.vectors / "grid.json").unlink()
    with pytest.raises(CorruptBundle):
        load_bundle(workspace)


def test_directory_without_manifest(tmp_path):
    with pytest.raises(NotABundle):
        BundleService().load(tmp_path)


def test_partial_save_keeps_other_levels(workspace, synth_bundle):
    save_bundle(workspace, synth_bundle, "synth1")
    save_bundle(workspace, FoundationBundle(nets=synth_bundle.nets[:3]), "synth1")
    loaded = load_bundle(workspace)
    assert len(loaded.nets) == 3
    assert loaded.design == synth_bundle.design
    assert loaded.patches == synth_bundle.patches


def test_bundle_bytes_independent_of_threads(tmp_path, synth_bundle):
    one = create_workspace(tmp_path / "one", {"threads": 1})
    four = create_workspace(tmp_path / "four", {"threads": 4})
    save_bundle(one, synth_bundle, "synth1")
    save_bundle(four, synth_bundle, "synth1")
    assert manifest_digest(one) == manifest_digest(four)


@slow
@pytest.mark.parametrize("seed", [21, 22, 23])
def test_vectorized_bundles_identical_across_thread_counts(tmp_path, seed):
    design = generate_synthetic(synth_params(seed, n_instances=2000, n_nets=1800))
    digests = []
    for threads in (1, 8):
        ws = create_workspace(tmp_path / f"t{threads}", {"threads": threads})
        bundle = VectorService(WorkspaceConfig(threads=threads), threads=threads).vectorize(design)
        save_bundle(ws, bundle, design.name)
        digests.append(manifest_digest(ws))
    assert digests[0] == digests[1]
