import numpy as np
import pytest

from exceptions import ConstantColumn, EmptyDataset, IncompleteBundle, InsightError, InvalidMap
from models.schemas import FoundationBundle
from services.bundle_service import save_bundle
from services.insight_service import (
    build_report,
    correlate,
    feature_maps,
    generate_report,
    pearson,
    quartiles,
    render_heatmap,
    summarize,
)


def test_pearson_perfect_and_inverse():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_pearson_constant_column():
    with pytest.raises(ConstantColumn) as e:
        pearson([1, 2, 3], [5, 5, 5], "rudy")
    assert e.value.name == "rudy"


def test_pearson_length_mismatch():
    with pytest.raises(InsightError):
        pearson([1, 2], [1, 2, 3])


def test_correlate_matrix_is_symmetric():
    cm = correlate({"a": [1, 2, 3, 4], "b": [2, 4, 6, 9], "c": [4, 3, 2, 1]})
    m = np.asarray(cm.matrix)
    assert cm.labels == ["a", "b", "c"]
    assert np.allclose(m, m.T)
    assert np.allclose(np.diag(m), 1.0)
    assert m[0, 2] == pytest.approx(-1.0)


def test_quartiles():
    assert quartiles([1, 2, 3, 4, 5]) == (1.0, 2.0, 3.0, 4.0, 5.0)
    assert quartiles([]) is None


def test_heatmap_pgm_bottom_row_is_origin():
    data = render_heatmap([[0.0, 1.0], [2.0, 3.0]], "pgm")
    assert data == b"P5\n2 2\n255\n" + bytes([170, 255, 0, 85])


def test_heatmap_scale_and_constant_map():
    data = render_heatmap(np.full((2, 3), 7.0), "pgm", scale=2)
    header = b"P5\n6 4\n255\n"
    assert data.startswith(header)
    assert set(data[len(header):]) == {128}


def test_heatmap_svg():
    text = render_heatmap([[0.0, 1.0]], "svg", "gray").decode()
    assert text.startswith("<svg")
    assert 'fill="#000000"' in text and 'fill="#ffffff"' in text


@pytest.mark.parametrize("values", [[], [[1.0, float("nan")]], [1.0, 2.0]])
def test_heatmap_rejects_bad_maps(values):
    with pytest.raises(InvalidMap):
        render_heatmap(values)


def test_heatmap_unknown_format():
    with pytest.raises(InvalidMap):
        render_heatmap([[0.0, 1.0]], "png")


def test_summarize(synth_bundle):
    s = summarize([synth_bundle])
    assert s.designs == ["synth1"]
    assert s.net_count == synth_bundle.design.counts.nets
    assert sum(s.layer_shares.values()) == pytest.approx(1.0)
    assert s.path_delay_quartiles[0] <= s.path_delay_quartiles[4]
    with pytest.raises(EmptyDataset):
        summarize([])


def test_feature_maps_shape(synth_bundle):
    maps = feature_maps(synth_bundle)
    g = synth_bundle.grid
    assert maps["congestion"].shape == (g.ny, g.nx)
    with pytest.raises(IncompleteBundle):
        feature_maps(FoundationBundle())


def test_report_sections(synth_bundle):
    text = build_report(synth_bundle)
    assert text.startswith("# Design report: synth1\n")
    assert "## Metrics" in text
    assert "## Timing paths" in text
    assert "## Fidelity" not in text


def test_generate_report_writes_files(workspace, synth_bundle):
    save_bundle(workspace, synth_bundle)
    generate_report(workspace)
    out = workspace.report
    assert (out / "report.md").is_file()
    assert (out / "stats.json").is_file()
    assert (out / "congestion.pgm").read_bytes().startswith(b"P5\n")
    assert (out / "rudy.svg").is_file()


def test_routed_length_tracks_hpwl(synth_bundle):
    rwl = [nv.features.rwl for nv in synth_bundle.nets]
    hp = [nv.features.hpwl for nv in synth_bundle.nets]
    assert pearson(rwl, hp) >= 0.85


def test_correlation_ignores_affine_rescaling():
    rng = np.random.default_rng(4)
    a, b = rng.random(40), rng.random(40)
    assert pearson(3.0 * a + 7.0, b) == pytest.approx(pearson(a, b))
    assert pearson(-2.0 * a, b) == pytest.approx(-pearson(a, b))
