from dataclasses import replace

import pytest

from exceptions import IncompleteBundle, IncomparableDesigns, TechError
from models.geometry import Point, Rect
from models.schemas import FoundationBundle, WorkspaceConfig
from services.fidelity_service import FidelityService, fidelity_ratio, reconstruct_design
from services.synthetic_service import build_synthetic_tech, generate_synthetic
from services.vector_service import VectorService
from tests.conftest import make_chain_design, slow, synth_params


@pytest.mark.parametrize(
    "original, reconstructed, expected",
    [
        (0.0, 0.0, (1.0, 0.0)),
        (-2.0, -1.0, (0.5, 1.0)),
        (-1.0, 1.0, (None, 2.0)),
        (2.0, 0.0, (None, -2.0)),
        (None, 1.0, (None, None)),
        (4.0, 5.0, (1.25, 1.0)),
    ],
)
def test_fidelity_ratio(original, reconstructed, expected):
    assert fidelity_ratio(original, reconstructed) == expected


def test_reconstruct_chain_exactly(chain_design):
    bundle = VectorService().vectorize(chain_design)
    assert reconstruct_design(bundle, chain_design.tech) == chain_design


def test_unrouted_nets_come_back_from_graph():
    design = make_chain_design(routed=False)
    bundle = VectorService().vectorize(design)
    rebuilt = reconstruct_design(bundle, design.tech)
    assert [n.name for n in rebuilt.nets] == ["n1", "n2", "nin"]
    assert rebuilt.net("n1").driver.label == "ff1/Q"
    assert [p.label for p in rebuilt.net("nin").loads] == ["ff1/D"]


def test_reconstruction_needs_three_levels(synth_bundle, tech):
    partial = FoundationBundle(design=synth_bundle.design, nets=synth_bundle.nets)
    with pytest.raises(IncompleteBundle):
        reconstruct_design(partial, tech)


def test_reconstruction_checks_units(synth_bundle):
    other = build_synthetic_tech(4)
    other.dbu_per_micron = 2000
    with pytest.raises(TechError):
        reconstruct_design(synth_bundle, other)


def test_round_trip_ratios_are_one(synth_design, synth_bundle):
    rebuilt = reconstruct_design(synth_bundle, synth_design.tech)
    report = FidelityService(WorkspaceConfig()).compare(synth_design, rebuilt)
    assert report.wirelength_ratio == 1.0
    assert report.power_ratio == pytest.approx(1.0)
    assert report.tns_ratio == pytest.approx(1.0)
    if report.wns_ratio is not None:
        assert report.wns_ratio == pytest.approx(1.0)
    assert report.density_correlation == pytest.approx(1.0)
    assert report.violating_paths[0] == report.violating_paths[1]
    assert report.passed["wirelength"] and report.passed["density"]


def test_coarsened_density_still_correlates(synth_design, synth_bundle):
    rebuilt = reconstruct_design(synth_bundle, synth_design.tech)
    report = FidelityService().compare(synth_design, rebuilt, coarsen=2)
    assert report.coarsen == 2
    assert report.wirelength_ratio == 1.0
    assert report.density_correlation is None or -1.0 <= report.density_correlation <= 1.0


def test_designs_must_share_die(chain_design):
    other = replace(make_chain_design(), die=Rect(Point(0, 0), Point(20000, 20000)))
    with pytest.raises(IncomparableDesigns):
        FidelityService().compare(chain_design, other)


def test_coarsen_must_be_positive(chain_design):
    with pytest.raises(IncomparableDesigns):
        FidelityService().compare(chain_design, make_chain_design(), coarsen=0)


@slow
def test_round_trip_over_synthetic_corpus():
    service = VectorService(WorkspaceConfig(), threads=4)
    for k in range(20):
        cells = 1000 + k * 1000
        design = generate_synthetic(synth_params(100 + k, n_instances=cells, n_nets=int(cells * 0.9), profile="hotspots"))
        rebuilt = reconstruct_design(service.vectorize(design), design.tech)
        full = FidelityService().compare(design, rebuilt)
        assert full.wirelength_ratio == 1.0
        assert full.power_ratio == pytest.approx(1.0)
        assert full.density_correlation == pytest.approx(1.0)
        assert FidelityService().compare(design, rebuilt, coarsen=2).density_correlation >= 0.95
