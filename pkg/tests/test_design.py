import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from exceptions import ConfigError, DuplicateName, ParseError, TechError, UnknownMaster
from models.design import InstanceClass, PinDirection
from models.schemas import ClassRule
from services.def_service import parse_def, write_def
from services.design_service import (
    classify_instance,
    load_tech_sidecar,
    merge_sidecar,
    sidecar_of,
    validate_design,
)
from services.lef_service import parse_lef, write_lef
from services.net_service import count_bends, decompose_net
from services.synthetic_service import build_synthetic_tech, generate_synthetic
from tests.conftest import slow, synth_params

MINIMAL_DEF = """VERSION 5.8 ;
DESIGN tiny ;
UNITS DISTANCE MICRONS 1000 ;
DIEAREA ( 0 0 ) ( 10000 10000 ) ;
COMPONENTS 2 ;
- u1 INV + PLACED ( 0 0 ) N ;
- u2 INV + PLACED ( 4000 0 ) N ;
END COMPONENTS
NETS 1 ;
- n1 ( u1 Y ) ( u2 A )
  + ROUTED M1 ( 300 900 ) ( 4100 900 ) ;
END NETS
END DESIGN
"""


def test_lef_round_trip_keeps_geometry(tech):
    parsed = parse_lef(write_lef(tech))
    assert [l.name for l in parsed.layers] == [l.name for l in tech.layers]
    assert parsed.vias == tech.vias
    assert parsed.site == tech.site
    assert [m.pins for m in parsed.masters] == [m.pins for m in tech.masters]
    assert parsed.layer("M1").unit_r is None


def test_lef_plus_sidecar_restores_technology(tech):
    parsed = merge_sidecar(parse_lef(write_lef(tech)), sidecar_of(tech))
    assert parsed == tech


def test_sidecar_units_must_match(tech):
    sidecar = sidecar_of(tech).model_copy(update={"dbu_per_micron": 2000})
    with pytest.raises(TechError):
        merge_sidecar(tech, sidecar)


def test_sidecar_validation_names_field():
    with pytest.raises(ConfigError) as e:
        load_tech_sidecar('{"dbu_per_micron": "many"}')
    assert e.value.field.startswith("tech_sidecar.dbu_per_micron")


def test_def_round_trip(chain_design):
    assert parse_def(write_def(chain_design), chain_design.tech) == chain_design


def test_synthetic_def_round_trip(synth_design):
    assert parse_def(write_def(synth_design), synth_design.tech) == synth_design


def test_parse_minimal_def(tech):
    design = parse_def(MINIMAL_DEF, tech)
    net = design.net("n1")
    assert net.driver.label == "u1/Y"
    assert [p.direction for p in net.pins] == [PinDirection.DRIVER, PinDirection.LOAD]
    assert net.routing[0].length == 3800
    assert design.core == design.die


def test_unknown_master_reports_line(tech):
    text = MINIMAL_DEF.replace("- u2 INV", "- u2 NOPE")
    with pytest.raises(UnknownMaster) as e:
        parse_def(text, tech)
    assert e.value.line == 7


def test_duplicate_component(tech):
    text = MINIMAL_DEF.replace("- u2 INV", "- u1 INV")
    with pytest.raises(DuplicateName):
        parse_def(text, tech)


def test_diagonal_route_rejected(tech):
    text = MINIMAL_DEF.replace("( 4100 900 )", "( 4100 500 )")
    with pytest.raises(ParseError) as e:
        parse_def(text, tech)
    assert e.value.line == 11


def test_truncated_def_is_a_parse_error(tech):
    with pytest.raises(ParseError):
        parse_def(MINIMAL_DEF[: MINIMAL_DEF.index("NETS")] + "NETS 1 ;\n- n1 ( u1", tech)


def test_units_must_match_technology(tech):
    with pytest.raises(ParseError):
        parse_def(MINIMAL_DEF.replace("MICRONS 1000", "MICRONS 2000"), tech)


def test_classification_order(tech):
    assert classify_instance("CLKBUF", tech) is InstanceClass.CLOCK
    assert classify_instance("NAND2", tech) is InstanceClass.LOGIC
    rules = [ClassRule(pattern="NAND*", tag="macro")]
    assert classify_instance("NAND2", tech, rules) is InstanceClass.MACRO
    with pytest.raises(UnknownMaster):
        classify_instance("NOPE", tech)


def test_lef_class_wins_over_rules():
    tech = build_synthetic_tech(4, with_macro=True)
    rules = [ClassRule(pattern="SRAM*", tag="logic")]
    assert classify_instance("SRAM8X8", tech, rules) is InstanceClass.MACRO


def test_validate_design_flags_overlap(chain_design):
    assert validate_design(chain_design) == []
    moved = write_def(chain_design).replace("- inv1 INV + PLACED ( 4000 0 )", "- inv1 INV + PLACED ( 100 0 )")
    design = parse_def(moved, chain_design.tech)
    assert any("overlap" in v for v in validate_design(design))


def test_synthetic_is_deterministic():
    a = generate_synthetic(synth_params(7, n_instances=120, n_nets=100))
    b = generate_synthetic(synth_params(7, n_instances=120, n_nets=100))
    c = generate_synthetic(synth_params(8, n_instances=120, n_nets=100))
    assert write_def(a) == write_def(b)
    assert write_def(a) != write_def(c)


def test_synthetic_design_is_valid(synth_design):
    assert validate_design(synth_design) == []
    assert len(synth_design.instances) == 200
    assert any(n.is_routed for n in synth_design.nets)


TOKENS = MINIMAL_DEF.split()


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(
    cut=st.integers(0, len(TOKENS)),
    span=st.integers(0, 4),
    junk=st.sampled_from(["", ";", "(", ")", "-", "+", "END", "1e9", "-7", "M9", "X"]),
)
def test_mangled_def_parses_or_raises_parse_error(tech, cut, span, junk):
    mangled = " ".join(TOKENS[:cut] + ([junk] if junk else []) + TOKENS[cut + span:])
    try:
        design = parse_def(mangled, tech)
    except ParseError:
        return
    assert design.die.width >= 0


def test_two_pin_routes_use_l_and_z_shapes(synth_design):
    two_pin = [decompose_net(net, k) for k, net in enumerate(synth_design.nets) if len(net.pins) == 2]
    bends = [count_bends(nv.subnets[0].nodes) for nv in two_pin if nv.subnets]
    assert 1 in bends
    assert 2 in bends


def test_clock_nets_come_on_top_of_signal_nets(synth_design):
    clock = [n for n in synth_design.nets if n.name.startswith("clk")]
    assert clock
    assert len(synth_design.nets) - len(clock) == 180


@slow
def test_default_pin_mix_is_mostly_two_and_three_pin_nets():
    design = generate_synthetic(synth_params(5, n_instances=12_000, n_nets=10_000, n_inputs=8))
    share = sum(1 for n in design.nets if 2 <= len(n.pins) <= 3) / len(design.nets)
    assert 0.75 <= share <= 0.85
