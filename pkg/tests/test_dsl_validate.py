import pytest

from hpdp.core.dims import ArrayDims
from hpdp.dsl.model import AluPae, ArrayConfig, Channel, RamPae, StreamPort
from hpdp.dsl.parser import parse
from hpdp.dsl.report import config_report, parse_resource_counts
from hpdp.dsl.validate import errors_only, validate
from hpdp.mapper.conv import map_conv

from conftest import identity_layer


def codes(config):
    return [d.code for d in validate(config)]


def route(name, row, col):
    return AluPae(name, row, col, "route", (), ("in0",), ("out0",))


def chain_config():
    return ArrayConfig(
        paes=(route("a", 0, 0), route("b", 0, 1)),
        channels=(Channel("a", "out0", "b", "in0"),),
        streams=(StreamPort("x", "in", "a", "in0"), StreamPort("y", "out", "b", "out0")),
    )


def test_clean_chain_has_no_diagnostics():
    assert validate(chain_config()) == []


def test_full_alu_grid_is_within_budget():
    paes = tuple(route(f"p{r}_{c}", r, c) for r in range(5) for c in range(8))
    cfg = ArrayConfig(paes=paes)
    assert cfg.alu_used == 40
    assert "E100" not in codes(cfg)


def test_over_budget():
    paes = tuple(route(f"p{i}", 0, 0) for i in range(41))
    rams = tuple(RamPae(f"m{i}", 0, 0) for i in range(17))
    found = codes(ArrayConfig(paes=paes, rams=rams))
    assert "E100" in found and "E101" in found


def test_undriven_input():
    cfg = ArrayConfig(paes=(route("a", 0, 0),), streams=(StreamPort("y", "out", "a", "out0"),))
    diags = errors_only(validate(cfg))
    assert [d.code for d in diags] == ["E102"]
    assert "a.in0" in diags[0].message


def test_multiple_drivers():
    cfg = ArrayConfig(paes=(route("a", 0, 0),),
                      streams=(StreamPort("x", "in", "a", "in0"), StreamPort("x2", "in", "a", "in0"),
                               StreamPort("y", "out", "a", "out0")))
    assert "E103" in codes(cfg)


def test_undeclared_port():
    cfg = chain_config()
    cfg = ArrayConfig(paes=cfg.paes, channels=(Channel("a", "out0", "b", "in1"),), streams=cfg.streams)
    found = codes(cfg)
    assert "E104" in found and "E102" in found


def test_preload_over_capacity():
    big = RamPae("m", 0, 0, "fifo", False, (), ("out0",), tuple(range(5000)))
    assert "E105" in codes(ArrayConfig(rams=(big,)))
    small = ArrayConfig(ArrayDims(ram_capacity=16), rams=(RamPae("m", 0, 0, preload=tuple(range(17))),))
    assert "E105" in codes(small)


def test_fan_out_needs_dup():
    cfg = ArrayConfig(
        paes=(route("a", 0, 0), route("b", 0, 1), route("c", 0, 2)),
        channels=(Channel("a", "out0", "b", "in0"), Channel("a", "out0", "c", "in0")),
        streams=(StreamPort("x", "in", "a", "in0"), StreamPort("y", "out", "b", "out0"),
                 StreamPort("z", "out", "c", "out0")),
    )
    diags = errors_only(validate(cfg))
    assert [d.code for d in diags] == ["E106"]


def test_warnings_for_unused_and_unreachable():
    cfg = ArrayConfig(paes=(route("a", 0, 0), route("lonely", 1, 1)),
                      channels=(Channel("lonely", "out0", "lonely", "in0"),),
                      streams=(StreamPort("x", "in", "a", "in0"),))
    diags = validate(cfg)
    assert not errors_only(diags)
    found = [(d.code, d.message) for d in diags]
    assert ("W110", "unused output a.out0") in found
    assert any(code == "W111" and "lonely" in msg for code, msg in found)


def test_programmatic_duplicates_and_placement():
    cfg = ArrayConfig(paes=(route("a", 0, 0), route("a", 0, 0), route("b", 7, 0)))
    found = codes(cfg)
    assert {"E010", "E011", "E012"} <= set(found)


def test_stream_names_are_unique_and_distinct_from_elements():
    shared = ArrayConfig(
        paes=(route("a", 0, 0), route("b", 0, 1)),
        channels=(Channel("a", "out0", "b", "in0"),),
        streams=(StreamPort("x", "in", "a", "in0"), StreamPort("x", "out", "b", "out0")),
    )
    assert [d.code for d in errors_only(validate(shared))] == ["E010"]

    clash = ArrayConfig(
        paes=(route("a", 0, 0),),
        streams=(StreamPort("a", "in", "a", "in0"), StreamPort("o", "out", "a", "out0")),
    )
    errors = errors_only(validate(clash))
    assert [d.code for d in errors] == ["E010"]
    assert "already an element name" in errors[0].message


def test_mapped_config_validates():
    spec = identity_layer(c=3)
    kernel = map_conv(spec)
    for mp in kernel.passes:
        assert errors_only(validate(mp.config)) == []


# --- report -------------------------------------------------------------------

def test_empty_report():
    text = config_report(ArrayConfig())
    assert "0/40 ALU, 0/16 RAM" in text
    assert parse_resource_counts(text) == {"alu_used": 0, "alu_total": 40, "ram_used": 0, "ram_total": 16,
                                           "ram_words_used": 0, "ram_words_total": 16 * 4096}


def test_report_matches_config():
    text = "array 5x8 alu 2x8 ram name demo\n" \
           "ram m at (1,3) mode fifo loop in[] out[out0]\npreload m 1 2 3\n" \
           "pae a at (2,4) op add in[in0,in1] out[out0]\n" \
           "stream in x -> a.in0\nconnect m.out0 -> a.in1\nstream out y <- a.out0\n"
    cfg = parse(text).config
    report = config_report(cfg)
    counts = parse_resource_counts(report)
    assert counts["alu_used"] == cfg.alu_used == 1
    assert counts["ram_used"] == cfg.ram_used == 1
    assert counts["ram_words_used"] == 3
    assert report.startswith("config demo\n")
    assert "  m.out0 -> a.in1" in report
    assert "  m ram(1,3) fifo loop words=3" in report


def test_report_without_resource_line():
    with pytest.raises(ValueError):
        parse_resource_counts("nothing here")
