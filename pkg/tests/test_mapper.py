import numpy as np
import pytest

from hpdp.core.dims import ArrayDims
from hpdp.dsl.parser import parse
from hpdp.dsl.emit import emit
from hpdp.dsl.validate import errors_only, validate
from hpdp.errors import MappingError
from hpdp.integration.jobs import LayerJob
from hpdp.integration.memory import activation_image
from hpdp.integration.orchestrator import execute_layer, prepare_pass
from hpdp.mapper.conv import InputKind, MappedKernel, folded_bias, map_conv
from hpdp.mapper.estimate import critical_path, estimate_cycles, resource_report
from hpdp.mapper.sidecar import read_mapped_kernel, sidecar_path, write_mapped_kernel
from hpdp.mapper.strategy import StrategyKind, alu_budget, choose_strategy, ram_budget
from hpdp.quant.golden import reference_output
from hpdp.utils.words import wrap32

from conftest import identity_layer, random_tensor


def run(spec, inp, **kwargs):
    return execute_layer(LayerJob(spec, inp), **kwargs)


# --- strategy -----------------------------------------------------------------

@pytest.mark.parametrize("kernel, stride, kind", [
    ((1, 1), 1, StrategyKind.SPATIAL_1X1),
    ((1, 1), 2, StrategyKind.SPATIAL_1X1),
    ((3, 3), 1, StrategyKind.LINE_BUFFER_3X3),
    ((3, 3), 2, StrategyKind.TILED_GENERIC),
    ((5, 5), 1, StrategyKind.TILED_GENERIC),
    ((1, 3), 1, StrategyKind.TILED_GENERIC),
])
def test_strategy_rules(make_layer, kernel, stride, kind):
    r, s = kernel
    spec, _ = make_layer(8, 8, 4, 2, r, s, stride=stride)
    assert choose_strategy(spec).kind is kind


@pytest.mark.parametrize("k, r, t_k", [(24, 3, 12), (48, 3, 12), (96, 3, 12), (96, 1, 14)])
def test_channel_tile_for_suite_shapes(make_layer, k, r, t_k):
    spec, _ = make_layer(r, r, 4, k, r, r)
    strategy = choose_strategy(spec)
    assert strategy.t_k == t_k
    assert alu_budget(t_k) <= 40
    assert ram_budget(t_k, strategy.uses_line_buffer) <= 16


def test_line_buffer_falls_back_when_rows_do_not_fit(make_layer):
    spec, _ = make_layer(8, 8, 4, 2, 3, 3)
    assert choose_strategy(spec, ArrayDims(ram_capacity=20)).kind is StrategyKind.TILED_GENERIC
    assert choose_strategy(spec, ArrayDims(ram_capacity=30)).kind is StrategyKind.LINE_BUFFER_3X3


def test_band_height_follows_ram_capacity(make_layer):
    spec, _ = make_layer(8, 8, 4, 2, 3, 3)
    # 10 padded words per row: 4 rows fit 40 words, giving 2 output rows per band
    assert choose_strategy(spec, ArrayDims(ram_capacity=40)).t_y == 2
    assert choose_strategy(spec).t_y == 8


def test_unsupported_geometry(make_layer):
    spec, _ = make_layer(10, 10, 1, 1, 8, 8)
    with pytest.raises(MappingError, match="8x8"):
        map_conv(spec)
    spec, _ = make_layer(6, 6, 4, 1, 3, 3)
    with pytest.raises(MappingError, match="weight words"):
        map_conv(spec, ArrayDims(ram_capacity=8))
    with pytest.raises(MappingError, match="one output channel needs"):
        map_conv(spec, ArrayDims(alu_rows=1, alu_cols=4))


# --- mapped kernels -------------------------------------------------------------

def test_identity_kernel_is_bit_exact():
    spec = identity_layer()
    inp = random_tensor(spec.input_dims, seed=1)
    kernel = map_conv(spec)
    assert kernel.strategy_name == "spatial_1x1"
    assert any(p.opcode == "mac" for p in kernel.config.paes)
    assert {"rq_mul", "rq_shr", "rq_zp", "rq_clamp"} <= {p.name for p in kernel.config.paes}
    record = run(spec, inp)
    assert record.golden_match is True
    assert np.array_equal(record.output.data, inp.data)


def test_random_3x3_is_bit_exact(make_layer):
    spec, inp = make_layer(6, 6, 2, 2, 3, 3, seed=5)
    kernel = map_conv(spec)
    assert kernel.strategy_name == "line_buffer_3x3"
    assert kernel.passes[0].input_kind is InputKind.ADDRESSES
    record = run(spec, inp)
    assert record.golden_match is True
    assert np.array_equal(record.output.data, reference_output(inp, spec).data)


@pytest.mark.parametrize("dims, kernel, stride, padding", [
    ((7, 7, 3), (3, 3, 3), 2, "same"),
    ((7, 6, 5), (2, 5, 5), 1, "valid"),
    ((5, 5, 6), (3, 1, 3), 1, "same"),
    ((4, 4, 8), (20, 1, 1), 1, "same"),
])
def test_other_geometries_are_bit_exact(make_layer, dims, kernel, stride, padding):
    (h, w, c), (k, r, s) = dims, kernel
    spec, inp = make_layer(h, w, c, k, r, s, stride=stride, padding=padding, seed=11)
    record = run(spec, inp)
    assert record.golden_match is True


def test_channel_tiles_and_bands_cover_the_output(make_layer):
    spec, inp = make_layer(8, 8, 4, 20, 3, 3, seed=2)
    kernel = map_conv(spec, ArrayDims(ram_capacity=40))
    assert len(kernel.passes) == 2 * 4
    hit = np.zeros(spec.output_dims, dtype=np.int64)
    for layout in kernel.layouts:
        ys, xs, ks = layout.indices()
        np.add.at(hit, (ys, xs, ks), 1)
    assert (hit == 1).all()
    firsts = [(p.layout.k0, p.layout.tile.y0) for p in kernel.passes]
    assert firsts == sorted(firsts)
    record = execute_layer(LayerJob(spec, inp, kernel))
    assert record.golden_match is True


def test_mapped_passes_validate_and_fit(make_layer):
    spec, _ = make_layer(16, 16, 96, 96, 1, 1)
    kernel = map_conv(spec)
    r = kernel.resources
    assert r.alu_used <= 40 and r.ram_used <= 16
    for mp in kernel.passes:
        assert errors_only(validate(mp.config)) == []
        result = parse(emit(mp.config))
        assert result.ok and result.diagnostics == []
        assert result.config == mp.config


def test_mapping_is_deterministic(make_layer):
    spec, _ = make_layer(6, 6, 4, 3, 3, 3)
    assert map_conv(spec) == map_conv(spec)
    assert emit(map_conv(spec).config) == emit(map_conv(spec).config)


def test_bias_is_folded_with_the_input_zero_point(make_layer):
    spec, _ = make_layer(4, 4, 3, 2, 1, 1, z_in=7)
    w = spec.weights.data.astype(np.int64).reshape(2, -1)
    expected = [wrap32(spec.bias.values[k] - 7 * int(w[k].sum())) for k in range(2)]
    assert folded_bias(spec) == expected
    macs = {p.name: p for p in map_conv(spec).config.paes if p.opcode == "mac"}
    assert [macs[f"mac{k}"].imm[1] for k in range(2)] == expected


def test_requant_overlaps_accumulation(make_layer):
    spec, inp = make_layer(6, 6, 4, 3, 3, 3, seed=9)
    mp = map_conv(spec).passes[0]
    sim = prepare_pass(mp, activation_image(inp, spec), 250_000_000, trace=True)
    sim.run_until_idle(1_000_000)
    fired = [line.split(" fired ")[1].split(",")
             for line in sim.dump_trace(include_firings=True).splitlines() if " fired " in line]
    assert any(any(n.startswith("mac") for n in names) and any(n.startswith("rq_") for n in names)
               for names in fired)


@pytest.mark.parametrize("dims, kernel", [((6, 6, 4), (3, 3, 3)), ((5, 5, 6), (4, 1, 1))])
def test_channels_conserve_packets_and_firings_stay_bounded(make_layer, dims, kernel):
    h, w, c = dims
    k, r, s = kernel
    spec, inp = make_layer(h, w, c, k, r, s, seed=13)
    mp = map_conv(spec).passes[0]
    sim = prepare_pass(mp, activation_image(inp, spec), 250_000_000)
    for _ in range(7):
        sim.step()
        for ch in sim.channels:
            assert ch.produced == ch.taken + int(ch.valid), ch.dst_label
    report = sim.run_until_idle(1_000_000)
    for ch in sim.channels:
        assert ch.produced == ch.taken + int(ch.valid), ch.dst_label
    assert report.total_firings <= report.active_elements * report.total_cycles
    assert all(n <= report.total_cycles for n in report.firings.values())


# --- estimate -------------------------------------------------------------------

@pytest.mark.parametrize("hops, packets", [(1, 1), (4, 10), (8, 3)])
def test_passthrough_estimate(hops, packets):
    kernel = MappedKernel.passthrough(hops, packets)
    assert critical_path(kernel.config) == hops
    assert estimate_cycles(kernel) == kernel.estimate == hops + packets


def test_passthrough_report():
    text = resource_report(MappedKernel.passthrough(1, 5))
    assert "1/40 ALU" in text
    assert "0/16 RAM" in text
    assert "estimate: 6 cycles" in text


def test_report_matches_resource_summary(make_layer):
    spec, _ = make_layer(8, 8, 4, 12, 3, 3)
    kernel = map_conv(spec)
    r = kernel.resources
    text = resource_report(kernel)
    assert f"{r.alu_used}/{r.alu_available} ALU" in text
    assert f"{r.ram_used}/{r.ram_available} RAM" in text
    assert f"critical path: {r.critical_path} elements" in text
    assert r.alu_used == alu_budget(12) == 27
    assert r.ram_used == ram_budget(12, True) == 15


def test_estimate_within_factor_two_of_simulation(make_layer):
    spec, inp = make_layer(16, 16, 4, 4, 1, 1, seed=3)
    kernel = map_conv(spec)
    record = execute_layer(LayerJob(spec, inp, kernel))
    cycles = record.report.total_cycles
    assert cycles / 2 <= kernel.estimate <= cycles * 2


def test_estimate_scales_with_area(make_layer):
    small, _ = make_layer(8, 8, 4, 4, 3, 3)
    large, _ = make_layer(8, 16, 4, 4, 3, 3)
    assert map_conv(large).estimate >= 1.8 * map_conv(small).estimate


# --- sidecar ---------------------------------------------------------------------

def test_sidecar_round_trip_single_pass(tmp_path, make_layer):
    spec, _ = make_layer(6, 6, 2, 2, 3, 3)
    kernel = map_conv(spec)
    written = write_mapped_kernel(kernel, tmp_path / "k.xcfg")
    assert [p.name for p in written] == ["k.xcfg", "k.layout.json"]
    back = read_mapped_kernel(sidecar_path(tmp_path / "k.xcfg"))
    assert back == kernel
    assert back.estimate == kernel.estimate


def test_sidecar_round_trip_multi_pass(tmp_path, make_layer):
    spec, inp = make_layer(4, 4, 4, 20, 1, 1, seed=4)
    kernel = map_conv(spec)
    written = write_mapped_kernel(kernel, tmp_path / "out" / "k.xcfg")
    assert [p.name for p in written] == ["k.p0.xcfg", "k.p1.xcfg", "k.layout.json"]
    back = read_mapped_kernel(tmp_path / "out" / "k.layout.json")
    assert back == kernel
    assert execute_layer(LayerJob(spec, inp, back)).golden_match is True


def test_sidecar_errors(tmp_path):
    (tmp_path / "bad.layout.json").write_text('{"format": 99, "passes": []}')
    with pytest.raises(MappingError, match="unsupported"):
        read_mapped_kernel(tmp_path / "bad.layout.json")
    with pytest.raises(MappingError):
        read_mapped_kernel(tmp_path / "missing.layout.json")
