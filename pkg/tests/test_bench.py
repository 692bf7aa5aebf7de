import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hpdp.bench import suite as suite_mod
from hpdp.bench.layerspec import (PRNG_NAME, layer_from_dict, layer_to_dict, load_layer_spec, make_rng,
                                  random_layer, save_layer_spec)
from hpdp.bench.suite import (CSV_COLUMNS, BenchOptions, BenchReport, BenchRow, calibrate_cpi, case_from_entry,
                              case_from_spec, default_cpi, load_suite, run_suite, scalar_baseline, sized,
                              suite_cases)
from hpdp.core.report import SimReport
from hpdp.errors import LayerSpecError, ParameterError, SuiteFailure
from hpdp.integration.jobs import ExecutionRecord
from hpdp.outputs.chart import emit_chart
from hpdp.outputs.console import emit_table
from hpdp.outputs.recorder import emit_csv, report_frame
from hpdp.settings import REPO_ROOT

from conftest import identity_layer, random_tensor

TABLE1 = REPO_ROOT / "config" / "table1.json"
HEADER = ",".join(CSV_COLUMNS)


@pytest.fixture
def small_suite(tmp_path):
    doc = {"suite": "small", "cases": [
        {"name": "small3", "kernel": {"k": 2, "r": 3, "s": 3, "c": 2}, "image": {"h": 6, "w": 6, "c": 2},
         "hpdp_ms": 1.0, "gr740_ms": 100.0},
        {"name": "small1", "kernel": {"k": 4, "r": 1, "s": 1, "c": 4}, "image": {"h": 5, "w": 5, "c": 4}},
    ]}
    path = tmp_path / "small.json"
    path.write_text(json.dumps(doc))
    return path


def row(name="conv_24x3x3x24", golden=True, hpdp=121.27, gr740=23894.08):
    return BenchRow(name, 3, 3, 24, 24, 16, 16, 24, cycles=1000, sim_ms=0.004, macs=1327104,
                    macs_per_cycle=1327.104, baseline_ms=132.0, paper_hpdp_ms=hpdp, paper_gr740_ms=gr740,
                    golden_match=golden, strategy="line_buffer_3x3", estimate_cycles=1100)


# --- suite data -------------------------------------------------------------------

def test_builtin_suite_rows():
    entries = load_suite(TABLE1)
    assert [e.kernel for e in entries] == [(24, 3, 3, 24), (48, 3, 3, 48), (96, 3, 3, 96), (96, 1, 1, 96)]
    assert [e.hpdp_ms for e in entries] == [121.27, 110.94, 104.84, 47.44]
    assert [e.gr740_ms for e in entries] == [23894.08, 23731.64, 11765.59, 31320.04]
    assert [e.image for e in entries] == [(194, 194, 24), (98, 98, 48), (50, 50, 96), (96, 96, 96)]
    assert entries[0].full_macs == 194 * 194 * 24 * 216


def test_unreadable_suite(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"cases": [{"name": "x"}]}')
    with pytest.raises(LayerSpecError):
        load_suite(bad)
    with pytest.raises(LayerSpecError):
        load_suite(tmp_path / "missing.json")


# --- baseline ----------------------------------------------------------------------

def test_one_mac_at_cpi_one_takes_four_nanoseconds():
    spec = identity_layer(h=1, w=1, c=1)
    assert spec.macs == 1
    assert scalar_baseline(spec, cpi=1.0) == pytest.approx(4e-6)


def test_per_row_cpi():
    assert calibrate_cpi(23894.08, 194 * 194 * 24 * 216) == pytest.approx(30.617, abs=1e-3)
    with pytest.raises(ParameterError):
        calibrate_cpi(1.0, 0)


def test_default_cpi_is_the_mean_of_the_3x3_rows():
    entries = [e for e in load_suite(TABLE1) if e.kernel[1] == 3]
    per_row = [calibrate_cpi(e.gr740_ms, e.full_macs) for e in entries]
    assert default_cpi(TABLE1) == pytest.approx(sum(per_row) / 3)
    assert default_cpi(TABLE1) == pytest.approx(24.86, abs=0.01)


def test_calibrated_baseline_reproduces_row_one():
    spec = random_layer("row1", (194, 194, 24), (24, 3, 3, 24), make_rng(0))
    assert spec.macs == 194 * 194 * 24 * 216
    assert scalar_baseline(spec) == pytest.approx(23894.08, rel=0.25)
    exact = calibrate_cpi(23894.08, spec.macs)
    assert scalar_baseline(spec, cpi=exact) == pytest.approx(23894.08)



def test_per_row_cpi_reproduces_every_reference_row():
    for i, entry in enumerate(load_suite(TABLE1)):
        case = case_from_entry(entry, i, BenchOptions(full_size=True))
        assert case.spec.macs == entry.full_macs
        cpi = calibrate_cpi(entry.gr740_ms, entry.full_macs)
        assert scalar_baseline(case.spec, cpi=cpi) == pytest.approx(entry.gr740_ms), entry.name


# --- cases -------------------------------------------------------------------------

def test_crop_recomputes_mac_count():
    entry = load_suite(TABLE1)[0]
    case = case_from_entry(entry, 0, BenchOptions())
    assert case.spec.input_dims == (16, 16, 24)
    assert case.spec.macs == 16 * 16 * 24 * 216
    assert case.scale == pytest.approx(194 / 16)
    assert case.hpdp_ms == 121.27


def test_scale_full_size_and_output_sizes():
    entry = load_suite(TABLE1)[0]
    assert case_from_entry(entry, 0, BenchOptions(scale=12)).spec.input_dims == (17, 17, 24)
    assert case_from_entry(entry, 0, BenchOptions(full_size=True)).spec.input_dims == (194, 194, 24)
    out = case_from_entry(entry, 0, BenchOptions(size_is_output=True)).spec
    assert out.input_dims == (18, 18, 24) and out.padding == "valid"
    assert out.output_dims == (16, 16, 24)
    assert out.macs == 16 * 16 * 24 * 216


def test_sizes_never_drop_below_the_kernel():
    with pytest.raises(ParameterError):
        sized(194, 3, BenchOptions(crop=2))
    with pytest.raises(ParameterError):
        sized(194, 3, BenchOptions(scale=0))
    assert sized(5, 3, BenchOptions()) == 5


def test_cases_are_seeded_by_seed_and_index():
    entry = load_suite(TABLE1)[3]
    a = case_from_entry(entry, 3, BenchOptions(seed=1))
    b = case_from_entry(entry, 3, BenchOptions(seed=1))
    c = case_from_entry(entry, 2, BenchOptions(seed=1))
    assert np.array_equal(a.input.data, b.input.data)
    assert np.array_equal(a.spec.weights.data, b.spec.weights.data)
    assert not np.array_equal(a.input.data, c.input.data)


# --- running -------------------------------------------------------------------------

def test_small_suite_passes(small_suite):
    options = BenchOptions(seed=7)
    report = run_suite(suite_cases(options, small_suite), options)
    assert report.passed
    assert [r.name for r in report.rows] == ["small3", "small1"]
    first, second = report.rows
    assert first.strategy == "line_buffer_3x3" and second.strategy == "spatial_1x1"
    assert first.macs == 6 * 6 * 2 * 18
    assert first.macs_per_cycle == round(first.macs / first.cycles, 3)
    assert first.sim_ms == round(first.cycles / 250_000, 6)
    assert first.paper_macs_per_cycle is not None and second.paper_macs_per_cycle is None
    assert report.metadata["prng"] == PRNG_NAME == "numpy.PCG64"
    assert report.metadata["seed"] == 7 and report.metadata["clock_hz"] == 250_000_000


def test_user_spec_cases(make_layer):
    spec, _ = make_layer(4, 4, 2, 2, 3, 3, name="user")
    options = BenchOptions(seed=3)
    case = case_from_spec(spec, None, 0, options)
    report = run_suite([case], options)
    assert report.rows[0].name == "user"
    assert report.rows[0].paper_hpdp_ms is None


def test_same_seed_gives_identical_csv(small_suite, tmp_path):
    options = BenchOptions(seed=11)
    a = emit_csv(run_suite(suite_cases(options, small_suite), options), tmp_path / "a.csv")
    b = emit_csv(run_suite(suite_cases(options, small_suite), options), tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == HEADER


def test_mismatch_fails_the_suite(small_suite, monkeypatch):
    def wrong(job, **kwargs):
        out = random_tensor(job.spec.output_dims)
        return ExecutionRecord(job.spec.name, out, SimReport(total_cycles=10), False, 1, 1)

    monkeypatch.setattr(suite_mod, "execute_layer", wrong)
    options = BenchOptions()
    cases = suite_cases(options, small_suite)
    with pytest.raises(SuiteFailure) as err:
        run_suite(cases, options)
    assert err.value.cases == ["small3", "small1"]
    report = run_suite(cases, options, strict=False)
    assert not report.passed and report.failed_cases == ["small3", "small1"]


# --- outputs -------------------------------------------------------------------------

def test_csv_rows(tmp_path):
    report = BenchReport((row(), BenchRow("user", 1, 1, 4, 2, 8, 8, 4, 125000, 0.5, 512, 0.004, 1.5,
                                          None, None, False)))
    text = emit_csv(report, tmp_path / "out" / "r.csv").read_text()
    assert text.splitlines() == [
        HEADER,
        "conv_24x3x3x24,3,3,24,24,16,16,24,1000,0.004,1327104,1327.104,132.0,121.27,23894.08,True",
        "user,1,1,4,2,8,8,4,125000,0.5,512,0.004,1.5,,,False",
    ]
    assert list(report_frame(report).columns) == list(CSV_COLUMNS)


def test_empty_report_writes_header_only(tmp_path):
    path = emit_csv(BenchReport(), tmp_path / "empty.csv")
    assert path.read_text() == HEADER + "\n"


def test_table_text():
    report = BenchReport((row(), row("other", golden=False, hpdp=None, gr740=None)), {"seed": 42})
    text = emit_table(report)
    assert "Conv benchmark (seed 42)" in text
    assert "conv_24x3x3x24" in text and "121.27" in text
    assert "PASS" in text and "FAIL" in text
    assert "\x1b[" not in text


def test_svg_chart(tmp_path):
    report = BenchReport((row(), row("other", hpdp=None, gr740=None)), {"seed": 1})
    a = emit_chart(report, tmp_path / "a.svg")
    b = emit_chart(report, tmp_path / "b.svg")
    assert a.read_bytes() == b.read_bytes()
    root = ET.parse(a).getroot()
    ids = {el.get("id") for el in root.iter() if (el.get("id") or "").startswith("case-")}
    assert ids == {"case-0-sim", "case-0-baseline", "case-0-paper_hpdp", "case-0-paper_gr740",
                   "case-1-sim", "case-1-baseline"}


# --- layer specs -----------------------------------------------------------------------

@pytest.mark.parametrize("encoding", ["base64", "inline"])
def test_layer_spec_round_trip(tmp_path, make_layer, encoding):
    spec, inp = make_layer(5, 4, 3, 2, 3, 1, stride=2, padding="valid", seed=6)
    path = save_layer_spec(tmp_path / f"l.{encoding}.json", spec, inp, encoding)
    back, back_inp = load_layer_spec(path)
    assert np.array_equal(back.weights.data, spec.weights.data)
    assert back.bias == spec.bias
    assert back.requant == spec.requant
    assert (back.input_dims, back.stride, back.padding, back.z_in) == (spec.input_dims, 2, "valid", spec.z_in)
    assert np.array_equal(back_inp.data, inp.data)


def test_seeded_layer_spec_is_reproducible():
    doc = {"input": {"h": 4, "w": 4, "c": 2}, "kernel": {"k": 3, "r": 3, "s": 3, "c": 2}, "seed": 9}
    a, ai = layer_from_dict(doc)
    b, bi = layer_from_dict(doc)
    assert np.array_equal(a.weights.data, b.weights.data)
    assert np.array_equal(ai.data, bi.data)
    assert layer_to_dict(a, ai) == layer_to_dict(b, bi)


@pytest.mark.parametrize("doc, message", [
    ({"input": {"h": 4, "w": 4, "c": 2}, "kernel": {"k": 1, "r": 1, "s": 1, "c": 3}, "seed": 1}, "does not match"),
    ({"input": {"h": 4, "w": 4, "c": 1}, "kernel": {"k": 1, "r": 1, "s": 1, "c": 1}}, "'weights' or a 'seed'"),
    ({"input": {"h": 4, "w": 4}, "kernel": {"k": 1, "r": 1, "s": 1, "c": 1}, "seed": 1}, "'input'"),
    ({"input": {"h": 1, "w": 1, "c": 1}, "kernel": {"k": 1, "r": 1, "s": 1, "c": 1}, "weights": [1, 2]},
     "expected 1 values"),
    ({"input": {"h": 1, "w": 1, "c": 1}, "kernel": {"k": 1, "r": 1, "s": 1, "c": 1}, "weights": [1],
      "multipliers": [{"m": 1.5}]}, "multiplier"),
])
def test_bad_layer_specs(doc, message):
    with pytest.raises(LayerSpecError, match=message):
        layer_from_dict(doc)


# --- acceptance ------------------------------------------------------------------------

@pytest.mark.slow
def test_reference_suite_at_desk_scale():
    options = BenchOptions(seed=42)
    report = run_suite(suite_cases(options, TABLE1), options)
    assert report.passed
    assert len(report.rows) == 4
    for r in report.rows:
        assert r.cycles / 2 <= r.estimate_cycles <= r.cycles * 2
        assert r.img_h == r.img_w == 16
    for r in report.rows[:3]:
        assert r.macs_per_cycle >= 4
    assert report.rows[0].paper_macs_per_cycle == pytest.approx(6.4, abs=0.05)
