import numpy as np
import pytest

from hpdp.dma.descriptor import (Dma4dDescriptor, address_array, addresses, gather, scatter, stream,
                                 validate)
from hpdp.dma.patterns import (ConvTile, activation_words, band_preload_descriptor, band_rows,
                               coalesce_loops, conv_input_descriptor)
from hpdp.errors import DimensionError, DmaBoundsError, ParameterError
from hpdp.utils.words import channel_words


def desc(base, *levels, region=None):
    return Dma4dDescriptor(base, tuple(levels), region)


@pytest.mark.parametrize("d, expected", [
    (desc(7), [7]),
    (desc(0, (2, 10), (3, 1)), [0, 1, 2, 10, 11, 12]),
    (desc(3, (4, -1)), [3, 2, 1, 0]),
    (desc(5, (3, 0)), [5, 5, 5]),
    (desc(0, (2, 100), (2, 10), (2, 1)), [0, 1, 10, 11, 100, 101, 110, 111]),
])
def test_address_sequences(d, expected):
    assert list(addresses(d)) == expected
    assert address_array(d).tolist() == expected
    assert len(d) == len(expected)


def test_short_level_lists_are_padded_on_the_outside():
    d = desc(0, (2, 10), (3, 1))
    assert d.levels == ((1, 0), (1, 0), (2, 10), (3, 1))
    assert d.counts == (1, 1, 2, 3) and d.strides == (0, 0, 10, 1)


@pytest.mark.parametrize("kwargs", [
    {"base": -1},
    {"base": 0, "levels": ((0, 1),)},
    {"base": 0, "levels": ((1, 0),) * 5},
    {"base": 0, "region": (10, 5)},
])
def test_descriptor_rejects_bad_parameters(kwargs):
    with pytest.raises(ParameterError):
        Dma4dDescriptor(**kwargs)


def test_bounds_agree_with_enumeration():
    gen = np.random.default_rng(3)
    for _ in range(1000):
        levels = tuple((int(gen.integers(1, 5)), int(gen.integers(-20, 21))) for _ in range(4))
        d = Dma4dDescriptor(int(gen.integers(0, 200)), levels)
        addr = address_array(d)
        assert d.bounds() == (int(addr.min()), int(addr.max()))
        assert validate(d) == d.bounds()


def test_validate_reports_the_violating_corner():
    gen = np.random.default_rng(4)
    for _ in range(300):
        levels = tuple((int(gen.integers(1, 5)), int(gen.integers(-20, 21))) for _ in range(4))
        d = Dma4dDescriptor(int(gen.integers(0, 200)), levels)
        lo, hi = d.bounds()
        region = (lo + int(gen.integers(0, 3)), hi + 1 - int(gen.integers(0, 3)))
        if region[1] < region[0]:
            continue
        if region == (lo, hi + 1):
            assert validate(d, region) == (lo, hi)
            continue
        with pytest.raises(DmaBoundsError) as err:
            validate(d, region)
        e = err.value
        assert e.address == d.base + sum(i * s for i, s in zip(e.indices, d.strides))
        assert not region[0] <= e.address < region[1]


def test_region_violation_carries_address_and_indices():
    d = desc(0, (2, 10), (4, 1), region=(0, 13))
    with pytest.raises(DmaBoundsError) as err:
        list(addresses(d))
    assert err.value.address == 13
    assert err.value.indices == (0, 0, 1, 3)
    assert err.value.region == (0, 13)
    with pytest.raises(DmaBoundsError) as err:
        address_array(d)
    assert err.value.address == 13 and err.value.indices == (0, 0, 1, 3)


def test_lazy_stream_yields_until_the_violation():
    seen = []
    with pytest.raises(DmaBoundsError):
        for a in addresses(desc(2, (5, 1), region=(0, 5))):
            seen.append(a)
    assert seen == [2, 3, 4]


def test_text_and_dict_forms():
    d = desc(8, (1, 0), (2, 100), (3, 10), (4, 1), region=(0, 400))
    assert d.to_text() == "base=8 l3=1:0 l2=2:100 l1=3:10 l0=4:1 region=0:400"
    assert Dma4dDescriptor.from_dict(d.to_dict()) == d
    assert Dma4dDescriptor.linear(4, 3) == desc(4, (3, 1))


def test_gather_and_scatter():
    memory = np.arange(20, dtype=np.int64) * 10
    ds = [desc(2, (2, 5), (2, 1))]
    assert gather(memory, ds) == [20, 30, 70, 80]
    target = np.zeros(20, dtype=np.int64)
    scatter(target, ds, [1, 2, 3, 4])
    assert target[[2, 3, 7, 8]].tolist() == [1, 2, 3, 4]
    assert int(target.sum()) == 10
    with pytest.raises(ParameterError):
        scatter(target, ds, [1, 2])
    assert stream([]).tolist() == []


# --- loop nests --------------------------------------------------------------

def test_coalesce_merges_contiguous_levels():
    (d,) = coalesce_loops(0, [(2, 3), (3, 1)])
    assert d.levels == ((1, 0), (1, 0), (1, 0), (6, 1))
    (d,) = coalesce_loops(5, [(1, 50), (4, 2)])
    assert d.levels == ((1, 0), (1, 0), (1, 0), (4, 2))
    assert coalesce_loops(0, [(0, 4), (3, 1)]) == []


def test_coalesce_unrolls_deep_nests():
    loops = [(2, 100), (2, 30), (2, 10), (2, 3), (2, 1)]
    ds = coalesce_loops(0, loops)
    assert [d.base for d in ds] == [0, 100]
    oracle = [a * 100 + b * 30 + c * 10 + d * 3 + e
              for a in range(2) for b in range(2) for c in range(2) for d in range(2) for e in range(2)]
    assert stream(ds).tolist() == oracle


def conv_oracle(spec, tile):
    _, wp = spec.padded_dims
    cw = channel_words(spec.input_dims[2])
    _, r, s, _ = spec.kernel_dims
    st = spec.stride
    return [((y * st + i) * wp + x * st + j) * cw + c
            for y in range(tile.y0, tile.y1) for x in range(tile.x0, tile.x1)
            for i in range(r) for j in range(s) for c in range(cw)]


def test_1x1_input_is_one_linear_descriptor(make_layer):
    spec, _ = make_layer(4, 4, 4, 2, 1, 1)
    (d,) = conv_input_descriptor(spec, ConvTile.full(spec))
    assert d == Dma4dDescriptor.linear(0, 16, (0, 16))


@pytest.mark.parametrize("dims, kernel, stride, padding", [
    ((4, 4, 1), (1, 3, 3), 1, "valid"),
    ((6, 6, 6), (2, 3, 3), 1, "same"),
    ((5, 5, 1), (1, 3, 3), 2, "same"),
    ((9, 7, 5), (1, 5, 5), 2, "valid"),
    ((8, 8, 3), (1, 1, 1), 2, "same"),
])
def test_conv_input_matches_loop_oracle(make_layer, dims, kernel, stride, padding):
    (h, w, c), (k, r, s) = dims, kernel
    spec, _ = make_layer(h, w, c, k, r, s, stride=stride, padding=padding)
    tile = ConvTile.full(spec)
    ds = conv_input_descriptor(spec, tile)
    addr = stream(ds)
    assert addr.tolist() == conv_oracle(spec, tile)
    assert addr.max() < activation_words(spec)


def test_tiles_and_bands(make_layer):
    spec, _ = make_layer(8, 8, 4, 1, 3, 3)
    tile = ConvTile(2, 5, 0, 8)
    assert stream(conv_input_descriptor(spec, tile)).tolist() == conv_oracle(spec, tile)
    assert band_rows(spec, tile) == (2, 7)
    d = band_preload_descriptor(spec, tile)
    assert address_array(d).tolist() == list(range(2 * 10, 7 * 10))
    with pytest.raises(DimensionError):
        conv_input_descriptor(spec, ConvTile(0, 9, 0, 8))
