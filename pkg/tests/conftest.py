"""Shared fixtures: seeded generators and small random layers."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from hpdp.bench.layerspec import make_rng, random_input, random_layer  # noqa: E402
from hpdp.quant.golden import ConvLayerSpec  # noqa: E402
from hpdp.quant.requant import RequantParams  # noqa: E402
from hpdp.quant.tensor import BiasVector, QuantizedTensor, WeightTensor  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_layer():
    """make_layer(h, w, c, k, r, s, stride=1, padding='same', seed=0) -> (spec, input)."""

    def build(h, w, c, k, r, s, stride=1, padding="same", seed=0, name="t", z_in=None, z_out=None):
        gen = make_rng(seed, 0)
        spec = random_layer(name, (h, w, c), (k, r, s, c), gen, stride=stride, padding=padding,
                            z_in=z_in, z_out=z_out)
        return spec, random_input(spec, gen)

    return build


def identity_layer(h=4, w=4, c=1, name="identity") -> ConvLayerSpec:
    """1x1 conv with diagonal weight 2 and M = 0.5: requantized output equals the input."""
    weights = np.zeros((c, 1, 1, c), dtype=np.int8)
    for i in range(c):
        weights[i, 0, 0, i] = 2
    return ConvLayerSpec((h, w, c), WeightTensor(weights), BiasVector((0,) * c),
                         RequantParams.uniform(1 << 30, 0, c), name=name)


def random_tensor(dims, seed=0, zero_point=0) -> QuantizedTensor:
    gen = np.random.default_rng(seed)
    return QuantizedTensor(gen.integers(-128, 128, size=dims), zero_point=zero_point)
