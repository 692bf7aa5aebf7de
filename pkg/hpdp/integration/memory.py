"""
HPDP Dataflow Lab - Host Memory Images
======================================
Version: 1.0.0
Status: PRODUCTION
Role: Builds the word images the host moves into the array: the padded
activation image of a layer and the staging image a chained layer
writes into. Weight and parameter words travel inside the pass configs.
"""

import numpy as np

from hpdp.dma.patterns import staging_dims
from hpdp.errors import DimensionError
from hpdp.quant.golden import ConvLayerSpec, pad_input
from hpdp.quant.tensor import QuantizedTensor
from hpdp.utils.words import pack_lanes, pad_channels


def staged_input(inp: QuantizedTensor, spec: ConvLayerSpec) -> np.ndarray:
    """(Hp, Wp, Cp) int8 image: spatial padding with Z_in, lane padding with 0."""
    if inp.dims != spec.input_dims:
        raise DimensionError(f"input {inp.dims} does not match {spec.name} input {spec.input_dims}")
    return pad_channels(pad_input(inp.data, spec).astype(np.int8))


def empty_staging(spec: ConvLayerSpec) -> np.ndarray:
    """Staging image holding only padding, ready to receive a chained layer's packets."""
    hp, wp, cp = staging_dims(spec)
    c = spec.input_dims[2]
    image = np.zeros((hp, wp, cp), dtype=np.int8)
    image[:, :, :c] = spec.z_in
    return image


def pack_staging(image: np.ndarray) -> np.ndarray:
    """Flat activation words: word(row, col, cw) = (row * Wp + col) * Cw + cw."""
    return pack_lanes(image).reshape(-1)


def activation_image(inp: QuantizedTensor, spec: ConvLayerSpec) -> np.ndarray:
    return pack_staging(staged_input(inp, spec))

