from __future__ import annotations
from typing import Sequence
import numpy as np

from .Codebook import Codebook, NF4_ZERO_INDEX
from .QuantizedTensor import QuantizedTensor, NF4_BLOCK_SIZE, ceil_div
from .Errors import NonFiniteValueError, NibbleRangeError

import logging
logger = logging.getLogger(__name__)

# Elements per nearest-code search step; bounds the (chunk x 16) distance matrix.
NEAREST_SEARCH_CHUNK = 1 << 16


def nearest_code_index(x_norm: float, cb: Codebook) -> int:
    """
    Returns the index of the code value closest to 'x_norm' (argmin |x_norm - values[i]|),
    breaking ties toward the smaller index. The distance is computed at float32 precision,
    the same arithmetic quantize_blockwise uses.
    """
    if not np.isfinite(x_norm):
        raise NonFiniteValueError(value=x_norm)
    with np.errstate(over="ignore"):
        x32 = np.float32(x_norm)
    if not np.isfinite(x32):
        raise NonFiniteValueError(value=x_norm)
    distances = np.abs(x32 - cb.values)
    return int(np.argmin(distances))  # argmin returns the first minimum -> smaller index wins ties


def _nearest_code_indices(x_norm: np.ndarray, cb: Codebook) -> np.ndarray:
    """Vectorized nearest_code_index over a flat float32 array."""
    indices = np.empty(len(x_norm), dtype=np.uint8)
    codes = cb.values[np.newaxis, :]
    for start in range(0, len(x_norm), NEAREST_SEARCH_CHUNK):
        stop = min(start + NEAREST_SEARCH_CHUNK, len(x_norm))
        distances = np.abs(x_norm[start:stop, np.newaxis] - codes)
        indices[start:stop] = np.argmin(distances, axis=1)
    return indices


def pack_nibbles(indices: Sequence[int]) -> np.ndarray:
    """
    Packs 4-bit indices two per byte: byte[j] = (indices[2j] << 4) | indices[2j+1].
    An odd-length input is padded with a 0 low nibble.
    """
    idx = np.asarray(indices)
    if idx.size == 0:
        return np.zeros(0, dtype=np.uint8)
    idx = idx.ravel()
    if not np.issubdtype(idx.dtype, np.integer):
        raise NibbleRangeError(value=idx.dtype, position=None)
    out_of_range = (idx < 0) | (idx > 15)
    if np.any(out_of_range):
        position = int(np.flatnonzero(out_of_range)[0])
        raise NibbleRangeError(value=int(idx[position]), position=position)
    idx = idx.astype(np.uint8)
    if len(idx) % 2 == 1:
        idx = np.append(idx, np.uint8(0))
    return (idx[0::2] << 4) | idx[1::2]


def unpack_nibbles(packed, n: int) -> np.ndarray:
    """Inverse of pack_nibbles: returns the first 'n' indices (high nibble first)."""
    packed = np.asarray(packed, dtype=np.uint8)
    indices = np.empty(2 * len(packed), dtype=np.uint8)
    indices[0::2] = packed >> 4
    indices[1::2] = packed & 0x0F
    return indices[:n]


def quantize_blockwise(
    values: Sequence[float], cb: Codebook, block_size: int = NF4_BLOCK_SIZE
) -> QuantizedTensor:
    """
    Blockwise absmax quantization into packed NF4 indices.

    For each block of 'block_size' consecutive elements the scale is max|value| of the block.
    Elements are normalized by the scale (float32 arithmetic) and mapped to the nearest code with
    nearest_code_index semantics. An all-zero block stores absmax 0 and the exact-zero code for
    every element.

    Params:
      - values: a flat sequence (or array of any shape, read in C order) of finite reals
      - (Codebook) cb: the code table to quantize against
      - (int) block_size: elements per scale

    Raises NonFiniteValueError naming the first offending position (this includes values that
    overflow float32).
    """
    x = np.asarray(values).ravel()
    with np.errstate(over="ignore", invalid="ignore"):
        x32 = x.astype(np.float32)
    finite = np.isfinite(x32)
    if not np.all(finite):
        position = int(np.flatnonzero(~finite)[0])
        raise NonFiniteValueError(position=position, value=x[position])

    n = len(x32)
    num_blocks = ceil_div(n, block_size)
    padded = np.zeros(num_blocks * block_size, dtype=np.float32)
    padded[:n] = x32
    blocks = padded.reshape(num_blocks, block_size)

    absmax = np.max(np.abs(blocks), axis=1) if num_blocks else np.zeros(0, dtype=np.float32)
    zero_blocks = absmax == 0
    divisor = np.where(zero_blocks, np.float32(1.0), absmax).astype(np.float32)
    normalized = blocks / divisor[:, np.newaxis]

    indices = _nearest_code_indices(normalized.ravel(), cb).reshape(num_blocks, block_size)
    indices[zero_blocks] = NF4_ZERO_INDEX
    if np.any(zero_blocks):
        logger.debug(f"{int(np.count_nonzero(zero_blocks))} of {num_blocks} blocks have absmax 0")

    packed = pack_nibbles(indices.ravel()[:n])
    logger.debug(f"Quantized {n} elements into {num_blocks} blocks ({len(packed)} packed bytes)")
    return QuantizedTensor(
        packed=packed,
        absmax=absmax.astype(np.float32),
        n=n,
        block_size=block_size,
        codebook_id=cb.id,
    )
