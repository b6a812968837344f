from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
import numpy as np

from .Codebook import Codebook, canonical_nf4
from .ExecConfig import ExecConfig, OUTPUT_PRECISIONS
from .QuantizedTensor import QuantizedTensor, ceil_div
from .Errors import CodebookMismatchError, NibbleRangeError, NonFiniteValueError

import logging
logger = logging.getLogger(__name__)


class DecoderKind(Enum):
    """
    How a 4-bit index is turned into its code value.
      - TREE: the baseline 4-level conditional tree over bits 3, 2, 1, 0 with literal leaf constants
      - DIRECT_LUT: direct indexing of the 16-entry code table
    """

    TREE = "tree"
    DIRECT_LUT = "lut"

    @classmethod
    def from_str(cls, name: str) -> DecoderKind:
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"Unknown decoder '{name}', expected one of {[k.value for k in cls]}")


def _check_nibble(q):
    if isinstance(q, bool) or not isinstance(q, (int, np.integer)) or not 0 <= q <= 15:
        raise NibbleRangeError(value=q)


def decode_nibble_lut(q: int, cb: Codebook) -> np.float32:
    """Returns cb.values[q]."""
    _check_nibble(q)
    return cb.values[q]


def decode_nibble_tree(q: int) -> np.float32:
    """
    Baseline decoder: walks a 4-level binary tree on bits 3, 2, 1, 0 of 'q' and returns the
    canonical NF4 code value stored at the leaf.
    """
    _check_nibble(q)
    if q & 0b1000:
        if q & 0b0100:
            if q & 0b0010:
                if q & 0b0001:
                    return np.float32(1.0)
                else:
                    return np.float32(0.7229568362236023)
            else:
                if q & 0b0001:
                    return np.float32(0.5626170039176941)
                else:
                    return np.float32(0.44070982933044434)
        else:
            if q & 0b0010:
                if q & 0b0001:
                    return np.float32(0.33791524171829224)
                else:
                    return np.float32(0.24611230194568634)
            else:
                if q & 0b0001:
                    return np.float32(0.16093020141124725)
                else:
                    return np.float32(0.07958029955625534)
    else:
        if q & 0b0100:
            if q & 0b0010:
                if q & 0b0001:
                    return np.float32(0.0)
                else:
                    return np.float32(-0.09105003625154495)
            else:
                if q & 0b0001:
                    return np.float32(-0.18477343022823334)
                else:
                    return np.float32(-0.28444138169288635)
        else:
            if q & 0b0010:
                if q & 0b0001:
                    return np.float32(-0.39491748809814453)
                else:
                    return np.float32(-0.5250730514526367)
            else:
                if q & 0b0001:
                    return np.float32(-0.6961928009986877)
                else:
                    return np.float32(-1.0)


def _decode_tree_array(nibbles: np.ndarray) -> np.ndarray:
    # Same bit cascade as decode_nibble_tree, one select per tree node.
    b3 = (nibbles & 0b1000) != 0
    b2 = (nibbles & 0b0100) != 0
    b1 = (nibbles & 0b0010) != 0
    b0 = (nibbles & 0b0001) != 0
    f = np.float32
    return np.where(
        b3,
        np.where(
            b2,
            np.where(
                b1,
                np.where(b0, f(1.0), f(0.7229568362236023)),
                np.where(b0, f(0.5626170039176941), f(0.44070982933044434)),
            ),
            np.where(
                b1,
                np.where(b0, f(0.33791524171829224), f(0.24611230194568634)),
                np.where(b0, f(0.16093020141124725), f(0.07958029955625534)),
            ),
        ),
        np.where(
            b2,
            np.where(
                b1,
                np.where(b0, f(0.0), f(-0.09105003625154495)),
                np.where(b0, f(-0.18477343022823334), f(-0.28444138169288635)),
            ),
            np.where(
                b1,
                np.where(b0, f(-0.39491748809814453), f(-0.5250730514526367)),
                np.where(b0, f(-0.6961928009986877), f(-1.0)),
            ),
        ),
    ).astype(np.float32, copy=False)


def _check_tree_codebook(cb: Codebook):
    # the tree has the canonical table baked into its leaves
    canonical = canonical_nf4()
    if cb.id != canonical.id or not np.array_equal(cb.values, canonical.values):
        raise CodebookMismatchError(
            f"codebook mismatch: the tree decoder only encodes '{canonical.id}', got '{cb.id}'"
        )


def _check_scale(scale):
    if not np.isfinite(scale):
        raise NonFiniteValueError(value=scale)
    if scale < 0:
        raise ValueError(f"scale must be >= 0, got {scale}")


def dequantize_byte(
    b: int,
    scale: float,
    cb: Codebook,
    decoder: DecoderKind = DecoderKind.DIRECT_LUT,
    output_precision: str = "float32",
) -> tuple:
    """
    Dequantizes one packed byte into its two elements:
    (values[b >> 4] * scale, values[b & 0x0F] * scale), multiplied at float32 precision and
    rounded to 'output_precision'.
    """
    if isinstance(b, bool) or not isinstance(b, (int, np.integer)) or not 0 <= b <= 255:
        raise ValueError(f"byte out of range: {b}")
    _check_scale(scale)
    dtype = OUTPUT_PRECISIONS[output_precision]
    scale32 = np.float32(scale)
    if decoder is DecoderKind.TREE:
        _check_tree_codebook(cb)
        high, low = decode_nibble_tree(int(b) >> 4), decode_nibble_tree(int(b) & 0x0F)
    else:
        high, low = decode_nibble_lut(int(b) >> 4, cb), decode_nibble_lut(int(b) & 0x0F, cb)
    return dtype(high * scale32), dtype(low * scale32)


class TiledDequantizer:
    def __init__(
        self,
        qt: QuantizedTensor,
        cb: Codebook,
        decoder: DecoderKind = DecoderKind.DIRECT_LUT,
        cfg: ExecConfig = None,
    ):
        """
        Dequantizes a QuantizedTensor tile by tile.

        The element range is cut into tiles of cfg.tile_elems elements (the last tile may be partial),
        tiles are grouped into tasks of cfg.tiles_per_task and the tasks are spread over cfg.workers
        threads. Each tile writes a disjoint slice of the output, so the result does not depend on the
        worker count or the task order.

        With the DIRECT_LUT decoder every tile stages a private copy of the 16-entry code table once and
        serves all of its lookups from that copy.
        """
        qt.validate()
        if qt.codebook_id != cb.id:
            raise CodebookMismatchError(
                f"codebook mismatch: tensor was quantized with '{qt.codebook_id}', got codebook '{cb.id}'"
            )
        if decoder is DecoderKind.TREE:
            _check_tree_codebook(cb)
        self.qt = qt
        self.cb = cb
        self.decoder = decoder
        self.cfg = cfg if cfg is not None else ExecConfig()
        self.num_tiles = ceil_div(qt.n, self.cfg.tile_elems)
        self.lut_stagings = 0

    def _stage_lut(self) -> np.ndarray:
        self.lut_stagings += 1
        return self.cb.values.copy()

    def _dequantize_tile(self, start: int, stop: int, out: np.ndarray):
        packed_tile = self.qt.packed[start // 2 : (stop + 1) // 2]
        nibbles = np.empty(2 * len(packed_tile), dtype=np.uint8)
        nibbles[0::2] = packed_tile >> 4
        nibbles[1::2] = packed_tile & 0x0F
        nibbles = nibbles[: stop - start]

        if self.decoder is DecoderKind.DIRECT_LUT:
            lut = self._stage_lut()
            codes = lut[nibbles]
        else:
            codes = _decode_tree_array(nibbles)

        block_size = self.qt.block_size
        first_block = start // block_size
        last_block = (stop - 1) // block_size
        offset = first_block * block_size
        scales = np.repeat(self.qt.absmax[first_block : last_block + 1], block_size)[start - offset : stop - offset]
        out[start:stop] = codes * scales

    def _run_task(self, first_tile: int, last_tile: int, out: np.ndarray):
        tile_elems = self.cfg.tile_elems
        n = self.qt.n
        for tile in range(first_tile, last_tile):
            start = tile * tile_elems
            self._dequantize_tile(start, min(start + tile_elems, n), out)

    def run(self) -> np.ndarray:
        out = np.empty(self.qt.n, dtype=self.cfg.dtype)
        if self.qt.n == 0:
            return out
        step = self.cfg.tiles_per_task
        tasks = [(t, min(t + step, self.num_tiles)) for t in range(0, self.num_tiles, step)]
        logger.debug(
            f"Dequantizing {self.qt.n} elements: {self.num_tiles} tiles of {self.cfg.tile_elems}, "
            f"{len(tasks)} tasks, {self.cfg.workers} workers, decoder={self.decoder.value}"
        )
        if self.cfg.workers == 1 or len(tasks) == 1:
            for first_tile, last_tile in tasks:
                self._run_task(first_tile, last_tile, out)
        else:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as executor:
                futures = [executor.submit(self._run_task, first, last, out) for first, last in tasks]
                for future in futures:
                    future.result()  # re-raises worker exceptions
        return out


def dequantize_blockwise(
    qt: QuantizedTensor,
    decoder: DecoderKind = DecoderKind.DIRECT_LUT,
    cfg: ExecConfig = None,
    cb: Codebook = None,
) -> np.ndarray:
    """
    Dequantizes 'qt' into a flat array of qt.n values. Element k is
    decode(nibble_k) * qt.absmax[k // block_size], where nibble_k is the high nibble of
    packed[k // 2] for even k and the low nibble for odd k.

    The output is bit-identical for both decoders and any worker count.

    Raises CodebookMismatchError if qt.codebook_id doesn't match cb.id and InvariantViolationError
    if qt is structurally invalid.
    """
    cb = cb if cb is not None else canonical_nf4()
    return TiledDequantizer(qt, cb, decoder=decoder, cfg=cfg).run()


def dequantize_reference(
    qt: QuantizedTensor, cb: Codebook = None, output_precision: str = "float32"
) -> np.ndarray:
    """
    Scalar, tile-free dequantization loop. Slow; used as the oracle for the tiled executor.
    """
    cb = cb if cb is not None else canonical_nf4()
    qt.validate()
    if qt.codebook_id != cb.id:
        raise CodebookMismatchError(
            f"codebook mismatch: tensor was quantized with '{qt.codebook_id}', got codebook '{cb.id}'"
        )
    dtype = OUTPUT_PRECISIONS[output_precision]
    out = np.empty(qt.n, dtype=dtype)
    for k in range(qt.n):
        byte = int(qt.packed[k // 2])
        nibble = byte >> 4 if k % 2 == 0 else byte & 0x0F
        out[k] = dtype(cb.values[nibble] * qt.absmax[k // qt.block_size])
    return out
