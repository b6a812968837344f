from __future__ import annotations
import numpy as np

from .Codebook import NF4_CODEBOOK_ID
from .Errors import InvariantViolationError

import logging
logger = logging.getLogger(__name__)

NF4_BLOCK_SIZE = 64


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


class QuantizedTensor:
    def __init__(
        self,
        packed,
        absmax,
        n: int,
        block_size: int = NF4_BLOCK_SIZE,
        codebook_id: str = NF4_CODEBOOK_ID,
    ):
        """
        A blockwise-quantized NF4 tensor.

        Params:
          - packed: 4-bit code indices, two per byte, the earlier element in the high nibble.
                    Length ceil(n/2); if n is odd the low nibble of the last byte is padding (0).
          - absmax: one float32 scale per block of 'block_size' elements, length ceil(n/block_size)
          - (int) n: the number of elements
          - (int) block_size: elements per scale, 64 for NF4
          - (str) codebook_id: id of the codebook the indices refer to
        """
        self.packed = np.ascontiguousarray(packed, dtype=np.uint8)
        self.absmax = np.ascontiguousarray(absmax, dtype=np.float32)
        self.n = int(n)
        self.block_size = int(block_size)
        self.codebook_id = codebook_id

    def __repr__(self) -> str:
        return (
            f"QuantizedTensor(n={self.n}, block_size={self.block_size}, "
            f"blocks={len(self.absmax)}, codebook_id={self.codebook_id!r})"
        )

    @property
    def num_blocks(self) -> int:
        return ceil_div(self.n, self.block_size)

    @property
    def has_pad_nibble(self) -> bool:
        return self.n % 2 == 1

    @property
    def payload_nbytes(self) -> int:
        """Bytes taken by the packed indices and the absmax scales."""
        return int(self.packed.nbytes + self.absmax.nbytes)

    def validate(self):
        """
        Raises InvariantViolationError describing the first structural invariant that doesn't hold.
        """
        if self.n < 0:
            raise InvariantViolationError(f"invariant violation: negative element count {self.n}")
        if self.block_size <= 0:
            raise InvariantViolationError(f"invariant violation: block size {self.block_size} is not positive")
        if self.packed.ndim != 1 or self.absmax.ndim != 1:
            raise InvariantViolationError("invariant violation: packed and absmax must be one-dimensional")
        if len(self.packed) != ceil_div(self.n, 2):
            raise InvariantViolationError(
                f"invariant violation: {len(self.packed)} packed bytes, expected {ceil_div(self.n, 2)} for n={self.n}"
            )
        if len(self.absmax) != self.num_blocks:
            raise InvariantViolationError(
                f"invariant violation: {len(self.absmax)} absmax entries, expected {self.num_blocks} for n={self.n}"
            )
        if not np.all(np.isfinite(self.absmax)):
            position = int(np.flatnonzero(~np.isfinite(self.absmax))[0])
            raise InvariantViolationError(f"invariant violation: absmax[{position}] is not finite")
        if np.any(self.absmax < 0):
            position = int(np.flatnonzero(self.absmax < 0)[0])
            raise InvariantViolationError(f"invariant violation: absmax[{position}] is negative")
        if self.has_pad_nibble and (self.packed[-1] & 0x0F) != 0:
            raise InvariantViolationError("invariant violation: pad nibble of the final byte is not 0")

    def equals(self, other: QuantizedTensor) -> bool:
        """Field-for-field equality; absmax is compared bit-exactly."""
        return (
            isinstance(other, QuantizedTensor)
            and self.n == other.n
            and self.block_size == other.block_size
            and self.codebook_id == other.codebook_id
            and np.array_equal(self.packed, other.packed)
            and self.absmax.tobytes() == other.absmax.tobytes()
        )
