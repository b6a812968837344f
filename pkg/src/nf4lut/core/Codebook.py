from __future__ import annotations
from typing import Optional, Sequence
import numpy as np

import logging
logger = logging.getLogger(__name__)


# The 16 NF4 code values as published with the QLoRA/bitsandbytes reference
# implementation (bitsandbytes/functional.py). Every entry is exactly
# representable in float32.
NF4_CODE_VALUES = (
    -1.0,
    -0.6961928009986877,
    -0.5250730514526367,
    -0.39491748809814453,
    -0.28444138169288635,
    -0.18477343022823334,
    -0.09105003625154495,
    0.0,
    0.07958029955625534,
    0.16093020141124725,
    0.24611230194568634,
    0.33791524171829224,
    0.44070982933044434,
    0.5626170039176941,
    0.7229568362236023,
    1.0,
)
NF4_CODEBOOK_ID = "nf4-v1"
NF4_NUM_CODES = 16
NF4_ZERO_INDEX = 7


class Codebook:
    def __init__(self, values: Sequence[float], id: str = NF4_CODEBOOK_ID):
        """
        A 16-entry quantization code table (the dequantization LUT).

        Params:
          - (Sequence[float]) values: the code values, ordered by nibble index
          - (str) id: short identity tag stored in containers instead of the table itself

        The values are stored as a read-only float32 array. The constructor does not reject
        malformed tables; use validate() to find the first violated invariant.
        """
        self._source = np.asarray(values, dtype=np.float64)
        values_f32 = np.asarray(values, dtype=np.float32)
        values_f32.flags.writeable = False
        self.values = values_f32
        self.id = id

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"Codebook(id={self.id!r}, entries={len(self.values)})"

    @property
    def nbytes(self) -> int:
        """Size of the table at float32 precision (64 bytes for a valid codebook)."""
        return int(self.values.nbytes)

    @property
    def max_gap(self) -> float:
        """The largest distance between two adjacent code values."""
        return float(np.max(np.diff(self.values.astype(np.float64))))

    @property
    def half_max_gap(self) -> float:
        """
        Half of the largest adjacent gap. Round-to-nearest assignment never moves a normalized
        value further than this, so it bounds the per-element roundtrip error relative to absmax.
        """
        return self.max_gap / 2

    def validate(self) -> Optional[str]:
        """
        Checks the codebook invariants in order and returns a description of the first violated
        invariant, or None if the codebook is valid.
        """
        if len(self._source) != NF4_NUM_CODES:
            return f"wrong length: {len(self._source)} entries, expected {NF4_NUM_CODES}"
        if not np.all(np.isfinite(self._source)):
            return "non-finite entry"
        if not np.array_equal(self._source, self.values.astype(np.float64)):
            return "entry not representable in float32"
        if not np.all(np.diff(self.values) > 0):
            return "not strictly increasing"
        if self.values[0] != -1.0:
            return f"values[0] is {self.values[0]}, expected -1.0"
        if self.values[-1] != 1.0:
            return f"values[15] is {self.values[-1]}, expected 1.0"
        if self.values[NF4_ZERO_INDEX] != 0.0:
            return f"values[{NF4_ZERO_INDEX}] is {self.values[NF4_ZERO_INDEX]}, expected 0.0"
        return None

    def dump_lines(self) -> list[str]:
        """Index-prefixed lines with every value in full (shortest round-trip) precision."""
        return [f"{i}\t{float(v)!r}" for i, v in enumerate(self.values)]


_CANONICAL_NF4 = Codebook(NF4_CODE_VALUES, NF4_CODEBOOK_ID)


def canonical_nf4() -> Codebook:
    """Returns the canonical NF4 codebook. The same object is returned on every call."""
    return _CANONICAL_NF4


def validate(cb: Codebook) -> Optional[str]:
    """Returns None if 'cb' is valid, otherwise a description of its first violated invariant."""
    return cb.validate()
