"""
NF4K container: a byte-exact, little-endian file format for one QuantizedTensor.

    offset  size  field
    0       4     magic "NF4K"
    4       2     version (uint16, = 1)
    6       2     flags (uint16, bit 0 = odd-length pad nibble present, other bits 0)
    8       8     n, element count (uint64)
    16      4     block_size (uint32, = 64)
    20      1     codebook_id_len (uint8)
    21      L     codebook_id (UTF-8)
    21+L    4*B   absmax, B = ceil(n / block_size) float32 values
    ...     P     packed nibbles, P = ceil(n / 2) bytes
    ...     4     CRC-32 (IEEE) of every preceding byte (uint32)

The codebook is stored by id only; "nf4-v1" gives a 27-byte header and a 31-byte file for n = 0.
"""

from __future__ import annotations
from typing import BinaryIO
import io
import struct
import zlib
import numpy as np

from ..core.Codebook import Codebook, canonical_nf4, NF4_CODEBOOK_ID
from ..core.QuantizedTensor import QuantizedTensor, NF4_BLOCK_SIZE, ceil_div
from ..core.ExecConfig import ExecConfig
from ..core.Dequantizer import DecoderKind, dequantize_blockwise
from ..core.Errors import (
    InvariantViolationError,
    NotNF4KFileError,
    UnsupportedVersionError,
    TruncatedContainerError,
    CorruptContainerError,
)
from ..util.FileUtil import FileUtil

import logging
logger = logging.getLogger(__name__)

MAGIC = b"NF4K"
FORMAT_VERSION = 1
FLAG_PAD_NIBBLE = 0x0001
HEADER_STRUCT = struct.Struct("<4sHHQIB")
CRC_STRUCT = struct.Struct("<I")


class ContainerHeader:
    def __init__(self, n: int, block_size: int = NF4_BLOCK_SIZE, codebook_id: str = NF4_CODEBOOK_ID, version: int = FORMAT_VERSION, flags: int = None):
        self.magic = MAGIC
        self.version = version
        self.n = n
        self.block_size = block_size
        self.codebook_id = codebook_id
        self.flags = flags if flags is not None else (FLAG_PAD_NIBBLE if n % 2 == 1 else 0)

    @property
    def codebook_id_bytes(self) -> bytes:
        return self.codebook_id.encode("utf-8")

    @property
    def nbytes(self) -> int:
        return HEADER_STRUCT.size + len(self.codebook_id_bytes)

    def pack(self) -> bytes:
        id_bytes = self.codebook_id_bytes
        if len(id_bytes) > 255:
            raise ValueError(f"codebook id is {len(id_bytes)} bytes long, at most 255 fit the header")
        return HEADER_STRUCT.pack(self.magic, self.version, self.flags, self.n, self.block_size, len(id_bytes)) + id_bytes


def container_size(n: int, codebook_id: str = NF4_CODEBOOK_ID, block_size: int = NF4_BLOCK_SIZE) -> int:
    """Exact container size in bytes: header + 4 * ceil(n/block_size) + ceil(n/2) + 4."""
    header_len = HEADER_STRUCT.size + len(codebook_id.encode("utf-8"))
    return header_len + 4 * ceil_div(n, block_size) + ceil_div(n, 2) + CRC_STRUCT.size


def write_container(qt: QuantizedTensor, sink: BinaryIO) -> int:
    """
    Writes 'qt' to the binary stream 'sink' and returns the number of bytes written.
    Write failures of the sink propagate.
    """
    qt.validate()
    header = ContainerHeader(n=qt.n, block_size=qt.block_size, codebook_id=qt.codebook_id)
    buf = bytearray(header.pack())
    buf.extend(qt.absmax.astype("<f4").tobytes())
    buf.extend(qt.packed.tobytes())
    buf.extend(CRC_STRUCT.pack(zlib.crc32(buf) & 0xFFFFFFFF))
    sink.write(bytes(buf))
    logger.debug(f"Wrote NF4K container: n={qt.n}, {len(buf)} bytes")
    return len(buf)


def read_container(source: BinaryIO) -> QuantizedTensor:
    """
    Reads a QuantizedTensor from the binary stream 'source', validating the header invariants and the
    CRC before returning.

    Raises:
      - NotNF4KFileError: bad magic
      - UnsupportedVersionError: version is not 1
      - TruncatedContainerError: fewer bytes than the header announces
      - CorruptContainerError: CRC mismatch, trailing bytes or an inconsistent header / payload
    """
    return _parse_container(source.read())


def _parse_container(data: bytes) -> QuantizedTensor:
    if len(data) < len(MAGIC):
        if data != MAGIC[: len(data)]:
            raise NotNF4KFileError("not an NF4K file")
        raise TruncatedContainerError(f"truncated: {len(data)} bytes, header needs {HEADER_STRUCT.size}")
    if data[: len(MAGIC)] != MAGIC:
        raise NotNF4KFileError(f"not an NF4K file (magic={data[:len(MAGIC)]!r}, expected {MAGIC!r})")
    if len(data) < HEADER_STRUCT.size:
        raise TruncatedContainerError(f"truncated: {len(data)} bytes, header needs {HEADER_STRUCT.size}")

    _, version, flags, n, block_size, id_len = HEADER_STRUCT.unpack_from(data, 0)
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported version {version} (this build reads version {FORMAT_VERSION})")
    header_len = HEADER_STRUCT.size + id_len
    if len(data) < header_len:
        raise TruncatedContainerError(f"truncated: {len(data)} bytes, header needs {header_len}")
    if block_size != NF4_BLOCK_SIZE:
        raise CorruptContainerError(f"corrupt: block size {block_size}, expected {NF4_BLOCK_SIZE}")
    if flags & ~FLAG_PAD_NIBBLE:
        raise CorruptContainerError(f"corrupt: unknown flag bits 0x{flags:04x}")
    if bool(flags & FLAG_PAD_NIBBLE) != (n % 2 == 1):
        raise CorruptContainerError(f"corrupt: pad flag doesn't match element count {n}")

    num_blocks = ceil_div(n, block_size)
    num_packed = ceil_div(n, 2)
    expected = header_len + 4 * num_blocks + num_packed + CRC_STRUCT.size
    if len(data) < expected:
        raise TruncatedContainerError(f"truncated: {len(data)} bytes, expected {expected} for n={n}")
    if len(data) > expected:
        raise CorruptContainerError(f"corrupt: {len(data) - expected} trailing bytes after the checksum")

    (stored_crc,) = CRC_STRUCT.unpack_from(data, expected - CRC_STRUCT.size)
    computed_crc = zlib.crc32(data[: expected - CRC_STRUCT.size]) & 0xFFFFFFFF
    if stored_crc != computed_crc:
        raise CorruptContainerError(f"corrupt: CRC mismatch (stored 0x{stored_crc:08x}, computed 0x{computed_crc:08x})")

    try:
        codebook_id = data[HEADER_STRUCT.size : header_len].decode("utf-8")
    except UnicodeDecodeError:
        raise CorruptContainerError("corrupt: codebook id is not valid UTF-8")
    absmax_end = header_len + 4 * num_blocks
    absmax = np.frombuffer(data, dtype="<f4", count=num_blocks, offset=header_len).astype(np.float32)
    packed = np.frombuffer(data, dtype=np.uint8, count=num_packed, offset=absmax_end).copy()

    qt = QuantizedTensor(packed=packed, absmax=absmax, n=n, block_size=block_size, codebook_id=codebook_id)
    try:
        qt.validate()
    except InvariantViolationError as e:
        raise CorruptContainerError(f"corrupt: {e}")
    logger.debug(f"Read NF4K container: n={n}, codebook_id={codebook_id!r}, {expected} bytes")
    return qt


def to_bytes(qt: QuantizedTensor) -> bytes:
    sink = io.BytesIO()
    write_container(qt, sink)
    return sink.getvalue()


def from_bytes(data: bytes) -> QuantizedTensor:
    return _parse_container(bytes(data))


def save_container(qt: QuantizedTensor, filepath: str) -> int:
    FileUtil.check_path(filepath, auto_create=False)
    with open(filepath, "wb") as f:
        return write_container(qt, f)


def load_container(filepath: str) -> QuantizedTensor:
    with open(filepath, "rb") as f:
        return read_container(f)


class VerifyResult:
    def __init__(self, qt: QuantizedTensor, nbytes: int, decoders_equal: bool, mismatches: int):
        self.n = qt.n
        self.blocks = qt.num_blocks
        self.codebook_id = qt.codebook_id
        self.nbytes = nbytes
        self.decoders_equal = decoders_equal
        self.mismatches = mismatches

    @property
    def ok(self) -> bool:
        return self.decoders_equal

    def summary(self) -> str:
        status = "OK" if self.ok else f"MISMATCH ({self.mismatches} elements)"
        return f"{status}: n={self.n} blocks={self.blocks} codebook={self.codebook_id} bytes={self.nbytes} decoders={'equal' if self.decoders_equal else 'differ'}"


def verify_container(source: str | BinaryIO, cfg: ExecConfig = None, cb: Codebook = None) -> VerifyResult:
    """
    Checks the container header and CRC (raising the read_container errors) and dequantizes the
    payload with both decoders, comparing the outputs bit for bit.

    Params:
      - (str | BinaryIO) source: a filepath or a readable binary stream
    """
    cb = cb if cb is not None else canonical_nf4()
    if isinstance(source, str):
        with open(source, "rb") as f:
            data = f.read()
        name = source
    else:
        data = source.read()
        name = getattr(source, "name", "stream")
    qt = _parse_container(data)
    tree = dequantize_blockwise(qt, DecoderKind.TREE, cfg, cb)
    lut = dequantize_blockwise(qt, DecoderKind.DIRECT_LUT, cfg, cb)
    bits = f"u{tree.itemsize}"
    mismatches = int(np.count_nonzero(tree.view(bits) != lut.view(bits)))
    if mismatches:
        logger.warning(f"Decoder outputs differ for {mismatches} elements of {name}")
    return VerifyResult(qt, nbytes=len(data), decoders_equal=mismatches == 0, mismatches=mismatches)
