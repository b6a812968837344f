__version__ = "1.0.0"

from .core.Codebook import Codebook, canonical_nf4, validate, NF4_CODE_VALUES, NF4_CODEBOOK_ID
from .core.QuantizedTensor import QuantizedTensor, NF4_BLOCK_SIZE
from .core.Quantizer import (
    nearest_code_index,
    quantize_blockwise,
    pack_nibbles,
    unpack_nibbles,
)
from .core.ExecConfig import ExecConfig
from .core.Dequantizer import (
    DecoderKind,
    TiledDequantizer,
    decode_nibble_lut,
    decode_nibble_tree,
    dequantize_byte,
    dequantize_blockwise,
    dequantize_reference,
)
from .core.CostModel import (
    KernelGeometry,
    CycleCosts,
    CostModelResult,
    lut_traffic,
    instruction_reduction,
    latency_advantage,
    amdahl_projection,
    overhead_sweep,
    memory_footprint,
    evaluate,
)
from .core.Errors import (
    NF4Error,
    NonFiniteValueError,
    NibbleRangeError,
    CodebookMismatchError,
    InvariantViolationError,
    ContainerError,
    NotNF4KFileError,
    UnsupportedVersionError,
    TruncatedContainerError,
    CorruptContainerError,
    BenchAllocationError,
    RawArrayError,
)

from .storage.Container import (
    ContainerHeader,
    VerifyResult,
    write_container,
    read_container,
    container_size,
    save_container,
    load_container,
    verify_container,
    FORMAT_VERSION,
)

from .Benchmark import (
    BenchSpec,
    BenchReport,
    DecoderComparison,
    run_bench,
    run_comparison,
    compare_decoders,
    write_csv,
    write_plot,
)

from .util.FileUtil import FileUtil
from .util.JsonUtil import JsonUtil
from .util.Timer import Timer
from .util.LogConfigLoader import LogConfigLoader

__all__ = [
    "__version__",
    "Codebook",
    "canonical_nf4",
    "validate",
    "NF4_CODE_VALUES",
    "NF4_CODEBOOK_ID",
    "QuantizedTensor",
    "NF4_BLOCK_SIZE",
    "nearest_code_index",
    "quantize_blockwise",
    "pack_nibbles",
    "unpack_nibbles",
    "ExecConfig",
    "DecoderKind",
    "TiledDequantizer",
    "decode_nibble_lut",
    "decode_nibble_tree",
    "dequantize_byte",
    "dequantize_blockwise",
    "dequantize_reference",
    "KernelGeometry",
    "CycleCosts",
    "CostModelResult",
    "lut_traffic",
    "instruction_reduction",
    "latency_advantage",
    "amdahl_projection",
    "overhead_sweep",
    "memory_footprint",
    "evaluate",
    "NF4Error",
    "NonFiniteValueError",
    "NibbleRangeError",
    "CodebookMismatchError",
    "InvariantViolationError",
    "ContainerError",
    "NotNF4KFileError",
    "UnsupportedVersionError",
    "TruncatedContainerError",
    "CorruptContainerError",
    "BenchAllocationError",
    "RawArrayError",
    "ContainerHeader",
    "VerifyResult",
    "write_container",
    "read_container",
    "container_size",
    "save_container",
    "load_container",
    "verify_container",
    "FORMAT_VERSION",
    "BenchSpec",
    "BenchReport",
    "DecoderComparison",
    "run_bench",
    "run_comparison",
    "compare_decoders",
    "write_csv",
    "write_plot",
    "FileUtil",
    "JsonUtil",
    "Timer",
    "LogConfigLoader",
]
