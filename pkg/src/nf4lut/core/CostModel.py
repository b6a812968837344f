from __future__ import annotations
from typing import Dict
import math

import logging
logger = logging.getLogger(__name__)

# Measured share of end-to-end inference latency spent in NF4 dequantization,
# Qwen3-32B on GSM8K, by batch size (baseline kernel).
QWEN3_32B_DEQUANT_OVERHEAD = {
    2: 0.398,
    4: 0.393,
    8: 0.374,
    16: 0.347,
    32: 0.295,
    64: 0.214,
}

# Measured average kernel-level speedup of direct LUT decoding over the tree decoder (A100).
MEASURED_KERNEL_SPEEDUP = {
    "Gemma-27B": 2.10,
    "Qwen3-32B": 2.19,
    "Llama3.3-70B": 2.04,
}

BASELINE_DECODE_INSTRUCTIONS = 7
OPTIMIZED_DECODE_INSTRUCTIONS = 2


def _check_positive(owner: str, **fields):
    for name, value in fields.items():
        if not value > 0:
            raise ValueError(f"{owner}.{name} must be positive, got {value}")


class KernelGeometry:
    def __init__(self, lanes_per_block: int = 64, lut_bytes: int = 64, elems_per_lane: int = 8):
        """
        Thread-block geometry of the dequantization kernel.
          - lanes_per_block: threads per block
          - lut_bytes: size of the code table (16 x float32)
          - elems_per_lane: elements each thread dequantizes
        """
        _check_positive("KernelGeometry", lanes_per_block=lanes_per_block, lut_bytes=lut_bytes, elems_per_lane=elems_per_lane)
        self.lanes_per_block = lanes_per_block
        self.lut_bytes = lut_bytes
        self.elems_per_lane = elems_per_lane

    @property
    def tile_elems(self) -> int:
        return self.lanes_per_block * self.elems_per_lane


class CycleCosts:
    def __init__(self, global_access: float = 290, shared_read: float = 23, shared_write: float = 19):
        """Memory access latencies in clock cycles (Ampere defaults)."""
        _check_positive("CycleCosts", global_access=global_access, shared_read=shared_read, shared_write=shared_write)
        # equal costs are allowed, they describe the degenerate (1, 1) case
        if global_access < shared_read:
            raise ValueError(
                f"CycleCosts.global_access ({global_access}) must not be below shared_read ({shared_read})"
            )
        self.global_access = global_access
        self.shared_read = shared_read
        self.shared_write = shared_write

    def scaled(self, factor: float) -> CycleCosts:
        return CycleCosts(self.global_access * factor, self.shared_read * factor, self.shared_write * factor)


class CostModelResult:
    def __init__(
        self,
        baseline_lut_bytes_per_block: int,
        optimized_lut_bytes_per_block: int,
        traffic_ratio: float,
        baseline_instrs: int,
        optimized_instrs: int,
        instr_reduction: float,
        latency_ratio_lo: float,
        latency_ratio_hi: float,
    ):
        self.baseline_lut_bytes_per_block = baseline_lut_bytes_per_block
        self.optimized_lut_bytes_per_block = optimized_lut_bytes_per_block
        self.traffic_ratio = traffic_ratio
        self.baseline_instrs = baseline_instrs
        self.optimized_instrs = optimized_instrs
        self.instr_reduction = instr_reduction
        self.latency_ratio_lo = latency_ratio_lo
        self.latency_ratio_hi = latency_ratio_hi

    def to_json(self) -> dict:
        return dict(vars(self))


def lut_traffic(geom: KernelGeometry = None) -> tuple:
    """
    Global-memory LUT bytes per thread block: every lane loading its own table (baseline) versus one
    load per block (optimized). Returns (baseline_bytes, optimized_bytes, ratio).
    """
    geom = geom if geom is not None else KernelGeometry()
    baseline = geom.lanes_per_block * geom.lut_bytes
    optimized = geom.lut_bytes
    return baseline, optimized, baseline / optimized


def instruction_reduction(
    baseline: int = BASELINE_DECODE_INSTRUCTIONS, optimized: int = OPTIMIZED_DECODE_INSTRUCTIONS
) -> tuple:
    """
    Per-weight index computation cost of the tree decoder versus direct indexing.
    Returns (baseline, optimized, reduction) with reduction = (baseline - optimized) / baseline.
    """
    _check_positive("instruction_reduction", baseline=baseline, optimized=optimized)
    return baseline, optimized, (baseline - optimized) / baseline


def latency_advantage(c: CycleCosts = None) -> tuple:
    """Returns (global/shared_read, global/shared_write)."""
    c = c if c is not None else CycleCosts()
    return c.global_access / c.shared_read, c.global_access / c.shared_write


def amdahl_projection(f: float, s: float) -> float:
    """
    End-to-end speedup when a fraction 'f' of the runtime is accelerated by a factor 's':
    1 / ((1 - f) + f / s).
    """
    if not (math.isfinite(f) and 0 <= f <= 1):
        raise ValueError(f"overhead fraction must be in [0, 1], got {f}")
    if not (math.isfinite(s) and s > 0):
        raise ValueError(f"kernel speedup must be > 0, got {s}")
    return 1 / ((1 - f) + f / s)


def overhead_sweep(s: float, overheads: Dict[int, float] = None) -> Dict[int, float]:
    """
    Projects the end-to-end speedup for each entry of 'overheads' (batch size -> dequantization share
    of latency). Defaults to the measured Qwen3-32B profile.
    """
    overheads = overheads if overheads is not None else QWEN3_32B_DEQUANT_OVERHEAD
    return {batch: amdahl_projection(f, s) for batch, f in overheads.items()}


def memory_footprint(n_params: int, block_size: int = 64) -> tuple:
    """
    Storage for 'n_params' weights: (fp16_bytes, nf4_bytes, ratio). NF4 bytes count the packed
    nibbles plus one float32 absmax per block.
    """
    if n_params < 0:
        raise ValueError(f"parameter count must be >= 0, got {n_params}")
    _check_positive("memory_footprint", block_size=block_size)
    n_params = int(n_params)
    fp16_bytes = 2 * n_params
    nf4_bytes = -(-n_params // 2) + 4 * -(-n_params // block_size)
    ratio = fp16_bytes / nf4_bytes if nf4_bytes else float("nan")
    return fp16_bytes, nf4_bytes, ratio


def evaluate(
    geom: KernelGeometry = None,
    costs: CycleCosts = None,
    baseline_instrs: int = BASELINE_DECODE_INSTRUCTIONS,
    optimized_instrs: int = OPTIMIZED_DECODE_INSTRUCTIONS,
) -> CostModelResult:
    """Runs lut_traffic, instruction_reduction and latency_advantage and collects the results."""
    baseline_bytes, optimized_bytes, traffic_ratio = lut_traffic(geom)
    baseline, optimized, reduction = instruction_reduction(baseline_instrs, optimized_instrs)
    lo, hi = latency_advantage(costs)
    logger.debug(f"Cost model: traffic x{traffic_ratio}, instructions -{reduction:.3f}, latency x{lo:.2f}..x{hi:.2f}")
    return CostModelResult(
        baseline_lut_bytes_per_block=baseline_bytes,
        optimized_lut_bytes_per_block=optimized_bytes,
        traffic_ratio=traffic_ratio,
        baseline_instrs=baseline,
        optimized_instrs=optimized,
        instr_reduction=reduction,
        latency_ratio_lo=lo,
        latency_ratio_hi=hi,
    )
