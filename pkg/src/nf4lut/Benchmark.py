from __future__ import annotations
from typing import List
import os
import platform
import statistics
import zlib
import numpy as np
import pandas as pd
from tqdm import tqdm
from tqdm.contrib.logging import logging_redirect_tqdm

from .core.Codebook import canonical_nf4
from .core.QuantizedTensor import QuantizedTensor
from .core.Quantizer import quantize_blockwise
from .core.ExecConfig import ExecConfig
from .core.Dequantizer import DecoderKind, dequantize_blockwise
from .core.Errors import BenchAllocationError, InvariantViolationError
from .util.FileUtil import FileUtil
from .util.Timer import Timer

import logging
logger = logging.getLogger(__name__)

MAX_SEED = 2**64 - 1


class BenchSpec:
    def __init__(
        self,
        n_elements: int,
        decoder: DecoderKind = DecoderKind.DIRECT_LUT,
        workers: int = 1,
        warmup_passes: int = 1,
        measured_passes: int = 3,
        seed: int = 0,
        cfg: ExecConfig = None,
    ):
        """
        One benchmark configuration.

        Params:
          - (int) n_elements: size of the generated tensor
          - (DecoderKind) decoder: decoder under test
          - (int) workers: dequantization workers, overrides cfg.workers
          - (int) warmup_passes: untimed passes run first (default 1)
          - (int) measured_passes: timed passes, the report holds their mean (default 3)
          - (int) seed: seed of the PCG64 generator the standard-normal input is drawn from
          - (ExecConfig) cfg: tile geometry and output precision; defaults to ExecConfig()
        """
        self.n_elements = n_elements
        self.decoder = decoder
        self.workers = workers
        self.warmup_passes = warmup_passes
        self.measured_passes = measured_passes
        self.seed = seed
        base = cfg if cfg is not None else ExecConfig()
        self.cfg = base.replace(workers=workers)
        self.validate()

    def validate(self):
        if not isinstance(self.n_elements, (int, np.integer)) or self.n_elements <= 0:
            raise ValueError(f"BenchSpec.n_elements must be > 0, got {self.n_elements}")
        if self.measured_passes < 1:
            raise ValueError(f"BenchSpec.measured_passes must be >= 1, got {self.measured_passes}")
        if self.warmup_passes < 0:
            raise ValueError(f"BenchSpec.warmup_passes must be >= 0, got {self.warmup_passes}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"BenchSpec.seed must be an unsigned 64-bit integer, got {self.seed}")

    def with_decoder(self, decoder: DecoderKind) -> BenchSpec:
        return BenchSpec(
            n_elements=self.n_elements,
            decoder=decoder,
            workers=self.workers,
            warmup_passes=self.warmup_passes,
            measured_passes=self.measured_passes,
            seed=self.seed,
            cfg=self.cfg,
        )

    def to_json(self) -> dict:
        return {
            "n_elements": int(self.n_elements),
            "decoder": self.decoder.value,
            "workers": self.workers,
            "warmup_passes": self.warmup_passes,
            "measured_passes": self.measured_passes,
            "seed": self.seed,
            "exec_config": self.cfg.to_json(),
        }


class BenchReport:
    def __init__(self, spec: BenchSpec, pass_times: List[float], input_nbytes: int, checksum: int):
        """
        Result of one run_bench call. All fields except the timings are reproducible for a given spec.
          - pass_times: wall time of every measured pass, seconds
          - mean_latency: arithmetic mean of pass_times
          - throughput_elems / throughput_bytes: n_elements / mean and input bytes (packed + absmax) / mean
          - checksum: CRC-32 of the output bytes
        """
        self.spec = spec
        self.pass_times = list(pass_times)
        self.mean_latency = statistics.fmean(self.pass_times)
        self.stdev_latency = statistics.stdev(self.pass_times) if len(self.pass_times) > 1 else 0.0
        self.min_latency = min(self.pass_times)
        self.max_latency = max(self.pass_times)
        self.input_nbytes = input_nbytes
        self.throughput_elems = spec.n_elements / self.mean_latency if self.mean_latency > 0 else float("inf")
        self.throughput_bytes = input_nbytes / self.mean_latency if self.mean_latency > 0 else float("inf")
        self.checksum = checksum
        self.timestamp = Timer.get_current_time()

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "pass_times": self.pass_times,
            "mean_latency": self.mean_latency,
            "stdev_latency": self.stdev_latency,
            "min_latency": self.min_latency,
            "max_latency": self.max_latency,
            "input_nbytes": self.input_nbytes,
            "throughput_elems": self.throughput_elems,
            "throughput_bytes": self.throughput_bytes,
            "checksum": f"{self.checksum:08x}",
            "timestamp": self.timestamp,
        }

    def to_row(self) -> dict:
        """Flat dict, one CSV row."""
        return {
            "timestamp": self.timestamp,
            "host": platform.node(),
            "n_elements": int(self.spec.n_elements),
            "decoder": self.spec.decoder.value,
            "workers": self.spec.workers,
            "tile_elems": self.spec.cfg.tile_elems,
            "output_precision": self.spec.cfg.output_precision,
            "warmup_passes": self.spec.warmup_passes,
            "measured_passes": self.spec.measured_passes,
            "seed": self.spec.seed,
            "pass_times": ";".join(f"{t:.9f}" for t in self.pass_times),
            "mean_latency_s": self.mean_latency,
            "stdev_latency_s": self.stdev_latency,
            "throughput_elems_s": self.throughput_elems,
            "throughput_bytes_s": self.throughput_bytes,
            "checksum": f"{self.checksum:08x}",
        }


def generate_input(n_elements: int, seed: int) -> np.ndarray:
    """Standard-normal float32 values from numpy's PCG64 generator seeded with 'seed'."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal(n_elements, dtype=np.float32)


def output_checksum(out: np.ndarray) -> int:
    return zlib.crc32(np.ascontiguousarray(out).view(np.uint8)) & 0xFFFFFFFF


def prepare_tensor(spec: BenchSpec) -> QuantizedTensor:
    """Generates and quantizes the benchmark input. Fails with BenchAllocationError before any timing."""
    if spec.n_elements > np.iinfo(np.intp).max:
        raise BenchAllocationError(f"cannot allocate a {spec.n_elements}-element benchmark tensor: exceeds the addressable size")
    try:
        values = generate_input(spec.n_elements, spec.seed)
        return quantize_blockwise(values, canonical_nf4())
    except (MemoryError, ValueError) as e:
        raise BenchAllocationError(f"cannot allocate a {spec.n_elements}-element benchmark tensor: {e}")


def measure(spec: BenchSpec, qt: QuantizedTensor, show_progress: bool = False) -> BenchReport:
    """
    Runs the warmup and measured passes of 'spec' on an already quantized tensor. Only the
    dequantize call is inside the timed region.
    """
    cb = canonical_nf4()
    checksums = set()
    label = f"{spec.decoder.value} n={spec.n_elements}"

    pass_times = []
    timer = Timer()
    with logging_redirect_tqdm():
        for _ in tqdm(range(spec.warmup_passes), desc=f"warmup {label}", disable=not show_progress, leave=False):
            out = dequantize_blockwise(qt, spec.decoder, spec.cfg, cb)
            checksums.add(output_checksum(out))
            del out

        for i in tqdm(range(spec.measured_passes), desc=f"measure {label}", disable=not show_progress, leave=False):
            timer.set_start_time()
            out = dequantize_blockwise(qt, spec.decoder, spec.cfg, cb)
            elapsed = timer.get_elapsed()
            pass_times.append(elapsed)
            checksums.add(output_checksum(out))
            del out
            logger.info(f"Pass {i + 1}/{spec.measured_passes} ({label}): {elapsed * 1000:.3f} ms")

    if len(checksums) != 1:
        raise InvariantViolationError(f"invariant violation: output checksum changed between passes ({label})")
    report = BenchReport(spec, pass_times, input_nbytes=qt.payload_nbytes, checksum=checksums.pop())
    logger.info(f"{label}: mean {report.mean_latency * 1000:.3f} ms, {report.throughput_elems / 1e6:.1f} Melem/s")
    return report


def run_bench(spec: BenchSpec, show_progress: bool = False) -> BenchReport:
    """
    Generates a seeded standard-normal tensor, quantizes it once (untimed), runs the warmup passes
    untimed and then times the measured passes.
    """
    qt = prepare_tensor(spec)
    return measure(spec, qt, show_progress=show_progress)


class DecoderComparison:
    def __init__(self, tree: BenchReport, lut: BenchReport):
        if tree.checksum != lut.checksum:
            raise InvariantViolationError(
                f"invariant violation: decoder outputs differ (tree {tree.checksum:08x}, lut {lut.checksum:08x})"
            )
        self.tree = tree
        self.lut = lut
        self.ratio = tree.mean_latency / lut.mean_latency

    @property
    def reports(self) -> List[BenchReport]:
        return [self.tree, self.lut]


def run_comparison(spec: BenchSpec, show_progress: bool = False) -> DecoderComparison:
    """Benchmarks both decoders on one shared input tensor."""
    qt = prepare_tensor(spec)
    tree = measure(spec.with_decoder(DecoderKind.TREE), qt, show_progress=show_progress)
    lut = measure(spec.with_decoder(DecoderKind.DIRECT_LUT), qt, show_progress=show_progress)
    comparison = DecoderComparison(tree, lut)
    if comparison.ratio < 1.0:
        logger.warning(f"Direct LUT decoding was slower than the tree decoder (ratio {comparison.ratio:.3f})")
    else:
        logger.info(f"Tree / direct LUT latency ratio: {comparison.ratio:.3f}")
    return comparison


def compare_decoders(
    n_elements: int,
    workers: int = 1,
    seed: int = 0,
    warmup_passes: int = 1,
    measured_passes: int = 3,
    cfg: ExecConfig = None,
) -> float:
    """Returns mean_latency(TREE) / mean_latency(DIRECT_LUT) measured on identical inputs."""
    spec = BenchSpec(
        n_elements=n_elements,
        workers=workers,
        seed=seed,
        warmup_passes=warmup_passes,
        measured_passes=measured_passes,
        cfg=cfg,
    )
    return run_comparison(spec).ratio


def write_csv(reports: List[BenchReport], filepath: str, append: bool = True) -> str:
    """
    Writes one row per report. With 'append' and an existing file the rows are appended without
    repeating the header.
    """
    df = pd.DataFrame([r.to_row() for r in reports])
    exists = os.path.exists(filepath) and not FileUtil.is_file_empty(filepath)
    FileUtil.check_path(filepath)
    if append and exists:
        df.to_csv(filepath, mode="a", header=False, index=False)
    else:
        df.to_csv(filepath, index=False)
    logger.info(f"Bench results saved to: {filepath}")
    return filepath


def write_plot(reports: List[BenchReport], filepath: str) -> str:
    """
    Renders mean latency and throughput bars per report into a static image. Needs matplotlib
    (the 'plot' extra).
    """
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise RuntimeError("plot output needs matplotlib: pip install nf4lut[plot]")

    labels = [f"{r.spec.decoder.value}\nw={r.spec.workers}" for r in reports]
    latencies_ms = [r.mean_latency * 1000 for r in reports]
    errors_ms = [r.stdev_latency * 1000 for r in reports]
    throughputs = [r.throughput_elems / 1e6 for r in reports]

    fig, (ax_latency, ax_throughput) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_latency.bar(labels, latencies_ms, yerr=errors_ms, capsize=4, color="tab:blue")
    ax_latency.set_ylabel("mean latency (ms)")
    ax_throughput.bar(labels, throughputs, color="tab:green")
    ax_throughput.set_ylabel("throughput (Melem/s)")
    n_elements = reports[0].spec.n_elements if reports else 0
    fig.suptitle(f"NF4 dequantization, n={n_elements}")
    fig.tight_layout()

    FileUtil.check_path(filepath)
    fig.savefig(filepath)
    plt.close(fig)
    logger.info(f"Bench plot saved to: {filepath}")
    return filepath
