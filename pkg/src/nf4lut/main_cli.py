# Command-line entry point of nf4lut (the 'nf4lut' console script).
#
#   nf4lut quantize weights.f32 weights.nf4
#   nf4lut dequantize weights.nf4 restored.f32 --decoder lut --workers 4
#   nf4lut verify weights.nf4
#   nf4lut bench --n 100000000 --decoder both --csv results/bench.csv
#   nf4lut codebook dump
#   nf4lut model --f 0.295 --s 2.19 --sweep
#
# Data goes to files or stdout ("-"), diagnostics go to stderr.
# Exit codes: 0 success, 1 usage or parameter error, 2 data error.

import argparse
import sys
import numpy as np
from tabulate import tabulate

from nf4lut import __version__
from nf4lut import canonical_nf4, quantize_blockwise, dequantize_blockwise, DecoderKind, ExecConfig
from nf4lut import write_container, read_container, save_container, load_container, verify_container, FORMAT_VERSION
from nf4lut import KernelGeometry, CycleCosts, evaluate, amdahl_projection, overhead_sweep, memory_footprint
from nf4lut import BenchSpec, run_bench, run_comparison, write_csv, write_plot
from nf4lut import NF4Error, RawArrayError
from nf4lut import LogConfigLoader, JsonUtil, FileUtil, Timer
from nf4lut.core.CostModel import QWEN3_32B_DEQUANT_OVERHEAD, MEASURED_KERNEL_SPEEDUP
from nf4lut.util.LogConfigLoader import DEFAULT_LOG_CONFIG

import logging
logger = logging.getLogger(__name__)

PROG = "nf4lut"
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
STDIO = "-"


class UsageError(Exception):
    pass


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with the full help text and exit code 1."""

    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _count(value: str) -> int:
    """Non-negative element count, accepts scientific notation (eg. 1e8)."""
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count: {value!r}")
    if number < 0 or number != int(number):
        raise argparse.ArgumentTypeError(f"count must be a non-negative integer, got {value!r}")
    return int(number)


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer: {value!r}")
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    return number


def _exec_config(args) -> ExecConfig:
    """ExecConfig from --config (if given), overridden by the explicit --workers, --tile and --float16 flags."""
    cfg = ExecConfig.from_json(JsonUtil.load_json(args.config)) if args.config else ExecConfig()
    overrides = {}
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "tile", None) is not None:
        overrides["tile_elems"] = args.tile
        overrides["elems_per_lane"] = 8
    if getattr(args, "float16", False):
        overrides["output_precision"] = "float16"
    return cfg.replace(**overrides) if overrides else cfg


def _read_raw_floats(path: str, count: int = None) -> np.ndarray:
    if path != STDIO:
        return FileUtil.read_raw_array(path, dtype="<f4", count=count)
    data = sys.stdin.buffer.read()
    if count is None:
        if len(data) % 4 != 0:
            raise RawArrayError(f"stdin: size {len(data)} is not a multiple of the 4-byte element size")
        count = len(data) // 4
    elif 4 * count > len(data):
        raise RawArrayError(f"stdin: holds {len(data) // 4} elements, {count} requested")
    return np.frombuffer(data, dtype="<f4", count=count)


def cmd_quantize(args) -> int:
    values = _read_raw_floats(args.input, args.count)
    qt = quantize_blockwise(values, canonical_nf4())
    if args.output == STDIO:
        write_container(qt, sys.stdout.buffer)
        sys.stdout.buffer.flush()
    else:
        nbytes = save_container(qt, args.output)
        logger.info(f"Quantized {qt.n} elements into {args.output} ({nbytes} bytes)")
    return EXIT_OK


def cmd_dequantize(args) -> int:
    cfg = _exec_config(args)
    qt = read_container(sys.stdin.buffer) if args.input == STDIO else load_container(args.input)
    out = dequantize_blockwise(qt, DecoderKind.from_str(args.decoder), cfg)
    if args.output == STDIO:
        sys.stdout.buffer.write(out.astype(out.dtype.newbyteorder("<"), copy=False).tobytes())
        sys.stdout.buffer.flush()
    else:
        FileUtil.write_raw_array(out, args.output)
        logger.info(f"Dequantized {qt.n} elements ({cfg.output_precision}) into {args.output}")
    return EXIT_OK


def cmd_verify(args) -> int:
    source = sys.stdin.buffer if args.input == STDIO else args.input
    result = verify_container(source, cfg=_exec_config(args))
    print(result.summary())
    if not result.ok:
        print(f"{PROG}: invariant violation: decoder outputs differ in {result.mismatches} elements", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _bench_table(reports) -> str:
    table = [["decoder", "workers", "n", "tile", "precision", "mean ms", "stdev ms", "min ms", "max ms", "Melem/s", "MB/s", "checksum"]]
    for r in reports:
        table.append(
            [
                r.spec.decoder.value,
                r.spec.workers,
                r.spec.n_elements,
                r.spec.cfg.tile_elems,
                r.spec.cfg.output_precision,
                f"{r.mean_latency * 1e3:.3f}",
                f"{r.stdev_latency * 1e3:.3f}",
                f"{r.min_latency * 1e3:.3f}",
                f"{r.max_latency * 1e3:.3f}",
                f"{r.throughput_elems / 1e6:.1f}",
                f"{r.throughput_bytes / 1e6:.1f}",
                f"{r.checksum:08x}",
            ]
        )
    return tabulate(table, headers="firstrow", tablefmt="grid")


def cmd_bench(args) -> int:
    timer = Timer()
    cfg = _exec_config(args)
    spec = BenchSpec(
        n_elements=args.n,
        decoder=DecoderKind.DIRECT_LUT if args.decoder == "both" else DecoderKind.from_str(args.decoder),
        workers=cfg.workers,
        warmup_passes=args.warmup,
        measured_passes=args.passes,
        seed=args.seed,
        cfg=cfg,
    )
    comparison = None
    if args.decoder == "both":
        comparison = run_comparison(spec, show_progress=args.progress)
        reports = comparison.reports
    else:
        reports = [run_bench(spec, show_progress=args.progress)]

    print(_bench_table(reports))
    if comparison is not None:
        print(f"tree/lut latency ratio: {comparison.ratio:.3f}")

    if args.csv:
        write_csv(reports, args.csv)
    if args.plot:
        write_plot(reports, args.plot)
    if args.json:
        data = {"reports": [r.to_json() for r in reports]}
        if comparison is not None:
            data["tree_lut_ratio"] = comparison.ratio
        JsonUtil.save_json(data, args.json)
    timer.print_elapsed_time(prefix="bench finished in ")
    return EXIT_OK


def cmd_codebook(args) -> int:
    for line in canonical_nf4().dump_lines():
        print(line)
    return EXIT_OK


def _times(ratio: float) -> str:
    return f"{ratio:g}x"


def cmd_model(args) -> int:
    geom = KernelGeometry(args.lanes, args.lut_bytes, args.elems_per_lane)
    costs = CycleCosts(args.global_cycles, args.shared_read_cycles, args.shared_write_cycles)
    result = evaluate(geom, costs, args.baseline_instrs, args.optimized_instrs)
    speedup = amdahl_projection(args.f, args.s)

    lo, hi = result.latency_ratio_lo, result.latency_ratio_hi
    table = [
        ["quantity", "baseline", "optimized", "improvement"],
        [
            "LUT global traffic per block (bytes)",
            result.baseline_lut_bytes_per_block,
            result.optimized_lut_bytes_per_block,
            _times(result.traffic_ratio),
        ],
        [
            "index instructions per weight",
            result.baseline_instrs,
            result.optimized_instrs,
            f"{result.instr_reduction * 100:.0f}%",
        ],
        [
            "access latency (cycles, global vs shared read/write)",
            f"{costs.global_access:g}",
            f"{costs.shared_read:g}/{costs.shared_write:g}",
            f"{int(lo)}-{int(hi)}x ({lo:.1f}x, {hi:.1f}x)",
        ],
        [
            "end-to-end speedup (accelerated share f, kernel speedup s)",
            f"f={args.f:g}",
            f"s={args.s:g}",
            f"{speedup:.3f}x",
        ],
    ]
    print(tabulate(table, headers="firstrow", tablefmt="grid"))

    if args.sweep:
        models = dict(MEASURED_KERNEL_SPEEDUP)
        projections = {name: overhead_sweep(s) for name, s in models.items()}
        user = overhead_sweep(args.s)
        sweep = [["batch", "dequant share"] + [f"{name} (s={s:g})" for name, s in models.items()] + [f"s={args.s:g}"]]
        for batch, f in QWEN3_32B_DEQUANT_OVERHEAD.items():
            sweep.append(
                [batch, f"{f * 100:.1f}%"]
                + [f"{projections[name][batch]:.3f}x" for name in models]
                + [f"{user[batch]:.3f}x"]
            )
        print(tabulate(sweep, headers="firstrow", tablefmt="grid"))

    if args.params is not None:
        fp16_bytes, nf4_bytes, ratio = memory_footprint(args.params)
        footprint = [
            ["parameters", "fp16 bytes", "nf4 bytes", "ratio"],
            [args.params, fp16_bytes, nf4_bytes, f"{ratio:.2f}x"],
        ]
        print(tabulate(footprint, headers="firstrow", tablefmt="grid"))
    return EXIT_OK


def _add_exec_flags(parser: argparse.ArgumentParser, precision: bool = True):
    parser.add_argument("--workers", type=_positive_int, help="Number of dequantization worker threads (default 1).")
    parser.add_argument("--tile", type=_positive_int, help="Tile size in elements, an even multiple of 8 (default 512).")
    if precision:
        parser.add_argument("--float16", action="store_true", help="Produce float16 output instead of float32.")
    parser.add_argument("--config", help="JSON file with ExecConfig settings. Explicit flags take precedence.")


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog=PROG, description="NF4 blockwise quantization and lookup-table dequantization.")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__} (NF4K format v{FORMAT_VERSION})")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Root log level (default WARNING). Logs go to stderr.",
    )
    parser.add_argument("--log-config", default=DEFAULT_LOG_CONFIG, help="JSON logging dictConfig file.")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = subparsers.add_parser("quantize", help="Quantize a raw little-endian float32 file into an NF4K container.")
    p.add_argument("input", help="Raw float32 input file, '-' for stdin.")
    p.add_argument("output", help="NF4K output file, '-' for stdout.")
    p.add_argument("--count", type=_count, help="Number of elements to read (default: inferred from the file size).")
    p.set_defaults(func=cmd_quantize)

    p = subparsers.add_parser("dequantize", help="Dequantize an NF4K container into a raw little-endian float array.")
    p.add_argument("input", help="NF4K input file, '-' for stdin.")
    p.add_argument("output", help="Raw output file, '-' for stdout.")
    p.add_argument("--decoder", choices=["tree", "lut"], default="lut", help="Nibble decoder (default lut).")
    _add_exec_flags(p)
    p.set_defaults(func=cmd_dequantize)

    p = subparsers.add_parser("verify", help="Check an NF4K container and compare both decoders on its payload.")
    p.add_argument("input", help="NF4K file, '-' for stdin.")
    _add_exec_flags(p, precision=False)
    p.set_defaults(func=cmd_verify)

    p = subparsers.add_parser("bench", help="Benchmark dequantization on a seeded standard-normal tensor.")
    p.add_argument("--n", type=_count, default=1 << 20, help="Number of elements (default 1048576).")
    p.add_argument("--decoder", choices=["tree", "lut", "both"], default="both", help="Decoder(s) to benchmark (default both).")
    p.add_argument("--passes", type=_positive_int, default=3, help="Measured passes (default 3).")
    p.add_argument("--warmup", type=int, default=1, help="Untimed warmup passes (default 1).")
    p.add_argument("--seed", type=int, default=0, help="Seed of the input generator (default 0).")
    p.add_argument("--csv", help="Append one row per run to this CSV file.")
    p.add_argument("--plot", help="Save a latency/throughput bar chart (needs matplotlib).")
    p.add_argument("--json", help="Save the full reports as JSON.")
    p.add_argument("--progress", action="store_true", help="Show pass progress bars on stderr.")
    _add_exec_flags(p)
    p.set_defaults(func=cmd_bench)

    p = subparsers.add_parser("codebook", help="Codebook utilities.")
    p.add_argument("action", choices=["dump"], help="'dump' prints the 16 code values, index-prefixed.")
    p.set_defaults(func=cmd_codebook)

    p = subparsers.add_parser("model", help="Print the analytic cost model.")
    p.add_argument("--f", type=float, default=0.295, help="Share of end-to-end latency spent in dequantization (default 0.295).")
    p.add_argument("--s", type=float, default=2.19, help="Kernel-level speedup (default 2.19).")
    p.add_argument("--lanes", type=int, default=64, help="Lanes (threads) per block (default 64).")
    p.add_argument("--lut-bytes", type=int, default=64, help="Code table size in bytes (default 64).")
    p.add_argument("--elems-per-lane", type=int, default=8, help="Elements per lane (default 8).")
    p.add_argument("--global-cycles", type=float, default=290, help="Global memory access latency (default 290).")
    p.add_argument("--shared-read-cycles", type=float, default=23, help="Shared memory read latency (default 23).")
    p.add_argument("--shared-write-cycles", type=float, default=19, help="Shared memory write latency (default 19).")
    p.add_argument("--baseline-instrs", type=int, default=7, help="Index instructions per weight, tree decoder (default 7).")
    p.add_argument("--optimized-instrs", type=int, default=2, help="Index instructions per weight, direct LUT (default 2).")
    p.add_argument("--sweep", action="store_true", help="Project the end-to-end speedup over the measured batch-size profile.")
    p.add_argument("--params", type=_count, help="Print the fp16 vs NF4 memory footprint of this many parameters.")
    p.set_defaults(func=cmd_model)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help, --version
        return int(e.code or 0)

    try:
        LogConfigLoader.setup_logging_config(args.log_config, level=args.log_level)
        logger.debug(f"nf4lut {__version__}: {args.command}")
        return args.func(args)
    except NF4Error as e:
        print(f"{PROG}: {e}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, RuntimeError) as e:
        print(f"{PROG}: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"{PROG}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
