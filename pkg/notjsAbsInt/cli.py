"""Command-line interface: ``notjs analyze|run|check|fuzz|bench``."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .client import format_json, format_text, report_errors
from .concrete import run
from .engine import AnalysisLimits, LimitExceeded, analyze, dump_partition, soundness_check
from .generate import generate_program
from .ir import Decl, ParseError, parse_program, pretty, validate
from .sensitivity import ParameterError, parse_sensitivity

logger = logging.getLogger(__name__)

CORPUS_DIR = Path(__file__).parent / "corpus"
BENCH_SENSITIVITIES = ("fs", "stack:1.0", "stack:2.1", "stack:5.4", "acyclic:2",
                       "obj:1.0", "sig:1.0", "mixed:1.0")
FUZZ_SENSITIVITIES = ("fs", "stack:1.0", "stack:2.1", "stack:5.4", "obj:1.0", "sig:1.0",
                      "mixed:1.0")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INCOMPLETE = 3


class UsageError(Exception):
    pass


def load_program(path) -> Decl:
    """Parse and validate a ``.njs`` file; problems become :class:`UsageError`."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from None
    try:
        program = parse_program(text)
    except ParseError as err:
        raise UsageError(f"{path}:{err.line}:{err.column}: {err}") from None
    diagnostics = validate(program)
    if diagnostics:
        d = diagnostics[0]
        raise UsageError(f"{path}: node {d.nid}: {d.message}")
    return program


def load_corpus(directory: Path = CORPUS_DIR) -> List[Tuple[str, Decl]]:
    """Bundled benchmarks as (name, program) pairs sorted by name."""
    return [(p.stem, load_program(p)) for p in sorted(Path(directory).glob("*.njs"))]


def _sensitivities(text: str) -> List[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    for name in names:
        parse_sensitivity(name)
    return names


def _seed_range(text: str) -> range:
    try:
        lo, _, hi = text.partition("..")
        return range(int(lo), int(hi) + 1) if hi else range(int(lo), int(lo) + 1)
    except ValueError:
        raise UsageError(f"bad seed range {text!r}, expected A..B") from None


def _limits(args) -> AnalysisLimits:
    if args.max_iterations <= 0 or (args.timeout is not None and args.timeout <= 0):
        raise UsageError("limits must be positive")
    return AnalysisLimits(max_iterations=args.max_iterations, wall_clock=args.timeout,
                          worklist=getattr(args, "worklist", "fifo"))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    program = load_program(args.file)
    strategy = parse_sensitivity(args.sensitivity)
    try:
        result = analyze(program, strategy, _limits(args))
    except LimitExceeded as err:
        print(f"analysis incomplete: {err}")
        return EXIT_INCOMPLETE
    if args.dump:
        with open(args.dump, "w") as fp:
            n = dump_partition(result, fp)
        logger.info("wrote %d partition records to %s", n, args.dump)
    report = report_errors(program, result)
    name = Path(args.file).name
    if args.format == "json":
        print(format_json(report, name, result, timing=not args.no_timing))
    else:
        print(format_text(report, name, result))
    if args.fail_on_errors and report.entries:
        return EXIT_FAILED
    return EXIT_OK


def cmd_run(args) -> int:
    program = load_program(args.file)
    if args.fuel <= 0:
        raise UsageError("fuel must be positive")
    outcome = run(program, fuel=args.fuel)
    for line in outcome.output:
        print(line)
    print(outcome.describe())
    return EXIT_OK


def cmd_check(args) -> int:
    program = load_program(args.file)
    strategy = parse_sensitivity(args.sensitivity)
    if args.fuel <= 0:
        raise UsageError("fuel must be positive")
    try:
        report = soundness_check(program, strategy, args.fuel, _limits(args),
                                 minimize=args.minimize)
    except LimitExceeded as err:
        print(f"analysis incomplete: {err}")
        return EXIT_INCOMPLETE
    print(report.describe())
    if report.witness is not None:
        print(pretty(report.witness))
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_fuzz(args) -> int:
    seeds = _seed_range(args.seeds)
    names = _sensitivities(args.sensitivity_set)
    limits = _limits(args)
    failures = incomplete = 0
    for seed in seeds:
        program = generate_program(seed, args.size)
        for name in names:
            try:
                report = soundness_check(program, name, args.fuel, limits)
            except LimitExceeded:
                incomplete += 1
                continue
            if not report.ok:
                failures += 1
                print(f"seed {seed}: {report.describe()}")
                if args.save_failures:
                    out = Path(args.save_failures)
                    out.mkdir(parents=True, exist_ok=True)
                    (out / f"seed{seed}.njs").write_text(pretty(program) + "\n")
        if seed % 50 == 0:
            logger.info("fuzzed through seed %d, %d failures", seed, failures)
    print(f"{len(seeds)} programs x {len(names)} sensitivities: "
          f"{failures} violations, {incomplete} incomplete")
    return EXIT_FAILED if failures else EXIT_OK


def _bench_cell(program: Decl, name: str, trials: int,
                limits: AnalysisLimits) -> Tuple[float, float, int]:
    """(errors, median seconds, partitions) of one configuration; NaNs on timeout."""
    times = []
    for _ in range(trials + 1):
        try:
            result = analyze(program, name, limits)
        except LimitExceeded:
            return np.nan, np.nan, 0
        times.append(result.stats.millis / 1000.0)
    errors = report_errors(program, result).counts["total"]
    # the first run warms caches and is discarded
    return float(errors), float(np.median(times[1:])), result.stats.partitions


def cmd_bench(args) -> int:
    names = _sensitivities(args.sensitivities)
    if args.trials < 1:
        raise UsageError("trials must be at least 1")
    limits = _limits(args)
    corpus = load_corpus(Path(args.corpus)) if args.corpus else load_corpus()
    if not corpus:
        raise UsageError("no .njs programs found")
    errors = np.full((len(corpus), len(names)), np.nan)
    times = np.full_like(errors, np.nan)
    header = f"{'program':<24}" + "".join(f"{n:>16}" for n in names)
    print(header)
    for i, (pname, program) in enumerate(corpus):
        cells = []
        for j, name in enumerate(names):
            errors[i, j], times[i, j], partitions = _bench_cell(program, name, args.trials, limits)
            if np.isnan(errors[i, j]):
                cells.append(f"{'timeout':>16}")
            else:
                cell = f"{int(errors[i, j])}e/{partitions}p/{times[i, j]:.2f}s"
                cells.append(f"{cell:>16}")
        print(f"{pname:<24}" + "".join(cells))
    if args.plot or args.perf_plot:
        if "fs" not in names:
            raise UsageError("plots are relative to fs, include it in --sensitivities")
        from .vis_utils import (error_reduction, plot_performance_heatmap,
                                plot_precision_heatmap, relative_cost)
        base = names.index("fs")
        programs = [pname for pname, _ in corpus]
        if args.plot:
            plot_precision_heatmap(error_reduction(errors, errors[:, base]), programs, names,
                                   output_filename=args.plot)
        if args.perf_plot:
            plot_performance_heatmap(relative_cost(times, times[:, base]), programs, names,
                                     output_filename=args.perf_plot)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _add_limits(p: argparse.ArgumentParser):
    p.add_argument("--max-iterations", type=int, default=AnalysisLimits.max_iterations,
                   help="worklist iterations before giving up (default %(default)s)")
    p.add_argument("--timeout", type=float, default=None,
                   help="seconds before the analysis gives up")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="notjs", description="notJS abstract interpreter")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for debug output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="report possible runtime errors")
    p.add_argument("file")
    p.add_argument("--sensitivity", "-s", default="fs")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--fail-on-errors", action="store_true",
                   help="exit 1 when the report is not empty")
    p.add_argument("--dump", metavar="FILE", help="write the partition as JSON lines")
    p.add_argument("--worklist", choices=("fifo", "lifo"), default="fifo")
    p.add_argument("--no-timing", action="store_true", help="report 0 ms, for reproducible output")
    _add_limits(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="run the concrete interpreter")
    p.add_argument("file")
    p.add_argument("--fuel", type=int, default=10_000)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="check the analysis against a concrete run")
    p.add_argument("file")
    p.add_argument("--sensitivity", "-s", default="fs")
    p.add_argument("--fuel", type=int, default=10_000)
    p.add_argument("--minimize", action="store_true", help="shrink a failing program")
    _add_limits(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fuzz", help="soundness checks on generated programs")
    p.add_argument("--seeds", default="0..99", help="inclusive seed range A..B")
    p.add_argument("--sensitivity-set", default=",".join(FUZZ_SENSITIVITIES))
    p.add_argument("--size", type=int, default=200, help="statement budget per program")
    p.add_argument("--fuel", type=int, default=10_000)
    p.add_argument("--save-failures", metavar="DIR")
    _add_limits(p)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("bench", help="precision and cost over the bundled corpus")
    p.add_argument("--sensitivities", default=",".join(BENCH_SENSITIVITIES))
    p.add_argument("--trials", type=int, default=1,
                   help="timed runs per configuration after one discarded warm-up run")
    p.add_argument("--corpus", metavar="DIR", help="directory of .njs programs")
    p.add_argument("--plot", metavar="FILE", help="precision heat map")
    p.add_argument("--perf-plot", metavar="FILE", help="relative time heat map")
    _add_limits(p)
    p.set_defaults(func=cmd_bench)
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code.

    Usage problems (bad arguments, unreadable or malformed programs, bad
    sensitivity strings) print a message to stderr and return 2.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ParameterError) as err:
        print(f"notjs {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(cli_main())
