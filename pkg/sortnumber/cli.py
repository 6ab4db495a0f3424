"""The ``sortnumber`` command line."""
import argparse
import contextlib
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Optional
from typing import Tuple

from . import analysis
from . import enumeration
from . import metadata
from . import sampling
from . import verify
from .enums import OutputFormat
from .main import format_trace
from .main import index_of
from .main import Permutation
from .main import sc231_trace
from .main import sort_number
from .main import SortNumberException

_LOGGER = logging.getLogger(__name__)

THREADS_ENV = "SORTNUMBER_THREADS"

# Lengths sampled when --n-list is not given.
DEFAULT_N_LIST = (15, 25, 50, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000)


def default_threads():
    """Threads from ``$SORTNUMBER_THREADS``, else one per CPU core."""
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            threads = int(value)
        except ValueError:
            _LOGGER.warning("Ignoring %s=%r, it is not an integer", THREADS_ENV, value)
        else:
            if threads >= 1:
                return threads
            _LOGGER.warning("Ignoring %s=%r, it must be at least 1", THREADS_ENV, value)
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs, validated once after parsing."""

    command: str
    permutation: Optional[str] = None
    n: Optional[int] = None
    n_list: Tuple[int, ...] = DEFAULT_N_LIST
    threads: int = 1
    seed: int = sampling.DEFAULT_SEED
    samples: int = sampling.DEFAULT_SAMPLES
    level: float = sampling.DEFAULT_LEVEL
    out: Optional[str] = None
    fmt: OutputFormat = OutputFormat.text
    checkpoint: Optional[str] = None
    leading: bool = False
    range: Optional[Tuple[str, str]] = None
    input: Optional[str] = None
    plot_data: Optional[str] = None
    suite: str = "all"
    max_n: int = verify.DEFAULT_MAX_N
    up_to: Optional[int] = None
    force: bool = False

    @classmethod
    def from_args(cls, args):
        fields = cls.__dataclass_fields__
        values = {key: value for key, value in vars(args).items() if key in fields}
        values["fmt"] = OutputFormat(args.format)
        if values.get("n_list") is not None:
            values["n_list"] = tuple(values["n_list"])
        else:
            values.pop("n_list", None)
        if values.get("range") is not None:
            values["range"] = tuple(values["range"])
        return cls(**values).validate()

    def validate(self):
        if self.threads < 1:
            raise ValueError("--threads must be at least 1, got %s." % self.threads)
        if self.samples < 2:
            raise ValueError("--samples must be at least 2, got %s." % self.samples)
        if not 0 < self.level < 1:
            raise ValueError("--level must be in (0, 1), got %s." % self.level)
        if self.seed < 0:
            raise ValueError("--seed must be non-negative, got %s." % self.seed)
        if self.checkpoint is not None and (self.range is not None or self.up_to is not None):
            raise ValueError("--checkpoint only applies to a single --n scan.")
        if self.range is not None and self.up_to is not None:
            raise ValueError("--range and --max-n cannot be combined.")
        if self.leading and (self.range is not None or self.up_to is not None):
            raise ValueError("--leading only applies to a single --n scan.")
        return self


def _n_list(text):
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated lengths, got %r" % text)


def _dump_json(payload):
    return json.dumps(payload, indent=2) + "\n"


def _trace(config):
    p = Permutation.parse(config.permutation)
    trace = sc231_trace(p)
    if config.fmt is OutputFormat.json:
        return _dump_json(
            {
                "input": p.as_text(compact=False),
                "output": trace.output.as_text(compact=False),
                "events": [
                    {"kind": e.kind.value, "value": e.value, "pre_popped": e.pre_popped}
                    for e in trace.events
                ],
            }
        )
    if config.fmt is OutputFormat.csv:
        rows = tuple((e.kind.value, e.value, e.pre_popped) for e in trace.events)
        return analysis.dumps_report(
            analysis.Report(("kind", "value", "pre_popped"), rows), OutputFormat.csv
        )
    return "%s\nSC_231(%s) = %s\n" % (format_trace(trace), p, trace.output)


def _sort_number(config):
    trajectory = sort_number(Permutation.parse(config.permutation))
    steps = [(str(step), index_of(step)) for step in trajectory.steps]
    if config.fmt is OutputFormat.json:
        return _dump_json(
            {
                "sort_number": trajectory.sort_number,
                "trajectory": [{"permutation": s, "index": i} for s, i in steps],
            }
        )
    if config.fmt is OutputFormat.csv:
        rows = tuple((t, s, i) for t, (s, i) in enumerate(steps))
        return analysis.dumps_report(
            analysis.Report(("step", "permutation", "index"), rows), OutputFormat.csv
        )
    lines = ["%s  %s  index %s" % (t, s, i) for t, (s, i) in enumerate(steps)]
    lines.append("sort-number %s" % trajectory.sort_number)
    return "\n".join(lines) + "\n"


def _exhaustive(config):
    if config.range is not None:
        start, end = (Permutation.parse(text) for text in config.range)
        histogram = enumeration.range_histogram(start, end)
        if config.fmt is OutputFormat.json:
            return _dump_json(
                {
                    "start": start.as_text(compact=False),
                    "end": end.as_text(compact=False),
                    "histogram": {str(k): c for k, c in histogram.items()},
                }
            )
        return analysis.dumps_report(analysis.histogram_report([histogram]), config.fmt)

    if config.up_to is not None:
        return _exhaustive_lengths(config)
    if config.n is None:
        raise ValueError("exhaustive needs --n, --max-n or --range.")
    result = enumeration.exhaustive_summary(config.n, config.threads, config.checkpoint)
    if config.fmt is OutputFormat.json:
        return _dump_json(result.as_dict())
    if config.fmt is OutputFormat.csv:
        text = analysis.dumps_report(analysis.histogram_report([result.histogram]), OutputFormat.csv)
        if config.leading:
            text += "\n" + analysis.dumps_report(
                analysis.leading_entry_report(result.leading), OutputFormat.csv
            )
        return text

    summary = result.summary
    text = analysis.dumps_report(analysis.length_summary_report([summary]), OutputFormat.text)
    text += "\n" + analysis.dumps_report(
        analysis.Report(("k", "count"), tuple(result.histogram.items())), OutputFormat.text
    )
    if config.leading:
        text += "\n" + analysis.dumps_report(
            analysis.leading_entry_report(result.leading), OutputFormat.text
        )
    return text


def _exhaustive_lengths(config):
    """Summaries and the histogram grid for every length from --n (or 1) to --max-n."""
    first = 1 if config.n is None else config.n
    if first > config.up_to:
        raise ValueError("--n %s is past --max-n %s." % (first, config.up_to))
    results = [
        enumeration.exhaustive_summary(n, config.threads)
        for n in range(first, config.up_to + 1)
    ]
    summaries = analysis.length_summary_report([result.summary for result in results])
    grid = analysis.histogram_grid_report([result.histogram for result in results])
    if config.fmt is OutputFormat.json:
        return _dump_json(
            {
                "summaries": json.loads(analysis.dumps_report(summaries, OutputFormat.json)),
                "grid": json.loads(analysis.dumps_report(grid, OutputFormat.json)),
            }
        )
    out = io.StringIO()
    analysis.emit_report(summaries, out, config.fmt)
    out.write("\n")
    analysis.emit_report(grid, out, config.fmt)
    return out.getvalue()


def _sample(config):
    results = sampling.sample_many(
        config.n_list, config.samples, config.seed, config.level, config.threads
    )
    if config.fmt is OutputFormat.text:
        return analysis.dumps_report(
            analysis.sample_stats_report([stats for stats, _ in results]), OutputFormat.text
        )
    return sampling.dumps_sample_report(results, config.fmt)


def _fit(config):
    if config.input is None:
        raise ValueError("fit needs --input with n,y rows.")
    fit = analysis.power_fit(analysis.read_points(config.input))
    if config.plot_data:
        with open(config.plot_data, "w", newline="") as f:
            f.write(analysis.plot_data(fit))
    if config.fmt is OutputFormat.json:
        return _dump_json(fit.as_dict())
    text = analysis.dumps_report(analysis.fit_report(fit), config.fmt)
    if config.fmt is OutputFormat.text:
        text += "loglog a: %r\nloglog b: %r\nresidual signs: %s\n" % (
            fit.loglog_a,
            fit.loglog_b,
            analysis.residual_signs(fit),
        )
    return text


def _verify(config):
    if config.suite == "all":
        reports = verify.run_all(config.max_n, config.force, config.threads)
    else:
        reports = [verify.run_suite(config.suite, config.max_n, config.force, config.threads)]
    if config.fmt is OutputFormat.json:
        text = _dump_json([report.as_dict() for report in reports])
    elif config.fmt is OutputFormat.csv:
        rows = tuple(
            (report.name, report.passed, report.checks, report.failure_count)
            for report in reports
        )
        text = analysis.dumps_report(
            analysis.Report(("suite", "passed", "checks", "failures"), rows), OutputFormat.csv
        )
    else:
        lines = []
        for report in reports:
            lines.append(
                "%s %s checks=%s failures=%s"
                % ("PASS" if report.passed else "FAIL", report.name, report.checks, report.failure_count)
            )
            for failure in report.failures:
                lines.append("  %s: expected %s, got %s" % failure)
        text = "\n".join(lines) + "\n"
    return text, all(report.passed for report in reports)


def _preimages(config):
    p = Permutation.parse(config.permutation)
    found = verify.preimages(p)
    if config.fmt is OutputFormat.json:
        return _dump_json(
            {"permutation": p.as_text(compact=False), "preimages": [q.as_text(compact=False) for q in found]}
        )
    if config.fmt is OutputFormat.csv:
        rows = tuple((q.as_text(compact=False),) for q in found)
        return analysis.dumps_report(analysis.Report(("preimage",), rows), OutputFormat.csv)
    return "".join("%s\n" % q for q in found) + "%s preimages\n" % len(found)


def _graph(config):
    graph = verify.image_graph(config.n)
    if config.fmt is OutputFormat.json:
        return _dump_json({p.as_text(compact=False): q.as_text(compact=False) for p, q in graph.items()})
    if config.fmt is OutputFormat.csv:
        rows = tuple((p.as_text(compact=False), q.as_text(compact=False)) for p, q in graph.items())
        return analysis.dumps_report(analysis.Report(("permutation", "image"), rows), OutputFormat.csv)
    return "".join("%s -> %s\n" % (p, q) for p, q in graph.items())


COMMANDS = {
    "trace": _trace,
    "sort-number": _sort_number,
    "exhaustive": _exhaustive,
    "sample": _sample,
    "fit": _fit,
    "verify": _verify,
    "preimages": _preimages,
    "graph": _graph,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sortnumber",
        description="Sort-numbers of the consecutive-231-avoiding stack sort.",
    )
    parser.add_argument("--version", action="version", version=metadata.version)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    common.add_argument(
        "--threads",
        type=int,
        default=default_threads(),
        help="worker processes (default: $%s or the number of cores)" % THREADS_ENV,
    )
    common.add_argument(
        "--format", choices=[f.value for f in OutputFormat], default=OutputFormat.text.value
    )
    common.add_argument("--out", help="write the result here instead of stdout")

    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    trace = commands.add_parser("trace", parents=[common], help="show one SC_231 pass step by step")
    trace.add_argument("permutation")

    number = commands.add_parser("sort-number", parents=[common], help="print the trajectory and sort-number")
    number.add_argument("permutation")

    exhaustive = commands.add_parser("exhaustive", parents=[common], help="scan every permutation of a length")
    exhaustive.add_argument("--n", type=int)
    exhaustive.add_argument("--checkpoint", help="resumable progress file")
    exhaustive.add_argument("--leading", action="store_true", help="add the leading-entry table")
    exhaustive.add_argument("--range", nargs=2, metavar=("START", "END"), help="scan a lexicographic range")
    exhaustive.add_argument(
        "--max-n", type=int, dest="up_to", help="summarise every length from --n (default 1) up to this one"
    )

    sample = commands.add_parser("sample", parents=[common], help="estimate average sort-numbers")
    sample.add_argument("--n-list", type=_n_list, dest="n_list")
    sample.add_argument("--samples", type=int, default=sampling.DEFAULT_SAMPLES)
    sample.add_argument("--seed", type=int, default=sampling.DEFAULT_SEED)
    sample.add_argument("--level", type=float, default=sampling.DEFAULT_LEVEL)

    fit = commands.add_parser("fit", parents=[common], help="fit y = a n^b to n,y points")
    fit.add_argument("--input", required=True)
    fit.add_argument("--plot-data", dest="plot_data", help="write n,predicted CSV here")

    check = commands.add_parser("verify", parents=[common], help="run property suites")
    check.add_argument("--suite", default="all", choices=["all"] + verify.suite_names())
    check.add_argument("--max-n", type=int, dest="max_n", default=verify.DEFAULT_MAX_N)
    check.add_argument("--force", action="store_true", help="allow the larger per-suite caps")

    pre = commands.add_parser("preimages", parents=[common], help="list all preimages of a permutation")
    pre.add_argument("permutation")

    graph = commands.add_parser("graph", parents=[common], help="print SC_231 on every permutation of a length")
    graph.add_argument("--n", type=int, required=True)
    return parser


def _configure_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", newline="") as f:
        yield f


def main(argv=None):
    """
    Run the command line and return its exit code.

    0 on success, 1 on a computational error or a failed suite, 2 on usage errors.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    try:
        config = RunConfig.from_args(args)
    except ValueError as ex:
        parser.error(str(ex))

    try:
        result = COMMANDS[config.command](config)
        passed = True
        if isinstance(result, tuple):
            result, passed = result
        with _output(config.out) as out:
            out.write(result)
    except (SortNumberException, ValueError, OSError) as ex:
        _LOGGER.debug("Command %s failed", config.command, exc_info=True)
        sys.stderr.write("error: %s\n" % ex)
        return 1
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
