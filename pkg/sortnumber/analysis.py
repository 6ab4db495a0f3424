"""Power-law trend fitting of average sort-numbers and tabular reports."""
import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import NamedTuple
from typing import Optional
from typing import Tuple

import numpy as np
from scipy import optimize

from .enumeration import DEFAULT_COLUMNS
from .enumeration import histogram_grid
from .enumeration import is_unimodal
from .enumeration import LengthSummary
from .enums import OutputFormat
from .main import FitError
from .main import SortNumberException

_LOGGER = logging.getLogger(__name__)

# Stop when the relative parameter step falls below this.
STEP_TOLERANCE = 1e-10
MAX_ITERATIONS = 200


class FitPoint(NamedTuple):
    n: float
    observed: float
    predicted: float
    residual: float


@dataclass(frozen=True)
class FitResult:
    """
    A fitted ``y = a * n**b`` curve.

    ``r`` is ``sqrt(max(0, 1 - SSres / SStot))``, the coefficient nonlinear
    regression tools report; it is ``None`` when every observation is equal.
    The log-log least squares solution the fit started from is kept as
    ``loglog_a`` and ``loglog_b``.
    """

    a: float
    b: float
    r: Optional[float]
    residuals: Tuple[FitPoint, ...]
    loglog_a: float
    loglog_b: float
    converged: bool = True
    iterations: int = 0

    def predict(self, n):
        return self.a * n ** self.b

    @property
    def ss_res(self):
        return sum(point.residual ** 2 for point in self.residuals)

    def as_dict(self):
        return {
            "a": self.a,
            "b": self.b,
            "r": self.r,
            "loglog": {"a": self.loglog_a, "b": self.loglog_b},
            "converged": self.converged,
            "points": [point._asdict() for point in self.residuals],
        }


def _check_points(points, minimum):
    points = [(float(n), float(y)) for n, y in points]
    if len(points) < minimum:
        raise FitError("A power fit needs at least %s points, got %s." % (minimum, len(points)))
    for n, y in points:
        if not (n > 0 and y > 0):
            raise FitError("Power fits need positive data, got (%s, %s)." % (n, y))
    return points


def _ss_res(x, y, a, b):
    return float(np.sum((y - a * np.power(x, b)) ** 2))


def loglog_fit(points):
    """
    Fit ``log y = log a + b log n`` by ordinary least squares.

    :returns: ``(a, b)``.
    """
    points = _check_points(points, 2)
    x = np.log([n for n, _ in points])
    y = np.log([value for _, value in points])
    b, log_a = np.polyfit(x, y, 1)
    return float(math.exp(log_a)), float(b)


def power_fit(points):
    """
    Least squares fit of ``y = a * n**b`` in the original (not log) scale.

    The search is a damped Gauss-Newton (Levenberg-Marquardt) iteration
    started from the log-log solution. It stops once the relative step falls
    below 1e-10 or after 200 evaluations; if it never improves on its start,
    the start is returned.

    :param points: ``(n, y)`` pairs, at least three, all positive.

    :raises FitError: On too few or non-positive points.
    :rtype: sortnumber.FitResult
    """
    points = _check_points(points, 3)
    x = np.array([n for n, _ in points])
    y = np.array([value for _, value in points])
    a0, b0 = loglog_fit(points)

    def residuals(params):
        a, b = params
        return a * np.power(x, b) - y

    def jacobian(params):
        a, b = params
        powers = np.power(x, b)
        return np.column_stack([powers, a * powers * np.log(x)])

    result = optimize.least_squares(
        residuals,
        [a0, b0],
        jac=jacobian,
        method="lm",
        xtol=STEP_TOLERANCE,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=MAX_ITERATIONS,
    )
    a, b = (float(value) for value in result.x)
    converged = result.status > 0
    if not converged:
        _LOGGER.warning("Power fit stopped after %s evaluations without converging", result.nfev)
    if not (np.isfinite(a) and np.isfinite(b)) or _ss_res(x, y, a, b) > _ss_res(x, y, a0, b0):
        _LOGGER.debug("Keeping the log-log start (%s, %s)", a0, b0)
        a, b = a0, b0

    fitted = [
        FitPoint(n, value, a * n ** b, value - a * n ** b) for n, value in points
    ]
    fit = FitResult(
        a=a,
        b=b,
        r=None,
        residuals=tuple(fitted),
        loglog_a=a0,
        loglog_b=b0,
        converged=converged,
        iterations=int(result.nfev),
    )
    fit = replace(fit, r=goodness(points, fit))
    _LOGGER.debug("Power fit a=%r b=%r r=%r", fit.a, fit.b, fit.r)
    return fit


def goodness(points, fit):
    """
    Return ``sqrt(max(0, 1 - SSres / SStot))`` of a curve on the given points.

    :param points: ``(n, y)`` pairs.
    :param fit: A :py:class:`FitResult <sortnumber.FitResult>` or an ``(a, b)`` pair.
    :returns: The coefficient, or ``None`` when all ``y`` are equal.
    """
    a, b = (fit.a, fit.b) if isinstance(fit, FitResult) else fit
    x = np.array([float(n) for n, _ in points])
    y = np.array([float(value) for _, value in points])
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return None
    return math.sqrt(max(0.0, 1 - _ss_res(x, y, a, b) / ss_tot))


def residual_signs(fit):
    """The sign pattern of the residuals, as a string of ``+``, ``-`` and ``0``."""
    return "".join(
        "+" if point.residual > 0 else "-" if point.residual < 0 else "0"
        for point in fit.residuals
    )


@dataclass(frozen=True)
class Report:
    """
    A table ready to be written as CSV, JSON or aligned text.

    In JSON the rows become a list of objects under ``rows_key``, next to the
    ``extra`` top-level values.
    """

    columns: Tuple[str, ...]
    rows: Tuple[tuple, ...] = ()
    extra: dict = field(default_factory=dict)
    rows_key: str = "rows"


def length_summary_report(summaries):
    """Report of exhaustive summaries, one row per length."""
    return Report(
        ("n", "max", "count_at_max", "sum", "average"),
        tuple(
            (s.n, s.max_sort_number, s.count_at_max, s.sum_of_sort_numbers, s.average)
            for s in summaries
        ),
    )


def histogram_report(histograms):
    """Report with one ``n,k,count`` row per non-empty bucket."""
    return Report(
        ("n", "k", "count"),
        tuple(
            (histogram.n, k, count)
            for histogram in histograms
            for k, count in histogram.items()
        ),
    )



def histogram_grid_report(histograms, columns=DEFAULT_COLUMNS):
    """
    Report with one row per length and one column per sort-number.

    The last column says whether that length's counts are unimodal.
    """
    grid = histogram_grid(histograms, columns)
    width = len(grid[0]) if grid else columns
    return Report(
        ("n",) + tuple("k%s" % k for k in range(width)) + ("unimodal",),
        tuple(
            (histogram.n,) + tuple(row) + (is_unimodal(histogram),)
            for histogram, row in zip(histograms, grid)
        ),
    )

def leading_entry_report(leading):
    """Report with the maximum, its count and the average per leading entry."""
    return Report(
        ("leading", "max", "count_at_max", "average"),
        tuple(
            (entry, s.max_sort_number, s.count_at_max, s.average)
            for entry, s in (
                (entry, LengthSummary.from_histogram(histogram))
                for entry, histogram in enumerate(leading.histograms, 1)
                if histogram.total
            )
        ),
    )


def sample_stats_report(stats_list):
    return Report(
        ("n", "samples", "mean", "sd", "ci_low", "ci_high", "level", "seed"),
        tuple(
            (s.n, s.m, s.mean, s.sd, s.ci_low, s.ci_high, s.level, s.seed)
            for s in stats_list
        ),
    )


def fit_report(fit):
    return Report(
        ("n", "observed", "predicted", "residual"),
        tuple(tuple(point) for point in fit.residuals),
        extra={"a": fit.a, "b": fit.b, "r": fit.r},
        rows_key="points",
    )


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def dumps_report(report, fmt=OutputFormat.csv):
    """Serialise a report to a string in the given format."""
    fmt = OutputFormat(fmt)
    if fmt is OutputFormat.json:
        payload = dict(report.extra)
        payload["columns"] = list(report.columns)
        payload[report.rows_key] = [dict(zip(report.columns, row)) for row in report.rows]
        return json.dumps(payload, indent=2) + "\n"
    if fmt is OutputFormat.csv:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([_cell(value) for value in row])
        return buffer.getvalue()

    lines = ["%s: %s" % (key, _cell(value)) for key, value in report.extra.items()]
    table = [list(report.columns)] + [[_cell(value) for value in row] for row in report.rows]
    widths = [max(len(row[column]) for row in table) for column in range(len(report.columns))]
    lines.extend(
        "  ".join(cell.rjust(width) for cell, width in zip(row, widths)) for row in table
    )
    return "\n".join(lines) + "\n"


def emit_report(report, out, fmt=OutputFormat.csv):
    """
    Write a report to a path or an open text stream.

    :raises SortNumberException: When the file cannot be written.
    """
    text = dumps_report(report, fmt)
    if hasattr(out, "write"):
        out.write(text)
        return
    try:
        with open(out, "w", newline="") as f:
            f.write(text)
    except OSError as ex:
        raise SortNumberException("Could not write report %s" % out) from ex


def _parse_cell(text):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_report(text, fmt=OutputFormat.csv, rows_key="rows"):
    """Read a CSV or JSON report produced by :py:func:`dumps_report` back."""
    fmt = OutputFormat(fmt)
    if fmt is OutputFormat.json:
        payload = json.loads(text)
        rows = payload.pop(rows_key)
        columns = tuple(payload.pop("columns", None) or (rows[0] if rows else ()))
        return Report(
            columns,
            tuple(tuple(row[column] for column in columns) for row in rows),
            extra=payload,
            rows_key=rows_key,
        )
    if fmt is not OutputFormat.csv:
        raise ValueError("Only csv and json reports can be parsed.")
    reader = csv.reader(io.StringIO(text))
    columns = tuple(next(reader, ()))
    return Report(
        columns,
        tuple(tuple(_parse_cell(cell) for cell in row) for row in reader if row),
        rows_key=rows_key,
    )


def read_points(path):
    """
    Read ``(n, y)`` pairs from a two-column CSV file; a header row is skipped.

    :raises SortNumberException: When the file cannot be read or parsed.
    """
    try:
        with open(path, newline="") as f:
            rows = [row for row in csv.reader(f) if row and row[0].strip()]
    except OSError as ex:
        raise SortNumberException("Could not read points from %s" % path) from ex
    points = []
    for number, row in enumerate(rows):
        try:
            points.append((float(row[0]), float(row[1])))
        except (ValueError, IndexError):
            if number == 0:
                continue
            raise SortNumberException("Bad point on line %s: %r" % (number + 1, row)) from None
    return points


def plot_data(fit):
    """Two-column ``n,predicted`` CSV for any external plotting tool."""
    return dumps_report(
        Report(("n", "predicted"), tuple((point.n, point.predicted) for point in fit.residuals))
    )
