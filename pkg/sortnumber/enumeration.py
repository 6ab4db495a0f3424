"""Exhaustive scans of S_n: sort-number histograms, maxima and averages."""
import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple
from typing import Tuple

import numpy as np

from . import kernels
from .main import _sort_number_count
from .main import CheckpointError
from .main import HistogramMismatch
from .main import InternalBoundExceeded
from .main import iteration_bound
from .main import Permutation
from .main import PermutationError
from .utils import format_values
from .utils import parse_values

_LOGGER = logging.getLogger(__name__)

# Columns of the printed histogram grid; histograms grow past it when needed.
DEFAULT_COLUMNS = 30

# Longest length with a supported (tested and timed) exhaustive scan.
SUPPORTED_MAX_N = 14

COMPLETE_MARKER = "complete"


@dataclass(frozen=True)
class SortHistogram:
    """
    Counts ``q(n, k)`` of length ``n`` permutations with sort-number ``k``.

    ``counts[k]`` is the count for sort-number ``k``. Trailing zero buckets are
    dropped on construction so that equal histograms compare equal whatever
    padding they were built with.
    """

    n: int
    counts: Tuple[int, ...] = ()

    def __post_init__(self):
        counts = [int(count) for count in self.counts]
        if any(count < 0 for count in counts):
            raise ValueError("Histogram counts cannot be negative: %s" % counts)
        while counts and counts[-1] == 0:
            counts.pop()
        object.__setattr__(self, "counts", tuple(counts))

    @classmethod
    def from_mapping(cls, n, mapping):
        """Build a histogram from a ``{k: count}`` mapping."""
        if not mapping:
            return cls(n)
        counts = [0] * (max(mapping) + 1)
        for k, count in mapping.items():
            counts[k] += count
        return cls(n, tuple(counts))

    @property
    def total(self):
        """The number of permutations counted."""
        return sum(self.counts)

    def __getitem__(self, k):
        return self.counts[k] if 0 <= k < len(self.counts) else 0

    def items(self):
        """Yield ``(k, count)`` for every non-empty bucket."""
        return ((k, count) for k, count in enumerate(self.counts) if count)

    def as_dict(self):
        return dict(self.items())

    def row(self, columns=DEFAULT_COLUMNS):
        """Return the counts padded to ``columns`` buckets (more if needed)."""
        return list(self.counts) + [0] * max(0, columns - len(self.counts))

    def merge(self, other):
        return histogram_merge(self, other)


def histogram_merge(a, b):
    """
    Add two histograms of the same length bucket by bucket.

    :raises HistogramMismatch: When the lengths differ.
    :rtype: sortnumber.SortHistogram
    """
    if a.n != b.n:
        raise HistogramMismatch(
            "Cannot merge histograms of lengths %s and %s" % (a.n, b.n)
        )
    size = max(len(a.counts), len(b.counts))
    return SortHistogram(a.n, tuple(a[k] + b[k] for k in range(size)))


@dataclass(frozen=True)
class LengthSummary:
    """Maximum, count at the maximum and average sort-number of a histogram."""

    n: int
    max_sort_number: int
    count_at_max: int
    sum_of_sort_numbers: int
    average: float
    total: int

    @classmethod
    def from_histogram(cls, histogram):
        """
        Summarise a histogram.

        The sum is accumulated exactly as an integer and divided once, so the
        average is the correctly rounded double of the exact mean.
        """
        total = histogram.total
        if total == 0:
            raise ValueError("Cannot summarise an empty histogram.")
        max_k = len(histogram.counts) - 1
        total_sum = sum(k * count for k, count in histogram.items())
        return cls(
            n=histogram.n,
            max_sort_number=max_k,
            count_at_max=histogram[max_k],
            sum_of_sort_numbers=total_sum,
            average=total_sum / total,
            total=total,
        )

    def as_dict(self):
        return {
            "n": self.n,
            "max": self.max_sort_number,
            "count_at_max": self.count_at_max,
            "sum": self.sum_of_sort_numbers,
            "average": self.average,
        }


@dataclass(frozen=True)
class LeadingEntrySummary:
    """Histograms of S_n split by leading entry; ``histograms[l - 1]`` is for entry ``l``."""

    n: int
    histograms: Tuple[SortHistogram, ...]

    @property
    def total(self):
        return sum(histogram.total for histogram in self.histograms)

    def histogram(self, leading):
        return self.histograms[leading - 1]

    def summaries(self):
        """Per leading entry summaries; the average is over that entry's permutations."""
        return [
            LengthSummary.from_histogram(histogram)
            for histogram in self.histograms
            if histogram.total
        ]


class ExhaustiveResult(NamedTuple):
    histogram: SortHistogram
    summary: LengthSummary
    leading: LeadingEntrySummary

    def as_dict(self):
        """The JSON summary of a scan."""
        result = self.summary.as_dict()
        result["histogram"] = {str(k): count for k, count in self.histogram.items()}
        result["leading"] = {
            str(leading): dict(
                LengthSummary.from_histogram(histogram).as_dict(),
                histogram={str(k): count for k, count in histogram.items()},
            )
            for leading, histogram in enumerate(self.leading.histograms, 1)
            if histogram.total
        }
        return result


class PrefixBlock(NamedTuple):
    """A lexicographic block of S_n sharing a fixed prefix."""

    start: Permutation
    count: int


def _next_perm_inplace(values):
    """Step a list to its lexicographic successor; return False on the last one."""
    i = len(values) - 2
    while i >= 0 and values[i] > values[i + 1]:
        i -= 1
    if i < 0:
        return False
    j = len(values) - 1
    while values[j] < values[i]:
        j -= 1
    values[i], values[j] = values[j], values[i]
    values[i + 1 :] = values[: i : -1]
    return True


def next_perm(p):
    """
    Return the lexicographic successor of ``p`` within S_n.

    The work done is proportional to the decreasing run at the end of ``p``.
    Moving on to the next length is left to the caller.

    :returns: The successor, or ``None`` when ``p`` is ``n...21``.
    :rtype: sortnumber.Permutation
    """
    values = list(p)
    if not _next_perm_inplace(values):
        return None
    return Permutation._trusted(values)


def iter_permutations(n):
    """Yield every permutation of length ``n`` in lexicographic order."""
    if n < 1:
        raise ValueError("Permutation length must be at least 1, got %s." % n)
    values = list(range(1, n + 1))
    while True:
        yield Permutation._trusted(values)
        if not _next_perm_inplace(values):
            return


def iter_all_lengths(max_n):
    """Yield ``1, 12, 21, 123, 132, ...`` through every length up to ``max_n``."""
    for n in range(1, max_n + 1):
        yield from iter_permutations(n)


def prefix_partition(n, depth):
    """
    Split S_n into lexicographic blocks sharing their first ``depth`` entries.

    :param int n: The permutation length.
    :param int depth: The prefix length, between 1 and ``min(n, 3)``.

    :raises ValueError: When ``depth`` is out of range.
    :returns: The blocks in lexicographic order, each holding ``(n - depth)!``
              permutations.
    :rtype: list
    """
    if not 1 <= depth <= min(n, 3):
        raise ValueError("Prefix depth must be in 1..%s, got %s." % (min(n, 3), depth))
    size = math.factorial(n - depth)
    blocks = []
    for prefix in itertools.permutations(range(1, n + 1), depth):
        rest = sorted(set(range(1, n + 1)).difference(prefix))
        blocks.append(PrefixBlock(Permutation._trusted(prefix + tuple(rest)), size))
    return blocks


def default_depth(n):
    """Prefix depth used to parallelise a scan of S_n."""
    return min(n, 2 if n >= 10 else 1)


def map_blocks(func, items, threads=1):
    """
    Apply ``func`` to every item and yield the results in item order.

    With more than one thread the calls run on a process pool; results are
    still yielded in the order of ``items``, so merges stay deterministic.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        for item in items:
            yield func(item)
        return
    _LOGGER.debug("Running %s blocks on %s workers", len(items), threads)
    with ProcessPoolExecutor(max_workers=threads) as executor:
        yield from executor.map(func, items)


def _scan_block(block):
    """Histogram counts of ``count`` permutations starting at ``start``."""
    start, count = block
    bound = iteration_bound(len(start))
    values = np.array(start, dtype=np.int64)
    counts = np.zeros(max(DEFAULT_COLUMNS, bound + 1), dtype=np.int64)
    if kernels.scan_block(values, count, bound, counts) < 0:
        raise InternalBoundExceeded(tuple(values.tolist()), bound)
    return counts.tolist()


def range_histogram(start, end):
    """
    Histogram of every permutation from ``start`` to ``end`` inclusive.

    :raises ValueError: When the lengths differ or ``end`` precedes ``start``.
    """
    if start.n != end.n:
        raise ValueError("Range ends have lengths %s and %s." % (start.n, end.n))
    if end < start:
        raise ValueError("Range end %s precedes its start %s." % (end, start))
    _LOGGER.info("Processing n=%s range %s", start.n, format_permutation_range(start, end))
    counts = {}
    values = list(start)
    stop = list(end)
    while True:
        k = _sort_number_count(values)
        counts[k] = counts.get(k, 0) + 1
        if values == stop or not _next_perm_inplace(values):
            break
    return SortHistogram.from_mapping(start.n, counts)


class Checkpoint(object):
    def __init__(self, n, next_start=None, leading_counts=None):
        """
        Progress of an exhaustive scan that can be stored and resumed.

        On disk the first line is ``n,<length>``, the second is the next
        unprocessed permutation in comma form (or ``complete``), and every
        further line is a partial histogram row ``leading,k,count``.

        :param int n: The permutation length being scanned.
        :param sortnumber.Permutation next_start: The first permutation not yet
                                                  scanned, ``None`` when done.
        :param dict leading_counts: ``{leading entry: {k: count}}``.
        """
        self.n = n
        self.next_start = next_start
        self.leading_counts = leading_counts or {}

    @property
    def complete(self):
        return self.next_start is None

    @property
    def total(self):
        """The number of permutations counted so far."""
        return sum(self.leading_total(leading) for leading in self.leading_counts)

    def leading_total(self, leading):
        return sum(self.leading_counts.get(leading, {}).values())

    def add(self, leading, counts):
        bucket = self.leading_counts.setdefault(leading, {})
        for k, count in enumerate(counts):
            if count:
                bucket[k] = bucket.get(k, 0) + count

    def check_against(self, done_blocks):
        """
        Check the stored counts add up to the blocks already scanned.

        :param done_blocks: The prefix blocks before ``next_start``.
        :raises CheckpointError: When any leading entry's total is off.
        """
        expected = {}
        for block in done_blocks:
            expected[block.start[0]] = expected.get(block.start[0], 0) + block.count
        for leading in set(expected) | set(self.leading_counts):
            found = self.leading_total(leading)
            if found != expected.get(leading, 0):
                raise CheckpointError(
                    "Checkpoint holds %s permutations with leading entry %s, expected %s."
                    % (found, leading, expected.get(leading, 0))
                )

    def dumps(self):
        lines = [
            "n,%s" % self.n,
            COMPLETE_MARKER
            if self.next_start is None
            else self.next_start.as_text(compact=False),
        ]
        for leading in sorted(self.leading_counts):
            for k, count in sorted(self.leading_counts[leading].items()):
                lines.append("%s,%s,%s" % (leading, k, count))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, n, text):
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if len(lines) < 2:
            raise CheckpointError("Checkpoint has no header.")
        key, _, length = lines[0].partition(",")
        if key != "n" or not length.isdigit():
            raise CheckpointError("Bad checkpoint header %r" % lines[0])
        if int(length) != n:
            raise CheckpointError("Checkpoint is for length %s, not %s." % (length, n))
        next_start = None
        if lines[1] != COMPLETE_MARKER:
            try:
                next_start = Permutation(parse_values(lines[1]))
            except (ValueError, PermutationError) as ex:
                raise CheckpointError("Bad checkpoint position %r" % lines[1]) from ex
            if next_start.n != n:
                raise CheckpointError(
                    "Checkpoint position %s is not of length %s." % (next_start, n)
                )
        checkpoint = cls(n, next_start)
        for line in lines[2:]:
            try:
                leading, k, count = (int(item) for item in line.split(","))
            except ValueError as ex:
                raise CheckpointError("Bad checkpoint row %r" % line) from ex
            if not 1 <= leading <= n:
                raise CheckpointError("Leading entry %s is outside 1..%s" % (leading, n))
            if k < 0 or count < 0:
                raise CheckpointError("Negative checkpoint row %r" % line)
            bucket = checkpoint.leading_counts.setdefault(leading, {})
            bucket[k] = bucket.get(k, 0) + count
        return checkpoint

    def save(self, path):
        temporary = "%s.tmp" % path
        try:
            with open(temporary, "w") as f:
                f.write(self.dumps())
            os.replace(temporary, path)
        except OSError as ex:
            raise CheckpointError("Could not write checkpoint %s" % path) from ex
        _LOGGER.debug("Checkpoint written to %s at %s", path, self.next_start)

    @classmethod
    def load(cls, n, path):
        try:
            with open(path) as f:
                return cls.loads(n, f.read())
        except OSError as ex:
            raise CheckpointError("Could not read checkpoint %s" % path) from ex


def exhaustive_summary(n, threads=1, checkpoint=None):
    """
    Compute the sort-number of every permutation of length ``n``.

    S_n is split into prefix blocks that are scanned independently and merged
    in lexicographic block order, so the result does not depend on
    ``threads``.

    :param int n: The permutation length (1..14 supported, more allowed).
    :param int threads: Worker processes to use.
    :param str checkpoint: Optional checkpoint file; an existing one is resumed
                           and it is rewritten after every finished block.

    :raises InternalBoundExceeded: Should any permutation need more passes than
                                   the proven bound allows.
    :returns: ``(histogram, summary, leading)``.
    :rtype: sortnumber.enumeration.ExhaustiveResult
    """
    if n < 1:
        raise ValueError("Permutation length must be at least 1, got %s." % n)
    if threads < 1:
        raise ValueError("Need at least one thread, got %s." % threads)
    if n > SUPPORTED_MAX_N:
        _LOGGER.warning(
            "Exhaustive scan of length %s visits %s permutations and may run for days.",
            n,
            math.factorial(n),
        )

    blocks = prefix_partition(n, default_depth(n))
    progress = Checkpoint(n)
    pending = blocks
    if checkpoint is not None and os.path.exists(checkpoint):
        progress = Checkpoint.load(n, checkpoint)
        _LOGGER.info("Resuming length %s from %s", n, progress.next_start or "the end")
        if progress.complete:
            pending = []
        else:
            pending = [block for block in blocks if block.start >= progress.next_start]
            if not pending or pending[0].start != progress.next_start:
                raise CheckpointError(
                    "Checkpoint position %s is not a block start" % progress.next_start
                )
        progress.check_against(blocks[: len(blocks) - len(pending)])

    _LOGGER.info("Processing n=%s (%s blocks, %s threads)", n, len(pending), threads)
    results = map_blocks(
        _scan_block, [(block.start.values, block.count) for block in pending], threads
    )
    for position, counts in enumerate(results):
        progress.add(pending[position].start[0], counts)
        if checkpoint is not None:
            following = position + 1
            progress.next_start = (
                pending[following].start if following < len(pending) else None
            )
            progress.save(checkpoint)
    progress.next_start = None

    leading = LeadingEntrySummary(
        n,
        tuple(
            SortHistogram.from_mapping(n, progress.leading_counts.get(entry, {}))
            for entry in range(1, n + 1)
        ),
    )
    histogram = SortHistogram(n)
    for entry_histogram in leading.histograms:
        histogram = histogram_merge(histogram, entry_histogram)
    summary = LengthSummary.from_histogram(histogram)
    _LOGGER.info(
        "Length %s: max %s (%s permutations), average %r",
        n,
        summary.max_sort_number,
        summary.count_at_max,
        summary.average,
    )
    return ExhaustiveResult(histogram, summary, leading)


def histogram_grid(histograms, columns=DEFAULT_COLUMNS):
    """
    Lay histograms out as a grid: one row per length, one column per sort-number.

    :returns: Rows of counts, all padded to the same width.
    """
    width = max([columns] + [len(histogram.counts) for histogram in histograms])
    return [histogram.row(width) for histogram in histograms]


def unimodality_witnesses(histogram):
    """
    Return the strict dips ``(k - 1, k, k + 1)`` of a histogram.

    Any dip shows the distribution of sort-numbers is not unimodal.

    :returns: A list of ``(k, (q(n, k-1), q(n, k), q(n, k+1)))``.
    """
    return [
        (k, (histogram[k - 1], histogram[k], histogram[k + 1]))
        for k in range(1, len(histogram.counts) - 1)
        if histogram[k - 1] > histogram[k] < histogram[k + 1]
    ]


def is_unimodal(histogram):
    """Whether the counts weakly rise and then weakly fall."""
    counts = histogram.counts
    peak = counts.index(max(counts)) if counts else 0
    rising = all(counts[k] <= counts[k + 1] for k in range(peak))
    falling = all(counts[k] >= counts[k + 1] for k in range(peak, len(counts) - 1))
    return rising and falling


def format_permutation_range(start, end):
    """Text form of a scanned range, used in log lines."""
    return "%s..%s" % (format_values(start, compact=False), format_values(end, compact=False))
