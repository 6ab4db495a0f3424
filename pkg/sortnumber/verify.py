"""
Machine-checked property suites for SC_231.

Each suite checks one proven statement about SC_231 (bounds on the maximum
sort-number, monovariants, counting identities) exhaustively over S_n or
constructively over a family of permutations, and reports exact check counts
and a reproducer for every failure.
"""
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass
from dataclasses import field
from typing import List
from typing import NamedTuple

from .enumeration import _next_perm_inplace
from .enumeration import exhaustive_summary
from .enumeration import iter_permutations
from .enumeration import map_blocks
from .enumeration import prefix_partition
from .enumeration import unimodality_witnesses
from .enums import LiftOrder
from .main import _index_of
from .main import _is_periodic
from .main import _sc231
from .main import _sort_number_count
from .main import contract
from .main import InternalBoundExceeded
from .main import lift
from .main import Permutation
from .main import sort_number
from .main import SuiteLimitExceeded
from .main import UnknownSuite
from .main import v_permutation
from .utils import format_values
from .utils import round_half_up

_LOGGER = logging.getLogger(__name__)

# Longest length brute-force preimage searches accept.
PREIMAGE_MAX_N = 9

# Failures kept per suite; the count of all failures is still exact.
MAX_RECORDED_FAILURES = 50

DEFAULT_MAX_N = 8


class SuiteFailure(NamedTuple):
    input: str
    expected: str
    actual: str


@dataclass
class SuiteReport:
    name: str
    parameters: dict
    checks: int = 0
    failures: List[SuiteFailure] = field(default_factory=list)
    failure_count: int = 0
    elapsed: float = 0.0
    observations: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.failure_count == 0 and self.checks > 0

    def record(self, subject, expected, actual):
        self.failure_count += 1
        if len(self.failures) < MAX_RECORDED_FAILURES:
            self.failures.append(SuiteFailure(str(subject), str(expected), str(actual)))

    def absorb(self, checks, failures):
        """Merge the result of a block of checks."""
        self.checks += checks
        for failure in failures:
            self.record(*failure)

    def as_dict(self, timing=False):
        result = {
            "suite": self.name,
            "parameters": self.parameters,
            "passed": self.passed,
            "checks": self.checks,
            "failure_count": self.failure_count,
            "failures": [failure._asdict() for failure in self.failures],
            "observations": self.observations,
        }
        if timing:
            result["elapsed"] = self.elapsed
        return result


def preimages(p):
    """
    Return every permutation that SC_231 maps to ``p``, in lexicographic order.

    This is a brute-force search over S_n.

    :raises SuiteLimitExceeded: For lengths above nine.
    """
    p = p if isinstance(p, Permutation) else Permutation(p)
    if p.n > PREIMAGE_MAX_N:
        raise SuiteLimitExceeded(
            "Brute-force preimages stop at length %s, got %s." % (PREIMAGE_MAX_N, p.n)
        )
    target = p.values
    return [q for q in iter_permutations(p.n) if _sc231(q.values) == target]


def image_graph(n):
    """The functional graph ``{p: SC_231(p)}`` of S_n, in lexicographic order of ``p``."""
    return {p: Permutation._trusted(_sc231(p.values)) for p in iter_permutations(n)}


def preimage_counts(n):
    """``{p: |SC_231^-1(p)|}`` for every ``p`` in S_n, zeros included."""
    counts = Counter(_sc231(p.values) for p in iter_permutations(n))
    return {p: counts.get(p.values, 0) for p in iter_permutations(n)}


def _text(values):
    return format_values(values, compact=False)


# Per-permutation checks. Each returns None when the permutation passes,
# SKIP when the statement does not apply to it, or (expected, actual).
SKIP = "skip"


def _check_upper_bound(values):
    n = len(values)
    bound = (n + 1) * (n - 2) // 2
    try:
        k = _sort_number_count(values)
    except InternalBoundExceeded:
        return ("<= %s" % bound, "no periodic point within the safety bound")
    return None if k <= bound else ("<= %s" % bound, k)


def _gap(values):
    return abs(values.index(1) - values.index(2)) - 1


def _check_gap(values):
    if len(values) < 2:
        return SKIP
    gap = _gap(values)
    following = _sc231(values)
    if _gap(following) > gap:
        return ("gap <= %s after one pass" % gap, _gap(following))
    values, gap = following, _gap(following)
    for step in range(1, len(values) + 1):
        if gap == 0:
            return None
        following = _sc231(values)
        next_gap = _gap(following)
        if next_gap >= gap:
            return ("gap < %s after pass %s" % (gap, step + 1), next_gap)
        values, gap = following, next_gap
    return ("gap 0 within n passes", gap)


def _check_index_escape(values):
    n = len(values)
    if _index_of(values) != 1:
        return SKIP
    for _ in range(n - 1):
        values = _sc231(values)
    index = _index_of(values)
    return None if index > 1 else ("index > 1 after %s passes" % (n - 1), index)


def _check_index_monovariant(values):
    before = _index_of(values)
    after = _index_of(_sc231(values))
    return None if after >= before else (">= %s" % before, after)


def _check_leading_not_two(values):
    n = len(values)
    if values[0] not in (1, n):
        return SKIP
    k = _sort_number_count(values)
    return None if k != 2 else ("sort-number != 2", k)


def _check_valley_reversal(values):
    if not _is_periodic(values):
        return SKIP
    image = _sc231(values)
    return None if image == tuple(values[::-1]) else (_text(values[::-1]), _text(image))


def _check_periodic_index(values):
    periodic = _is_periodic(values)
    full_index = _index_of(values) == len(values)
    return None if periodic == full_index else (periodic, full_index)


def _check_lift(values):
    p = Permutation._trusted(values)
    k = _sort_number_count(values)
    for order in LiftOrder:
        lifted = lift(p, order)
        if _index_of(lifted.values) < 2:
            return ("index >= 2 for %s lift" % order.value, _text(lifted))
        if contract(lifted) != p:
            return ("contract of %s lift" % order.value, _text(contract(lifted)))
        lifted_k = _sort_number_count(lifted.values)
        if lifted_k != k:
            return ("sort-number %s for %s lift" % (k, order.value), lifted_k)
    return None


_PERMUTATION_CHECKS = {
    "thm43-upper": _check_upper_bound,
    "lemma431-gap": _check_gap,
    "cor432-index": _check_index_escape,
    "index-monovariant": _check_index_monovariant,
    "claim47-leading": _check_leading_not_two,
    "valley-reversal": _check_valley_reversal,
    "periodic-index": _check_periodic_index,
    "lift-contract": _check_lift,
}


def _check_block(task):
    """Run one per-permutation check over a prefix block: ``(checks, failures)``."""
    name, start, count = task
    check = _PERMUTATION_CHECKS[name]
    values = list(start)
    checks = 0
    failures = []
    for _ in range(count):
        outcome = check(tuple(values))
        if outcome is not SKIP:
            checks += 1
            if outcome is not None:
                failures.append((_text(values), outcome[0], outcome[1]))
        if not _next_perm_inplace(values):
            break
    return checks, failures


def _blocks(n):
    return prefix_partition(n, 1 if n < 10 else 2)


def _exhaustive(report, name, lengths, threads):
    for n in lengths:
        _LOGGER.debug("Suite %s: processing n=%s", name, n)
        tasks = [(name, block.start.values, block.count) for block in _blocks(n)]
        for checks, failures in map_blocks(_check_block, tasks, threads):
            report.absorb(checks, failures)


def _periodic_by_leading_block(task):
    start, count = task
    values = list(start)
    periodic = 0
    for _ in range(count):
        if _is_periodic(values):
            periodic += 1
        if not _next_perm_inplace(values):
            break
    return start[0], periodic


def _periodic_by_leading(n, threads):
    counts = Counter()
    tasks = [(block.start.values, block.count) for block in prefix_partition(n, 1)]
    for leading, periodic in map_blocks(_periodic_by_leading_block, tasks, threads):
        counts[leading] += periodic
    return counts


def _suite_lower_bound(report, max_n, threads):
    for n in range(3, max_n + 1):
        v = v_permutation(n)
        reversed_v = Permutation._trusted(v.values[::-1])
        report.checks += 1
        if _sc231(reversed_v.values) != v.values:
            report.record(reversed_v, v, _text(_sc231(reversed_v.values)))
            continue
        expected = (n,) + v_permutation(n - 1).values
        if _sc231(v.values) != expected:
            report.record(v, _text(expected), _text(_sc231(v.values)))
            continue
        k = sort_number(reversed_v).sort_number
        report.observations[str(n)] = k
        if k < n - 1:
            report.record(reversed_v, ">= %s" % (n - 1), k)


def _suite_periodic_by_leading(report, max_n, threads):
    for n in range(1, max_n + 1):
        counts = _periodic_by_leading(n, threads)
        observed = [counts[k] for k in range(1, n + 1)]
        report.observations[str(n)] = observed
        for k, count in enumerate(observed, 1):
            report.checks += 1
            expected = round_half_up(2.0 ** (k - 2))
            if count != expected:
                report.record("n=%s leading %s" % (n, k), expected, count)


def _suite_periodic_count(report, max_n, threads):
    for n in range(1, max_n + 1):
        total = sum(_periodic_by_leading(n, threads).values())
        report.observations[str(n)] = total
        report.checks += 1
        if total != 2 ** (n - 1):
            report.record("n=%s" % n, 2 ** (n - 1), total)


# Known dips in the sort-number distribution: q(n, k-1), q(n, k), q(n, k+1).
NONUNIMODAL_WITNESSES = {4: (1, (8, 6, 7)), 7: (3, (1046, 874, 939))}


def _suite_nonunimodal(report, max_n, threads):
    for n in range(4, max_n + 1):
        histogram = exhaustive_summary(n, threads).histogram
        witnesses = unimodality_witnesses(histogram)
        report.observations[str(n)] = [list(counts) for _, counts in witnesses]
        if n in NONUNIMODAL_WITNESSES:
            k, expected = NONUNIMODAL_WITNESSES[n]
            actual = (histogram[k - 1], histogram[k], histogram[k + 1])
            report.checks += 1
            if actual != expected:
                report.record("n=%s k=%s" % (n, k), expected, actual)


def _suite_doubling(report, max_n, threads):
    _exhaustive(report, "lift-contract", range(1, max_n), threads)
    histograms = {n: exhaustive_summary(n, threads).histogram for n in range(1, max_n + 1)}
    for n in range(1, max_n):
        smaller, larger = histograms[n], histograms[n + 1]
        for k in range(len(smaller.counts)):
            report.checks += 1
            if larger[k] < 2 * smaller[k]:
                report.record("q(%s, %s)" % (n + 1, k), ">= %s" % (2 * smaller[k]), larger[k])


def _suite_preimage_bound(report, max_n, threads):
    for n in range(2, max_n + 1):
        counts = Counter(_sc231(p.values) for p in iter_permutations(n))
        largest = max(counts.values())
        report.observations[str(n)] = largest
        report.checks += 2
        if largest != 2 ** (n - 2):
            report.record("n=%s max preimages" % n, 2 ** (n - 2), largest)
        if sum(counts.values()) != math.factorial(n):
            report.record("n=%s total preimages" % n, math.factorial(n), sum(counts.values()))


def _per_permutation(name, first_n):
    def run(report, max_n, threads):
        _exhaustive(report, name, range(first_n, max_n + 1), threads)

    return run


class Suite(NamedTuple):
    run: object
    min_n: int
    cap: int
    forced_cap: int
    description: str


SUITES = {
    "thm42-lower": Suite(
        _suite_lower_bound, 3, 30, 200, "reverse(V_n) needs at least n-1 passes"
    ),
    "thm43-upper": Suite(
        _per_permutation("thm43-upper", 3), 3, 10, 12, "sort-number <= (n+1)(n-2)/2"
    ),
    "lemma431-gap": Suite(
        _per_permutation("lemma431-gap", 2), 2, 10, 12, "gap between 1 and 2 shrinks"
    ),
    "cor432-index": Suite(
        _per_permutation("cor432-index", 3), 3, 10, 12, "index 1 is left within n-1 passes"
    ),
    "index-monovariant": Suite(
        _per_permutation("index-monovariant", 1), 1, 10, 12, "index never decreases"
    ),
    "claim47-leading": Suite(
        _per_permutation("claim47-leading", 1), 1, 10, 12,
        "leading entry 1 or n excludes sort-number 2",
    ),
    "claim48-periodic-by-leading": Suite(
        _suite_periodic_by_leading, 1, 10, 12,
        "periodic points with leading entry k number round(2^(k-2))",
    ),
    "prop45-nonunimodal": Suite(
        _suite_nonunimodal, 4, 10, 12, "sort-number distributions are not unimodal"
    ),
    "prop46-doubling": Suite(
        _suite_doubling, 2, 10, 12, "lift keeps sort-numbers and q(n+1,k) >= 2q(n,k)"
    ),
    "periodic-count": Suite(
        _suite_periodic_count, 1, 10, 12, "there are 2^(n-1) periodic points"
    ),
    "valley-reversal": Suite(
        _per_permutation("valley-reversal", 1), 1, 10, 12,
        "SC_231 reverses periodic points",
    ),
    "periodic-index": Suite(
        _per_permutation("periodic-index", 1), 1, 10, 12, "periodic iff index n"
    ),
    "lift-contract": Suite(
        _per_permutation("lift-contract", 1), 1, 10, 11,
        "contract undoes both lifts, which keep the sort-number",
    ),
    "preimage-bound": Suite(
        _suite_preimage_bound, 2, 8, 9, "at most 2^(n-2) preimages, n! in total"
    ),
}


def suite_names():
    return list(SUITES)


def run_suite(name, max_n=DEFAULT_MAX_N, force=False, threads=1):
    """
    Run one named suite up to length ``max_n``.

    :param str name: A key of :py:data:`SUITES`.
    :param int max_n: The largest length to check.
    :param bool force: Allow the larger ``forced_cap`` instead of ``cap``.
    :param int threads: Worker processes for exhaustive scans.

    :raises UnknownSuite: When ``name`` is not a suite.
    :raises SuiteLimitExceeded: When ``max_n`` is above the suite's cap.
    :raises ValueError: When ``max_n`` is below the suite's smallest length.
    :rtype: sortnumber.SuiteReport
    """
    try:
        suite = SUITES[name]
    except KeyError:
        raise UnknownSuite(
            "Unknown suite %r, choose from %s" % (name, ", ".join(SUITES))
        ) from None
    cap = suite.forced_cap if force else suite.cap
    if max_n > cap:
        raise SuiteLimitExceeded(
            "Suite %s stops at n=%s%s, got %s"
            % (name, cap, "" if force else " (use force for %s)" % suite.forced_cap, max_n)
        )
    if max_n < suite.min_n:
        raise ValueError("Suite %s needs max_n >= %s, got %s." % (name, suite.min_n, max_n))

    report = SuiteReport(name, {"max_n": max_n})
    started = time.perf_counter()
    suite.run(report, max_n, threads)
    report.elapsed = time.perf_counter() - started
    if report.passed:
        _LOGGER.info("Suite %s passed %s checks in %.1fs", name, report.checks, report.elapsed)
    else:
        _LOGGER.warning(
            "Suite %s failed %s of %s checks, first: %s",
            name,
            report.failure_count,
            report.checks,
            report.failures[0] if report.failures else None,
        )
    return report


def run_all(max_n=DEFAULT_MAX_N, force=False, threads=1):
    """Run every suite, each up to ``min(max_n, cap)``."""
    reports = []
    for name, suite in SUITES.items():
        limit = min(max_n, suite.forced_cap if force else suite.cap)
        if limit < suite.min_n:
            _LOGGER.info("Skipping suite %s, it needs n >= %s", name, suite.min_n)
            continue
        reports.append(run_suite(name, limit, force, threads))
    return reports
