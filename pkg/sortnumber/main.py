# encoding: utf8
import logging
import operator
from dataclasses import dataclass
from functools import total_ordering
from typing import Tuple

import numpy as np

from . import kernels
from .enums import EventKind
from .enums import LiftOrder
from .utils import format_values
from .utils import parse_values

_LOGGER = logging.getLogger(__name__)


class SortNumberException(Exception):
    """
    A generic sortnumber exception.

    Every error the library raises on purpose derives from this class, so
    callers that only care about "did the computation fail" can catch it alone.
    """

    pass


class PermutationError(SortNumberException, ValueError):
    """A sequence that was expected to be a permutation of 1..n is not one."""

    pass


class DuplicateEntry(PermutationError):
    pass


class EntryOutOfRange(PermutationError):
    pass


class EmptyPermutation(PermutationError):
    pass


class IndexTooLow(SortNumberException, ValueError):
    """The permutation has index 1, so its values 1 and 2 cannot be contracted."""

    pass


class InternalBoundExceeded(SortNumberException):
    """
    The iteration safety bound was crossed while computing a sort-number.

    The bound is the proven upper limit on sort-numbers, so this can only mean
    a bug (or a counterexample to the bound). It is never silently truncated.
    """

    def __init__(self, permutation, bound):
        self.permutation = permutation
        self.bound = bound
        super().__init__(
            "No periodic point reached from %s after %s iterations"
            % (format_values(permutation), bound)
        )


class HistogramMismatch(SortNumberException, ValueError):
    pass


class CheckpointError(SortNumberException):
    pass


class UnknownSuite(SortNumberException, ValueError):
    pass


class SuiteLimitExceeded(SortNumberException, ValueError):
    pass


class FitError(SortNumberException, ValueError):
    pass


def _check_values(values):
    """Raise the matching PermutationError unless values is a bijection on 1..n."""
    n = len(values)
    if n == 0:
        raise EmptyPermutation("A permutation needs at least one entry.")

    seen = [False] * (n + 1)
    for value in values:
        if not 1 <= value <= n:
            raise EntryOutOfRange(
                "Entry %s is outside 1..%s in %s" % (value, n, list(values))
            )
        if seen[value]:
            raise DuplicateEntry("Entry %s repeats in %s" % (value, list(values)))
        seen[value] = True


@total_ordering
class Permutation(object):
    __slots__ = ("_values",)

    def __init__(self, values):
        """
        An immutable permutation of the values 1..n.

        Permutations compare by length first and lexicographically within a
        length, which is the order ``1, 12, 21, 123, 132, ...`` the exhaustive
        scans walk in.

        :param values: A sequence holding each of 1..n exactly once.

        :raises PermutationError: When ``values`` is empty, repeats an entry or
                                  holds an entry outside 1..n.
        """
        try:
            values = tuple(operator.index(value) for value in values)
        except TypeError:
            raise PermutationError("Entries must be integers: %r" % (values,)) from None
        _check_values(values)
        self._values = values

    @classmethod
    def _trusted(cls, values):
        """Wrap values already known to be a permutation, skipping the checks."""
        permutation = cls.__new__(cls)
        permutation._values = tuple(values)
        return permutation

    @classmethod
    def parse(cls, text):
        """
        Parse a permutation from its comma or compact digit form.

        :param str text: For example ``"45231"`` or ``"4,6,8,5,11,7,2,9,10,3,1"``.
        :rtype: sortnumber.Permutation
        """
        try:
            values = parse_values(text)
        except ValueError as ex:
            raise PermutationError(str(ex)) from ex
        return cls(values)

    @property
    def values(self):
        """The entries as a tuple."""
        return self._values

    @property
    def n(self):
        """The length of the permutation."""
        return len(self._values)

    def __len__(self):
        return len(self._values)

    def __iter__(self):
        return iter(self._values)

    def __getitem__(self, item):
        return self._values[item]

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return self._values == other._values

    def __lt__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return (len(self._values), self._values) < (len(other._values), other._values)

    def __hash__(self):
        return hash(self._values)

    def __str__(self):
        return format_values(self._values)

    def __repr__(self):
        return "Permutation(%s)" % format_values(self._values, compact=False)

    def as_text(self, compact=None):
        """Render as text, compact digits up to nine entries unless told otherwise."""
        return format_values(self._values, compact=compact)


@dataclass(frozen=True)
class TraceEvent:
    kind: EventKind
    value: int
    pre_popped: bool = False


@dataclass(frozen=True)
class SortTrace:
    """The full push/pop log of one SC_231 pass."""

    input: Permutation
    output: Permutation
    events: Tuple[TraceEvent, ...]

    @property
    def pre_popped(self):
        """Values popped while input entries remained, in pop order."""
        return tuple(
            event.value
            for event in self.events
            if event.kind is EventKind.pop and event.pre_popped
        )

    @property
    def post_popped(self):
        """Values popped during the final drain of the stack, in pop order."""
        return tuple(
            event.value
            for event in self.events
            if event.kind is EventKind.pop and not event.pre_popped
        )


@dataclass(frozen=True)
class Trajectory:
    """
    The orbit of a permutation up to its first periodic point.

    ``steps[0]`` is the input and ``steps[t]`` is SC_231 applied ``t`` times;
    the last step is the first periodic one, so ``sort_number`` equals
    ``len(steps) - 1``.
    """

    steps: Tuple[Permutation, ...]
    sort_number: int

    @property
    def periodic_point(self):
        """The periodic point the trajectory ends on."""
        return self.steps[-1]


def validate(seq):
    """
    Check that a sequence is a permutation of 1..n and wrap it.

    :param seq: The candidate entries.

    :raises DuplicateEntry: When an entry repeats.
    :raises EntryOutOfRange: When an entry is outside 1..n.
    :raises EmptyPermutation: When the sequence is empty.
    :rtype: sortnumber.Permutation
    """
    return Permutation(seq)


def _as_permutation(p):
    return p if isinstance(p, Permutation) else Permutation(p)


def _sc231(values):
    # Before every push the stack avoids a consecutive 231, so only the triple
    # formed with the incoming entry has to be checked.
    stack = []
    output = []
    for x in values:
        while len(stack) >= 2 and stack[-2] < x < stack[-1]:
            output.append(stack.pop())
        stack.append(x)
    stack.reverse()
    output.extend(stack)
    return tuple(output)


def _is_periodic(values):
    # No peaks: the entries fall to the minimum and then only rise.
    falling = True
    previous = values[0]
    for x in values[1:]:
        if x > previous:
            falling = False
        elif not falling:
            return False
        previous = x
    return True


def _index_of(values):
    n = len(values)
    positions = [0] * (n + 1)
    for position, value in enumerate(values):
        positions[value] = position
    low = high = positions[1]
    for value in range(2, n + 1):
        position = positions[value]
        if position == low - 1:
            low = position
        elif position == high + 1:
            high = position
        else:
            return value - 1
    return n


def iteration_bound(n):
    """
    Return the most SC_231 passes a length ``n`` permutation may need.

    This is the proven ``(n+1)(n-2)/2`` maximum plus one pass of slack.

    :param int n: The permutation length.
    """
    return max(0, (n + 1) * (n - 2) // 2) + 1


def _sort_number_count(values):
    """Count SC_231 passes until values is periodic, without keeping the orbit."""
    bound = iteration_bound(len(values))
    count = kernels.sort_number_count(np.asarray(values, dtype=np.int64), bound)
    if count < 0:
        raise InternalBoundExceeded(tuple(values), bound)
    return int(count)


def sc231(p):
    """
    Apply the consecutive-231-avoiding stack sort once.

    Entries are read left to right. Before an entry ``x`` is pushed, the top
    of the stack is popped to the output for as long as the two top entries
    ``t1`` (top) and ``t2`` satisfy ``t2 < x < t1``. Once the input is used up
    the stack is emptied onto the output.

    :param sortnumber.Permutation p: The permutation to sort.
    :rtype: sortnumber.Permutation
    """
    p = _as_permutation(p)
    return Permutation._trusted(_sc231(p.values))


def sc231_trace(p):
    """
    Apply SC_231 once, recording every push and pop.

    :param sortnumber.Permutation p: The permutation to sort.
    :rtype: sortnumber.SortTrace
    """
    p = _as_permutation(p)
    stack = []
    output = []
    events = []
    for x in p.values:
        while len(stack) >= 2 and stack[-2] < x < stack[-1]:
            value = stack.pop()
            output.append(value)
            events.append(TraceEvent(EventKind.pop, value, pre_popped=True))
        stack.append(x)
        events.append(TraceEvent(EventKind.push, x))
    while stack:
        value = stack.pop()
        output.append(value)
        events.append(TraceEvent(EventKind.pop, value, pre_popped=False))
    return SortTrace(p, Permutation._trusted(output), tuple(events))


def format_trace(trace):
    """
    Render a trace as one line per event, showing input, stack and output.

    The stack column lists entries bottom to top.

    :param sortnumber.SortTrace trace: The trace to render.
    :rtype: str
    """
    remaining = list(trace.input.values)
    stack = []
    output = []
    rows = [("step", "action", "input", "stack", "output")]
    rows.append(("0", "", format_values(remaining), "", ""))
    for step, event in enumerate(trace.events, 1):
        if event.kind is EventKind.push:
            stack.append(remaining.pop(0))
            action = "push %s" % event.value
        else:
            output.append(stack.pop())
            action = "%s %s" % ("pre-pop" if event.pre_popped else "post-pop", event.value)
        rows.append(
            (
                str(step),
                action,
                format_values(remaining, compact=trace.input.n <= 9),
                format_values(stack, compact=trace.input.n <= 9),
                format_values(output, compact=trace.input.n <= 9),
            )
        )
    widths = [max(len(row[column]) for row in rows) for column in range(5)]
    return "\n".join(
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in rows
    )


def peaks(p):
    """
    Return the 0-based positions of the peaks of ``p``.

    A peak is an entry, neither first nor last, larger than both neighbours.
    """
    values = _as_permutation(p).values
    return tuple(
        i
        for i in range(1, len(values) - 1)
        if values[i - 1] < values[i] > values[i + 1]
    )


def is_periodic(p):
    """
    Return whether ``p`` is a periodic point of SC_231.

    Periodic points are exactly the permutations without peaks: decreasing down
    to the entry 1 and increasing after it.

    :rtype: bool
    """
    return _is_periodic(_as_permutation(p).values)


def index_of(p):
    """
    Return the index of a permutation.

    The index is the largest ``m`` such that, for every ``j <= m``, the values
    ``1..j`` sit in contiguous positions. It never decreases under SC_231 and
    equals ``n`` exactly for periodic points. Index ``n - 1`` cannot occur.

    :rtype: int
    """
    return _index_of(_as_permutation(p).values)


def iterate(p, times):
    """Apply SC_231 ``times`` times."""
    if times < 0:
        raise ValueError("Cannot apply SC_231 a negative number of times.")
    values = _as_permutation(p).values
    for _ in range(times):
        values = _sc231(values)
    return Permutation._trusted(values)


def sort_number(p):
    """
    Iterate SC_231 until a periodic point is reached.

    :param sortnumber.Permutation p: The starting permutation.

    :raises InternalBoundExceeded: When more than
        :py:func:`iteration_bound(n) <sortnumber.main.iteration_bound>`
        passes are needed.
    :returns: The full trajectory; its ``sort_number`` is the number of passes.
    :rtype: sortnumber.Trajectory
    """
    p = _as_permutation(p)
    bound = iteration_bound(p.n)
    values = p.values
    steps = [p]
    while not _is_periodic(values):
        if len(steps) > bound:
            _LOGGER.error("Iteration bound %s crossed starting from %s", bound, p)
            raise InternalBoundExceeded(p.values, bound)
        values = _sc231(values)
        steps.append(Permutation._trusted(values))
    return Trajectory(tuple(steps), len(steps) - 1)


def reverse(p):
    """Return the entries of ``p`` in reverse positional order."""
    return Permutation._trusted(_as_permutation(p).values[::-1])


def complement(p):
    """Replace every entry ``i`` of ``p`` by ``n + 1 - i``."""
    values = _as_permutation(p).values
    n = len(values)
    return Permutation._trusted(n + 1 - value for value in values)


def identity(n):
    """Return ``12...n``."""
    if n < 1:
        raise ValueError("Permutation length must be at least 1, got %s." % n)
    return Permutation._trusted(range(1, n + 1))


def v_permutation(n):
    """
    Return V_n: the values of n's parity ascending, then the others descending.

    Applying SC_231 to the reverse of V_n takes at least ``n - 1`` passes, which
    makes this family the witness for the linear lower bound on the maximum
    sort-number. For example V_6 is ``246531``.

    :param int n: The length, at least 1.
    :rtype: sortnumber.Permutation
    """
    if n < 1:
        raise ValueError("V_n needs n >= 1, got %s." % n)
    same = [value for value in range(1, n + 1) if value % 2 == n % 2]
    other = [value for value in range(n, 0, -1) if value % 2 != n % 2]
    return Permutation._trusted(same + other)


def lift(p, order=LiftOrder.ONE_TWO):
    """
    Embed a length n permutation into length n + 1, keeping its sort-number.

    Every entry is increased by one and the entry 2 (formerly 1) is replaced
    by the block ``12`` or ``21``.

    :param sortnumber.Permutation p: The permutation to lift.
    :param sortnumber.LiftOrder order: Which block replaces the entry 2.
    :rtype: sortnumber.Permutation
    """
    order = LiftOrder(order)
    block = (1, 2) if order is LiftOrder.ONE_TWO else (2, 1)
    values = []
    for value in _as_permutation(p).values:
        if value == 1:
            values.extend(block)
        else:
            values.append(value + 1)
    return Permutation._trusted(values)


def contract(p):
    """
    Collapse the adjacent values 1 and 2 into a single 1 and shift the rest down.

    This inverts :py:func:`lift <sortnumber.lift>` on its image.

    :raises IndexTooLow: When 1 and 2 are not adjacent.
    :rtype: sortnumber.Permutation
    """
    p = _as_permutation(p)
    if _index_of(p.values) < 2:
        raise IndexTooLow("%s has index 1, its entries 1 and 2 are not adjacent" % p)
    return Permutation._trusted(
        value if value == 1 else value - 1 for value in p.values if value != 2
    )


def gap_1_2(p):
    """
    Return the number of entries strictly between the entries 1 and 2.

    :raises ValueError: For permutations of length 1.
    """
    values = _as_permutation(p).values
    if len(values) < 2:
        raise ValueError("The gap between 1 and 2 needs length >= 2.")
    return abs(values.index(1) - values.index(2)) - 1
