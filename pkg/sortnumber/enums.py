from enum import Enum


class EventKind(Enum):
    """The kind of a stack event recorded in a :py:class:`SortTrace <sortnumber.SortTrace>`."""

    push = "push"
    pop = "pop"


class LiftOrder(Enum):
    """
    How the value 2 of a lifted permutation is expanded.

    ``ONE_TWO`` writes the new block as ``12``, ``TWO_ONE`` as ``21``.
    """

    ONE_TWO = "one-two"
    TWO_ONE = "two-one"


class OutputFormat(Enum):
    """Output formats understood by the report writers and the command line."""

    text = "text"
    csv = "csv"
    json = "json"
