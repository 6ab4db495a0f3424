import math

# Compact digit strings are only unambiguous while every value is a single digit.
COMPACT_MAX_LENGTH = 9


def parse_values(text):
    """
    Parse the text form of a permutation into a list of integers.

    Two forms are accepted: the comma-separated form ``"4,6,8,5,11,7,2,9,10,3,1"``
    (canonical, any length) and the compact digit form ``"45231"`` (lengths up to
    nine). Surrounding brackets and whitespace are ignored.

    :param str text: The permutation text.

    :raises ValueError: When the text is neither form.
    :returns: The parsed values, not yet checked for being a permutation.
    :rtype: list
    """
    text = text.strip().strip("()[]").strip()
    if not text:
        return []

    if "," in text:
        try:
            return [int(item) for item in text.split(",")]
        except ValueError:
            raise ValueError("Not a comma-separated permutation: %r" % text) from None

    if not text.isdigit():
        raise ValueError("Not a permutation: %r" % text)
    if len(text) > COMPACT_MAX_LENGTH:
        raise ValueError(
            "Compact form is ambiguous beyond %s entries, use commas: %r"
            % (COMPACT_MAX_LENGTH, text)
        )
    return [int(digit) for digit in text]


def format_values(values, compact=None):
    """
    Render permutation values as text.

    :param values: The values to render.
    :param bool compact: Force (``True``) or forbid (``False``) the digit form.
                         By default the digit form is used up to nine entries.
    """
    values = list(values)
    if compact is None:
        compact = len(values) <= COMPACT_MAX_LENGTH
    if compact:
        return "".join(str(value) for value in values)
    return ",".join(str(value) for value in values)


def round_half_up(value):
    """Round to the nearest integer, halves going up (so 0.5 becomes 1)."""
    return int(math.floor(value + 0.5))
