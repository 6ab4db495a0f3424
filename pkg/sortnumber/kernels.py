"""
Compiled inner loops for exhaustive scans and sampling.

These work on int64 numpy arrays and mirror the reference functions in
:py:mod:`sortnumber.main`, which stay in plain Python for single calls.
"""
import numba
import numpy as np


@numba.njit
def sc231_into(values, out, stack):
    """Write SC_231 of ``values`` to ``out``; ``stack`` is scratch of the same length."""
    top = 0
    written = 0
    for i in range(values.shape[0]):
        x = values[i]
        while top >= 2 and stack[top - 2] < x and x < stack[top - 1]:
            top -= 1
            out[written] = stack[top]
            written += 1
        stack[top] = x
        top += 1
    while top > 0:
        top -= 1
        out[written] = stack[top]
        written += 1


@numba.njit
def is_periodic(values):
    falling = True
    for i in range(1, values.shape[0]):
        if values[i] > values[i - 1]:
            falling = False
        elif not falling:
            return False
    return True


@numba.njit
def sort_number_count(values, bound):
    """Passes until ``values`` is periodic, or -1 when more than ``bound`` are needed."""
    n = values.shape[0]
    current = values.copy()
    following = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    count = 0
    while not is_periodic(current):
        if count == bound:
            return -1
        sc231_into(current, following, stack)
        current, following = following, current
        count += 1
    return count


@numba.njit
def next_perm(values):
    """Step ``values`` in place to its lexicographic successor; False on the last one."""
    n = values.shape[0]
    i = n - 2
    while i >= 0 and values[i] > values[i + 1]:
        i -= 1
    if i < 0:
        return False
    j = n - 1
    while values[j] < values[i]:
        j -= 1
    values[i], values[j] = values[j], values[i]
    low = i + 1
    high = n - 1
    while low < high:
        values[low], values[high] = values[high], values[low]
        low += 1
        high -= 1
    return True


@numba.njit
def scan_block(values, count, bound, counts):
    """
    Add the sort-numbers of ``count`` permutations from ``values`` on to ``counts``.

    Returns the number scanned, or -1 with ``values`` left on the permutation
    that needed more than ``bound`` passes.
    """
    for done in range(count):
        k = sort_number_count(values, bound)
        if k < 0:
            return -1
        counts[k] += 1
        if not next_perm(values):
            return done + 1
    return count
