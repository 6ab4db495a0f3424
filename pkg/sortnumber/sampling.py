"""Monte-Carlo estimates of average sort-numbers with Student t intervals."""
import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import stats

from .enumeration import map_blocks
from .enums import OutputFormat
from .main import _sort_number_count
from .main import Permutation

_LOGGER = logging.getLogger(__name__)

DEFAULT_SAMPLES = 400
DEFAULT_LEVEL = 0.99
DEFAULT_SEED = 0

# The bit generator is part of the output contract: changing it changes every
# estimate produced for a given seed.
RNG_ALGORITHM = "PCG64"

# Samples handed to a worker at a time when sampling in parallel.
CHUNK_SIZE = 50


@dataclass(frozen=True)
class RngState:
    """
    A reproducible random stream: a seed plus a stream key.

    Streams are derived with numpy's ``SeedSequence`` spawn keys, so the
    stream ``(n, index)`` of a seed yields the same numbers on every platform
    and whatever order the streams are consumed in.
    """

    seed: int
    stream: Tuple[int, ...] = ()
    algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("Seeds must be non-negative, got %s." % self.seed)
        if self.algorithm != RNG_ALGORITHM:
            raise ValueError("Unsupported generator %r." % self.algorithm)
        object.__setattr__(self, "stream", tuple(int(key) for key in self.stream))

    @classmethod
    def for_sample(cls, seed, n, index):
        """The stream that sample ``index`` of length ``n`` draws from."""
        return cls(seed, (n, index))

    def generator(self):
        """Return a fresh numpy Generator positioned at the start of the stream."""
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(sequence))


def random_perm(n, rng):
    """
    Draw a uniformly random permutation of length ``n`` by a Fisher-Yates shuffle.

    :param int n: The permutation length, at least 1.
    :param rng: A :py:class:`RngState <sortnumber.RngState>` or a numpy Generator.
                A Generator is advanced by exactly ``n - 1`` draws.
    :rtype: sortnumber.Permutation
    """
    if n < 1:
        raise ValueError("Permutation length must be at least 1, got %s." % n)
    if isinstance(rng, RngState):
        rng = rng.generator()
    values = list(range(1, n + 1))
    if n > 1:
        # One draw per position i = n-1 .. 1, uniform over 0..i.
        draws = rng.integers(0, np.arange(n, 1, -1)).tolist()
        for i, j in zip(range(n - 1, 0, -1), draws):
            values[i], values[j] = values[j], values[i]
    return Permutation._trusted(values)


def mean_sd(xs):
    """
    Return the mean and the sample standard deviation (``m - 1`` denominator).

    The deviation is ``nan`` for a single observation.

    :raises ValueError: On empty input.
    """
    data = np.asarray(list(xs), dtype=float)
    if data.size == 0:
        raise ValueError("Cannot take the mean of no observations.")
    mean = float(data.mean())
    sd = float(data.std(ddof=1)) if data.size > 1 else float("nan")
    return mean, sd


def t_quantile(prob, df):
    """
    Inverse CDF of Student's t distribution.

    :param float prob: A probability strictly between 0 and 1.
    :param int df: Degrees of freedom, at least 1.
    """
    if not 0 < prob < 1:
        raise ValueError("Probability must be in (0, 1), got %s." % prob)
    if df < 1:
        raise ValueError("Degrees of freedom must be at least 1, got %s." % df)
    return float(stats.t.ppf(prob, df))


def confidence_interval(mean, sd, m, level=DEFAULT_LEVEL):
    """
    One-sample t interval for a mean.

    :param float mean: The sample mean.
    :param float sd: The sample standard deviation.
    :param int m: The sample size, at least 2.
    :param float level: The confidence level, for example 0.99.
    :returns: ``(low, high)``, symmetric around ``mean``.
    """
    if m < 2:
        raise ValueError("A confidence interval needs at least 2 samples, got %s." % m)
    if not 0 < level < 1:
        raise ValueError("Confidence level must be in (0, 1), got %s." % level)
    half_width = t_quantile((1 + level) / 2, m - 1) * sd / math.sqrt(m)
    return mean - half_width, mean + half_width


@dataclass(frozen=True)
class SampleStats:
    n: int
    m: int
    mean: float
    sd: float
    ci_low: float
    ci_high: float
    level: float
    seed: int

    def as_dict(self):
        return {
            "n": self.n,
            "samples": self.m,
            "mean": self.mean,
            "sd": self.sd,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
            "seed": self.seed,
        }


def _sample_chunk(task):
    n, seed, start, stop = task
    return [
        _sort_number_count(random_perm(n, RngState.for_sample(seed, n, index)).values)
        for index in range(start, stop)
    ]


def sample_sort_numbers(n, m, seed=DEFAULT_SEED, threads=1):
    """
    Sort-numbers of ``m`` random permutations of length ``n``, in sample order.

    Sample ``i`` always uses the stream ``(n, i)`` of ``seed``, so the values do
    not depend on ``threads``.
    """
    tasks = [
        (n, seed, start, min(start + CHUNK_SIZE, m)) for start in range(0, m, CHUNK_SIZE)
    ]
    values = []
    for chunk in map_blocks(_sample_chunk, tasks, threads):
        values.extend(chunk)
    return tuple(values)


def sample_stats(n, m=DEFAULT_SAMPLES, seed=DEFAULT_SEED, level=DEFAULT_LEVEL, threads=1):
    """
    Estimate the average sort-number of length ``n`` permutations.

    :param int n: The permutation length.
    :param int m: The number of uniform samples, at least 2.
    :param int seed: The seed every sample stream is derived from.
    :param float level: The confidence level of the interval.
    :param int threads: Worker processes to use.
    :returns: ``(stats, sort_numbers)`` with the raw per-sample values.
    """
    if n < 1:
        raise ValueError("Permutation length must be at least 1, got %s." % n)
    if m < 2:
        raise ValueError("Sampling needs at least 2 samples, got %s." % m)
    values = sample_sort_numbers(n, m, seed, threads)
    mean, sd = mean_sd(values)
    low, high = confidence_interval(mean, sd, m, level)
    return SampleStats(n, m, mean, sd, low, high, level, seed), values


def sample_many(n_list, m=DEFAULT_SAMPLES, seed=DEFAULT_SEED, level=DEFAULT_LEVEL, threads=1):
    """Run :py:func:`sample_stats` for every length, logging progress per length."""
    results = []
    for n in n_list:
        _LOGGER.info("Processing n=%s", n)
        results.append(sample_stats(n, m, seed, level, threads))
    return results


def sample_points(results):
    """``(n, mean)`` pairs of sampling results, ready for curve fitting."""
    return [(stats_.n, stats_.mean) for stats_, _ in results]


def dumps_sample_report(results, fmt=OutputFormat.csv):
    """
    Serialise sampling results.

    The CSV layout has five summary rows (lengths, means, standard deviations,
    interval lower and upper bounds), each led by a label, followed by one row
    per sample index holding the raw sort-number of that sample at each length.
    """
    fmt = OutputFormat(fmt)
    if fmt is OutputFormat.json:
        payload = {
            "seed": results[0][0].seed if results else None,
            "level": results[0][0].level if results else None,
            "lengths": [
                dict(stats_.as_dict(), sort_numbers=list(values))
                for stats_, values in results
            ],
        }
        return json.dumps(payload, indent=2) + "\n"

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["n"] + [stats_.n for stats_, _ in results])
    writer.writerow(["mean"] + [repr(stats_.mean) for stats_, _ in results])
    writer.writerow(["sd"] + [repr(stats_.sd) for stats_, _ in results])
    writer.writerow(["ci_low"] + [repr(stats_.ci_low) for stats_, _ in results])
    writer.writerow(["ci_high"] + [repr(stats_.ci_high) for stats_, _ in results])
    rows = max((len(values) for _, values in results), default=0)
    for index in range(rows):
        writer.writerow(
            [index + 1]
            + [values[index] if index < len(values) else "" for _, values in results]
        )
    if fmt is OutputFormat.text:
        return buffer.getvalue().replace(",", "\t")
    return buffer.getvalue()


def loads_sample_report(text):
    """
    Read the five summary rows of a CSV sample report back.

    :returns: A list of ``{"n", "mean", "sd", "ci_low", "ci_high"}`` dicts.
    """
    rows = {row[0]: row[1:] for row in csv.reader(io.StringIO(text)) if row}
    lengths = [int(value) for value in rows["n"]]
    return [
        {
            "n": n,
            "mean": float(rows["mean"][i]),
            "sd": float(rows["sd"][i]),
            "ci_low": float(rows["ci_low"][i]),
            "ci_high": float(rows["ci_high"][i]),
        }
        for i, n in enumerate(lengths)
    ]
