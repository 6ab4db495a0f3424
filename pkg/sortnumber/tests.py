import io
import json
import math
import os
import sys
import tempfile
import unittest
import unittest.mock as mock

import numpy as np
from scipy import stats

sys.path.insert(0, os.path.abspath(__file__ + "/../.."))

from sortnumber import analysis  # noqa: E402
from sortnumber import cli  # noqa: E402
from sortnumber import enumeration  # noqa: E402
from sortnumber import kernels  # noqa: E402
from sortnumber import sampling  # noqa: E402
from sortnumber import verify  # noqa: E402
from sortnumber.enums import EventKind  # noqa: E402
from sortnumber.enums import LiftOrder  # noqa: E402
from sortnumber.enums import OutputFormat  # noqa: E402
from sortnumber.main import complement  # noqa: E402
from sortnumber.main import contract  # noqa: E402
from sortnumber.main import DuplicateEntry  # noqa: E402
from sortnumber.main import EmptyPermutation  # noqa: E402
from sortnumber.main import EntryOutOfRange  # noqa: E402
from sortnumber.main import FitError  # noqa: E402
from sortnumber.main import format_trace  # noqa: E402
from sortnumber.main import gap_1_2  # noqa: E402
from sortnumber.main import HistogramMismatch  # noqa: E402
from sortnumber.main import identity  # noqa: E402
from sortnumber.main import index_of  # noqa: E402
from sortnumber.main import IndexTooLow  # noqa: E402
from sortnumber.main import is_periodic  # noqa: E402
from sortnumber.main import iterate  # noqa: E402
from sortnumber.main import iteration_bound  # noqa: E402
from sortnumber.main import lift  # noqa: E402
from sortnumber.main import peaks  # noqa: E402
from sortnumber.main import Permutation  # noqa: E402
from sortnumber.main import PermutationError  # noqa: E402
from sortnumber.main import reverse  # noqa: E402
from sortnumber.main import sc231  # noqa: E402
from sortnumber.main import sc231_trace  # noqa: E402
from sortnumber.main import sort_number  # noqa: E402
from sortnumber.main import SuiteLimitExceeded  # noqa: E402
from sortnumber.main import UnknownSuite  # noqa: E402
from sortnumber.main import v_permutation  # noqa: E402
from sortnumber.utils import format_values  # noqa: E402
from sortnumber.utils import parse_values  # noqa: E402
from sortnumber.utils import round_half_up  # noqa: E402

# Exact maximum, count at the maximum and average sort-number per length.
LENGTH_SUMMARIES = {
    1: (0, 1, 0.0),
    2: (0, 2, 0.0),
    3: (2, 1, 0.5),
    4: (4, 1, 1.25),
    5: (6, 2, 2.1083333333333334),
    6: (8, 1, 2.948611111111111),
    7: (10, 4, 3.778373015873016),
    8: (12, 2, 4.629861111111111),
}

# Exact averages for lengths 3..14 and sampled estimates for 15..1000.
KNOWN_AVERAGES = [
    (3, 0.5),
    (4, 1.25),
    (5, 2.1083333333333334),
    (6, 2.948611111111111),
    (7, 3.778373015873016),
    (8, 4.629861111111111),
    (9, 5.510821759259259),
    (10, 6.427365244708994),
    (11, 7.37919314674523),
    (12, 8.366963456907033),
    (13, 9.394762786403412),
    (14, 10.465681418116624),
    (15, 11.465),
    (25, 24.5025),
    (50, 69.3925),
    (100, 195.1575),
    (200, 541.89),
    (300, 964.975),
    (400, 1444.46),
    (500, 1954.0025),
    (600, 2496.2875),
    (700, 3071.16),
    (800, 3676.2975),
    (900, 4291.2775),
    (1000, 4920.8125),
]


def p(text):
    return Permutation.parse(text)


class PermutationTests(unittest.TestCase):
    def test_parse_forms(self):
        self.assertEqual(p("45231").values, (4, 5, 2, 3, 1))
        self.assertEqual(p("4,5,2,3,1"), p("45231"))
        self.assertEqual(p("(4, 5, 2, 3, 1)"), p("45231"))
        self.assertEqual(p("4,6,8,5,11,7,2,9,10,3,1").n, 11)

    def test_parse_rejects_long_compact_form(self):
        with self.assertRaises(PermutationError):
            p("1234567891")
        with self.assertRaises(ValueError):
            parse_values("12a")

    def test_validation_errors(self):
        with self.assertRaises(DuplicateEntry):
            Permutation([1, 1])
        with self.assertRaises(EntryOutOfRange):
            Permutation([1, 3])
        with self.assertRaises(EmptyPermutation):
            Permutation([])
        with self.assertRaises(PermutationError):
            Permutation([1.5, 2])

    def test_text_forms(self):
        self.assertEqual(str(p("45231")), "45231")
        self.assertEqual(repr(p("45231")), "Permutation(4,5,2,3,1)")
        self.assertEqual(p("45231").as_text(compact=False), "4,5,2,3,1")
        self.assertEqual(format_values(range(1, 11)), "1,2,3,4,5,6,7,8,9,10")

    def test_ordering_is_length_then_lexicographic(self):
        ordered = sorted([p("21"), p("123"), p("1"), p("12"), p("132")])
        self.assertEqual([str(q) for q in ordered], ["1", "12", "21", "123", "132"])

    def test_round_half_up(self):
        self.assertEqual(round_half_up(0.5), 1)
        self.assertEqual(round_half_up(2.5), 3)
        self.assertEqual(round_half_up(0.49), 0)


class SortTests(unittest.TestCase):
    def test_sc231_examples(self):
        self.assertEqual(sc231(p("45231")), p("13254"))
        self.assertEqual(sc231(p("13254")), p("35421"))
        self.assertEqual(sc231(p("1342")), p("2431"))
        self.assertEqual(sc231(p("2431")), p("4132"))
        self.assertEqual(sc231(p("1")), p("1"))

    def test_sc231_monotone_and_single_peak(self):
        self.assertEqual(sc231(p("1234")), p("4321"))
        self.assertEqual(sc231(p("4321")), p("1234"))
        self.assertEqual(sc231(p("15432")), p("54321"))

    def test_sort_numbers_of_small_cases(self):
        for text, expected in (("51234", 0), ("15432", 1), ("912345678", 0), ("198765432", 1)):
            self.assertEqual(sort_number(p(text)).sort_number, expected, text)

    def test_compiled_sort_number_matches_reference(self):
        for n in range(1, 8):
            bound = iteration_bound(n)
            for q in enumeration.iter_permutations(n):
                compiled = kernels.sort_number_count(np.array(q.values, dtype=np.int64), bound)
                self.assertEqual(compiled, sort_number(q).sort_number, q)

    def test_trace_without_pre_pops(self):
        trace = sc231_trace(p("45231"))
        self.assertEqual(trace.pre_popped, ())
        self.assertEqual(trace.post_popped, (1, 3, 2, 5, 4))
        self.assertEqual(trace.output, p("13254"))

    def test_trace_records_pre_and_post_pops(self):
        trace = sc231_trace(p("13254"))
        self.assertEqual(trace.output, p("35421"))
        self.assertEqual(trace.pre_popped, (3, 5))
        self.assertEqual(trace.post_popped, (4, 2, 1))
        pushes = [e.value for e in trace.events if e.kind is EventKind.push]
        self.assertEqual(pushes, [1, 3, 2, 5, 4])
        self.assertEqual(len(trace.events), 10)

    def test_format_trace(self):
        text = format_trace(sc231_trace(p("13254")))
        self.assertIn("pre-pop 3", text)
        self.assertIn("post-pop 1", text)
        self.assertEqual(text.splitlines()[0].split(), ["step", "action", "input", "stack", "output"])

    def test_peaks_and_periodic(self):
        self.assertEqual(peaks(p("45231")), (1, 3))
        self.assertFalse(is_periodic(p("45231")))
        self.assertTrue(is_periodic(p("43215")))
        self.assertTrue(is_periodic(p("1")))
        self.assertTrue(is_periodic(p("21")))

    def test_index(self):
        self.assertEqual(index_of(p("45231")), 1)
        self.assertEqual(index_of(p("35421")), 2)
        self.assertEqual(index_of(p("43215")), 5)
        self.assertEqual(index_of(p("1")), 1)
        self.assertEqual(index_of(p("21")), 2)

    def test_index_never_n_minus_one(self):
        for n in range(2, 7):
            for q in enumeration.iter_permutations(n):
                self.assertNotEqual(index_of(q), n - 1)

    def test_sort_number_trajectory(self):
        trajectory = sort_number(p("45231"))
        self.assertEqual(trajectory.sort_number, 4)
        self.assertEqual(
            [str(step) for step in trajectory.steps],
            ["45231", "13254", "35421", "51243", "43215"],
        )
        self.assertEqual([index_of(step) for step in trajectory.steps], [1, 1, 2, 2, 5])
        self.assertEqual(trajectory.periodic_point, p("43215"))

    def test_long_sort_number(self):
        self.assertEqual(sort_number(p("4,6,8,5,11,7,2,9,10,3,1")).sort_number, 19)

    def test_degenerate_lengths(self):
        for text in ("1", "12", "21"):
            self.assertEqual(sort_number(p(text)).sort_number, 0)

    def test_iterate(self):
        self.assertEqual(iterate(p("45231"), 4), p("43215"))
        self.assertEqual(iterate(p("45231"), 0), p("45231"))
        with self.assertRaises(ValueError):
            iterate(p("45231"), -1)

    def test_iteration_bound(self):
        self.assertEqual(iteration_bound(1), 1)
        self.assertEqual(iteration_bound(3), 3)
        self.assertEqual(iteration_bound(11), 55)

    def test_reverse_complement_identity(self):
        self.assertEqual(reverse(p("45231")), p("13254"))
        self.assertEqual(complement(p("45231")), p("21435"))
        self.assertEqual(complement(p("15432")), p("51234"))
        self.assertEqual(identity(4), p("1234"))
        with self.assertRaises(ValueError):
            identity(0)

    def test_periodic_points_are_reversed(self):
        for q in enumeration.iter_permutations(6):
            if is_periodic(q):
                self.assertEqual(sc231(q), reverse(q))


class FamilyTests(unittest.TestCase):
    def test_v_permutation(self):
        self.assertEqual(v_permutation(4), p("2431"))
        self.assertEqual(v_permutation(6), p("246531"))
        self.assertEqual(v_permutation(1), p("1"))

    def test_v_chain(self):
        for n in range(3, 31):
            v = v_permutation(n)
            self.assertEqual(sc231(reverse(v)), v)
            self.assertEqual(sc231(v).values, (n,) + v_permutation(n - 1).values)
            self.assertGreaterEqual(sort_number(reverse(v)).sort_number, n - 1)

    def test_lift_and_contract(self):
        self.assertEqual(lift(p("231")), p("3412"))
        self.assertEqual(lift(p("231"), LiftOrder.TWO_ONE), p("3421"))
        self.assertEqual(lift(p("231"), "two-one"), p("3421"))
        self.assertEqual(contract(p("3412")), p("231"))
        self.assertEqual(sort_number(lift(p("231"))).sort_number, 2)
        with self.assertRaises(IndexTooLow):
            contract(p("132"))

    def test_lift_both_orders(self):
        self.assertEqual(lift(p("132"), LiftOrder.ONE_TWO), p("1243"))
        self.assertEqual(lift(p("132"), LiftOrder.TWO_ONE), p("2143"))
        self.assertEqual(contract(p("1243")), p("132"))
        self.assertEqual(contract(p("2143")), p("132"))
        with self.assertRaises(IndexTooLow):
            contract(p("45231"))

    def test_lift_keeps_sort_number(self):
        for q in enumeration.iter_permutations(6):
            k = sort_number(q).sort_number
            for order in LiftOrder:
                self.assertEqual(sort_number(lift(q, order)).sort_number, k)

    def test_gap(self):
        self.assertEqual(gap_1_2(p("45231")), 1)
        self.assertEqual(gap_1_2(p("12")), 0)
        with self.assertRaises(ValueError):
            gap_1_2(p("1"))


class EnumerationTests(unittest.TestCase):
    def test_next_perm(self):
        self.assertEqual(enumeration.next_perm(p("1243")), p("1324"))
        self.assertIsNone(enumeration.next_perm(p("321")))
        self.assertEqual(len(list(enumeration.iter_permutations(5))), 120)

    def test_iter_all_lengths(self):
        self.assertEqual(
            [str(q) for q in enumeration.iter_all_lengths(3)],
            ["1", "12", "21", "123", "132", "213", "231", "312", "321"],
        )

    def test_prefix_partition(self):
        blocks = enumeration.prefix_partition(5, 2)
        self.assertEqual(len(blocks), 20)
        self.assertEqual(blocks[0], (p("12345"), 6))
        self.assertEqual(blocks[-1].start, p("54123"))
        self.assertEqual(sum(block.count for block in blocks), 120)
        with self.assertRaises(ValueError):
            enumeration.prefix_partition(5, 4)

    def test_small_histograms(self):
        self.assertEqual(enumeration.exhaustive_summary(3).histogram.as_dict(), {0: 4, 1: 1, 2: 1})
        self.assertEqual(enumeration.exhaustive_summary(4).histogram.counts, (8, 6, 7, 2, 1))

    def test_length_summaries(self):
        for n, (largest, count, average) in LENGTH_SUMMARIES.items():
            summary = enumeration.exhaustive_summary(n).summary
            self.assertEqual(summary.max_sort_number, largest, n)
            self.assertEqual(summary.count_at_max, count, n)
            self.assertEqual(summary.average, average, n)
            self.assertEqual(repr(summary.average), repr(average))

    def test_nine_summary(self):
        summary = enumeration.exhaustive_summary(9, threads=2).summary
        self.assertEqual(
            (summary.max_sort_number, summary.count_at_max, summary.average),
            (14, 2, 5.510821759259259),
        )
        self.assertEqual(summary.total, math.factorial(9))

    def test_seven_witness(self):
        histogram = enumeration.exhaustive_summary(7).histogram
        self.assertEqual((histogram[2], histogram[3], histogram[4]), (1046, 874, 939))
        self.assertIn((3, (1046, 874, 939)), enumeration.unimodality_witnesses(histogram))
        self.assertFalse(enumeration.is_unimodal(histogram))

    def test_periodic_counts(self):
        for n in range(1, 8):
            self.assertEqual(enumeration.exhaustive_summary(n).histogram[0], 2 ** (n - 1))

    def test_leading_entries(self):
        result = enumeration.exhaustive_summary(5)
        self.assertEqual(len(result.leading.histograms), 5)
        for histogram in result.leading.histograms:
            self.assertEqual(histogram.total, 24)
        self.assertEqual(result.leading.total, 120)
        self.assertEqual(result.leading.histogram(1)[2], 0)
        self.assertEqual(result.leading.histogram(5)[2], 0)

    def test_threads_do_not_change_results(self):
        for n in (3, 6, 9):
            single = enumeration.exhaustive_summary(n, threads=1)
            for threads in (2, 8):
                self.assertEqual(enumeration.exhaustive_summary(n, threads=threads), single, (n, threads))

    def test_range_histogram(self):
        full = enumeration.range_histogram(p("12345"), p("54321"))
        self.assertEqual(full, enumeration.exhaustive_summary(5).histogram)
        single = enumeration.range_histogram(p("45231"), p("45231"))
        self.assertEqual(single.as_dict(), {4: 1})
        with self.assertRaises(ValueError):
            enumeration.range_histogram(p("321"), p("123"))

    def test_histogram_merge(self):
        a = enumeration.SortHistogram(3, (1, 2))
        b = enumeration.SortHistogram(3, (0, 1, 1, 0))
        self.assertEqual(a.merge(b).counts, (1, 3, 1))
        self.assertEqual(b.counts, (0, 1, 1))
        with self.assertRaises(HistogramMismatch):
            enumeration.histogram_merge(a, enumeration.SortHistogram(4, (1,)))

    def test_histogram_grid(self):
        grid = enumeration.histogram_grid(
            [enumeration.SortHistogram(3, (4, 1, 1)), enumeration.SortHistogram(4, (8, 6, 7, 2, 1))]
        )
        self.assertEqual(len(grid[0]), enumeration.DEFAULT_COLUMNS)
        self.assertEqual(grid[1][:6], [8, 6, 7, 2, 1, 0])

    def test_block_scan_matches_reference(self):
        blocks = enumeration.prefix_partition(6, 1)
        counts = enumeration._scan_block((blocks[2].start.values, blocks[2].count))
        expected = {}
        for q in enumeration.iter_permutations(6):
            if q[0] == 3:
                k = sort_number(q).sort_number
                expected[k] = expected.get(k, 0) + 1
        self.assertEqual(enumeration.SortHistogram.from_mapping(6, expected).counts,
                         enumeration.SortHistogram(6, tuple(counts)).counts)

    def test_json_summary(self):
        payload = enumeration.exhaustive_summary(4).as_dict()
        self.assertEqual(payload["max"], 4)
        self.assertEqual(payload["sum"], 30)
        self.assertEqual(payload["average"], 1.25)
        self.assertEqual(payload["histogram"], {"0": 8, "1": 6, "2": 7, "3": 2, "4": 1})


class CheckpointTests(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.directory.name, "progress.txt")

    def tearDown(self):
        self.directory.cleanup()

    def write(self, text):
        with open(self.path, "w") as f:
            f.write(text)

    def test_finished_scan_is_marked_complete(self):
        result = enumeration.exhaustive_summary(5, checkpoint=self.path)
        with open(self.path) as f:
            self.assertEqual(f.readline().strip(), "n,5")
            self.assertEqual(f.readline().strip(), enumeration.COMPLETE_MARKER)
        self.assertEqual(enumeration.exhaustive_summary(5, checkpoint=self.path), result)

    def test_resume_matches_a_fresh_scan(self):
        n = 6
        blocks = enumeration.prefix_partition(n, enumeration.default_depth(n))
        partial = enumeration.Checkpoint(n, next_start=blocks[3].start)
        for block in blocks[:3]:
            partial.add(block.start[0], enumeration._scan_block((block.start.values, block.count)))
        partial.save(self.path)
        self.assertEqual(partial.total, 3 * math.factorial(n - 1))

        resumed = enumeration.exhaustive_summary(n, checkpoint=self.path)
        self.assertEqual(resumed, enumeration.exhaustive_summary(n))

    def test_checkpoint_of_another_length_is_rejected(self):
        enumeration.exhaustive_summary(5, checkpoint=self.path)
        with self.assertRaises(enumeration.CheckpointError):
            enumeration.exhaustive_summary(6, checkpoint=self.path)

    def test_complete_checkpoint_must_hold_every_permutation(self):
        self.write("n,6\ncomplete\n1,0,1\n")
        with self.assertRaises(enumeration.CheckpointError):
            enumeration.exhaustive_summary(6, checkpoint=self.path)

    def test_partial_checkpoint_must_match_finished_blocks(self):
        n = 6
        blocks = enumeration.prefix_partition(n, enumeration.default_depth(n))
        partial = enumeration.Checkpoint(n, next_start=blocks[3].start)
        for block in blocks[:2]:
            partial.add(block.start[0], enumeration._scan_block((block.start.values, block.count)))
        partial.save(self.path)
        with self.assertRaises(enumeration.CheckpointError):
            enumeration.exhaustive_summary(n, checkpoint=self.path)

    def test_dumps_and_loads(self):
        checkpoint = enumeration.Checkpoint(4, p("3124"), {1: {0: 4, 1: 2}, 2: {2: 6}})
        text = checkpoint.dumps()
        self.assertEqual(text.splitlines(), ["n,4", "3,1,2,4", "1,0,4", "1,1,2", "2,2,6"])
        loaded = enumeration.Checkpoint.loads(4, text)
        self.assertEqual(loaded.next_start, p("3124"))
        self.assertEqual(loaded.leading_counts, {1: {0: 4, 1: 2}, 2: {2: 6}})
        self.assertEqual(loaded.total, 12)

    def test_bad_checkpoints(self):
        for text in (
            "",
            "complete\n1,0,1",
            "n,4\n1,2,3",
            "n,5\ncomplete",
            "n,4\ncomplete\n9,1,1",
            "n,4\ncomplete\n1,-1,2",
            "n,4\ncomplete\n1,1,-2",
        ):
            with self.assertRaises(enumeration.CheckpointError, msg=text):
                enumeration.Checkpoint.loads(4, text)


class SamplingTests(unittest.TestCase):
    def test_streams_are_reproducible(self):
        first = sampling.random_perm(20, sampling.RngState.for_sample(7, 20, 3))
        second = sampling.random_perm(20, sampling.RngState.for_sample(7, 20, 3))
        other = sampling.random_perm(20, sampling.RngState.for_sample(7, 20, 4))
        self.assertEqual(first, second)
        self.assertNotEqual(first, other)
        self.assertEqual(sorted(first), list(range(1, 21)))

    def test_random_perm_is_uniform(self):
        rng = np.random.Generator(np.random.PCG64(12345))
        observed = {}
        for _ in range(6000):
            q = sampling.random_perm(3, rng)
            observed[q] = observed.get(q, 0) + 1
        self.assertEqual(len(observed), 6)
        _, p_value = stats.chisquare(list(observed.values()))
        self.assertGreater(p_value, 0.001)

    def test_random_perm_passes_chi_square_on_four(self):
        rng = np.random.Generator(np.random.PCG64(2024))
        observed = dict.fromkeys(enumeration.iter_permutations(4), 0)
        for _ in range(24000):
            observed[sampling.random_perm(4, rng)] += 1
        self.assertEqual(len(observed), 24)
        statistic, _ = stats.chisquare(list(observed.values()))
        self.assertLess(statistic, stats.chi2.ppf(0.999, 23))

    def test_random_perm_length_one(self):
        self.assertEqual(sampling.random_perm(1, sampling.RngState(0)), p("1"))
        with self.assertRaises(ValueError):
            sampling.random_perm(0, sampling.RngState(0))

    def test_t_quantile(self):
        self.assertAlmostEqual(sampling.t_quantile(0.995, 399), 2.5882, places=3)
        self.assertAlmostEqual(sampling.t_quantile(0.5, 7), 0.0)
        with self.assertRaises(ValueError):
            sampling.t_quantile(1.0, 7)

    def test_confidence_interval(self):
        low, high = sampling.confidence_interval(0.0, 1.0, 400, 0.99)
        self.assertAlmostEqual(low, -0.12941, places=4)
        self.assertAlmostEqual(high, 0.12941, places=4)
        low, high = sampling.confidence_interval(11.465, 3.2, 400)
        self.assertAlmostEqual((low + high) / 2, 11.465)

    def test_mean_sd(self):
        self.assertEqual(sampling.mean_sd([2, 4, 4, 4, 5, 5, 7, 9])[0], 5.0)
        self.assertAlmostEqual(sampling.mean_sd([2, 4, 4, 4, 5, 5, 7, 9])[1], math.sqrt(32 / 7))
        self.assertTrue(math.isnan(sampling.mean_sd([3])[1]))
        with self.assertRaises(ValueError):
            sampling.mean_sd([])

    def test_threads_do_not_change_samples(self):
        single = sampling.sample_sort_numbers(9, 120, seed=3, threads=1)
        pooled = sampling.sample_sort_numbers(9, 120, seed=3, threads=3)
        self.assertEqual(single, pooled)
        self.assertEqual(len(single), 120)

    def test_sample_stats(self):
        result, values = sampling.sample_stats(8, 200, seed=1)
        self.assertEqual(result.m, 200)
        self.assertLess(result.ci_low, result.mean)
        self.assertLess(result.mean, result.ci_high)
        self.assertEqual(result.mean, sum(values) / 200)
        with self.assertRaises(ValueError):
            sampling.sample_stats(8, 1)

    def test_intervals_cover_the_exact_average(self):
        exact = 7.37919314674523
        covered = 0
        for seed in range(100):
            result, _ = sampling.sample_stats(11, 1000, seed=seed, level=0.99)
            if result.ci_low <= exact <= result.ci_high:
                covered += 1
        self.assertGreaterEqual(covered, 95)

    def test_sample_report(self):
        results = sampling.sample_many([5, 6], 10, seed=2)
        text = sampling.dumps_sample_report(results, OutputFormat.csv)
        lines = text.splitlines()
        self.assertEqual(lines[0], "n,5,6")
        self.assertEqual([line.split(",")[0] for line in lines[1:5]], ["mean", "sd", "ci_low", "ci_high"])
        self.assertEqual(len(lines), 15)
        loaded = sampling.loads_sample_report(text)
        self.assertEqual([row["n"] for row in loaded], [5, 6])
        self.assertEqual(loaded[0]["mean"], results[0][0].mean)
        payload = json.loads(sampling.dumps_sample_report(results, OutputFormat.json))
        self.assertEqual(payload["lengths"][1]["sort_numbers"], list(results[1][1]))


class FitTests(unittest.TestCase):
    def test_exact_recovery(self):
        points = [(n, 2.0 * n ** 1.5) for n in (10, 20, 50, 100, 500)]
        fit = analysis.power_fit(points)
        self.assertAlmostEqual(fit.a, 2.0, delta=1e-9)
        self.assertAlmostEqual(fit.b, 1.5, delta=1e-9)
        self.assertAlmostEqual(fit.r, 1.0)
        self.assertEqual(len(analysis.residual_signs(fit)), 5)

    def test_scale_invariance(self):
        points = [(n, 0.4 * n ** 1.3 + (1 if n % 2 else -1)) for n in (10, 25, 50, 100, 200, 400)]
        fit = analysis.power_fit(points)
        scaled = analysis.power_fit([(n, 3 * y) for n, y in points])
        self.assertAlmostEqual(scaled.a, 3 * fit.a, delta=1e-6 * fit.a)
        self.assertAlmostEqual(scaled.b, fit.b, delta=1e-6)

    def test_constant_data_has_no_r(self):
        fit = analysis.power_fit([(1, 5.0), (2, 5.0), (3, 5.0)])
        self.assertIsNone(fit.r)
        self.assertAlmostEqual(fit.b, 0.0)

    def test_fit_errors(self):
        with self.assertRaises(FitError):
            analysis.power_fit([(1, 1.0), (2, 2.0)])
        with self.assertRaises(FitError):
            analysis.power_fit([(1, 1.0), (2, 0.0), (3, 1.0)])

    def test_original_scale_beats_loglog(self):
        fit = analysis.power_fit(KNOWN_AVERAGES)
        loglog_error = analysis.goodness(KNOWN_AVERAGES, (fit.loglog_a, fit.loglog_b))
        self.assertGreaterEqual(fit.r, loglog_error)

    def test_growth_exponent_from_computed_averages(self):
        points = [(n, enumeration.exhaustive_summary(n, threads=2).summary.average) for n in range(3, 10)]
        results = sampling.sample_many(cli.DEFAULT_N_LIST, 100, seed=sampling.DEFAULT_SEED, threads=2)
        points.extend((result.n, result.mean) for result, _ in results)
        fit = analysis.power_fit(points)
        self.assertGreaterEqual(fit.b, 1.28)
        self.assertLessEqual(fit.b, 1.42)
        self.assertGreaterEqual(fit.r, 0.999)

    def test_growth_exponent_of_known_averages(self):
        fit = analysis.power_fit(KNOWN_AVERAGES)
        self.assertGreaterEqual(fit.b, 1.28)
        self.assertLessEqual(fit.b, 1.42)
        self.assertGreaterEqual(fit.r, 0.999)


class ReportTests(unittest.TestCase):
    def test_csv_round_trip(self):
        summaries = [enumeration.exhaustive_summary(n).summary for n in range(1, 6)]
        report = analysis.length_summary_report(summaries)
        parsed = analysis.parse_report(analysis.dumps_report(report, OutputFormat.csv))
        self.assertEqual(parsed.columns, ("n", "max", "count_at_max", "sum", "average"))
        self.assertEqual(parsed.rows[4], (5, 6, 2, 253, 2.1083333333333334))

    def test_json_round_trip(self):
        report = analysis.histogram_report([enumeration.SortHistogram(3, (4, 1, 1))])
        parsed = analysis.parse_report(analysis.dumps_report(report, "json"), "json")
        self.assertEqual(parsed.rows, ((3, 0, 4), (3, 1, 1), (3, 2, 1)))
        self.assertEqual(parsed.columns, ("n", "k", "count"))

    def test_empty_reports_keep_their_columns(self):
        report = analysis.length_summary_report([])
        parsed = analysis.parse_report(analysis.dumps_report(report, "json"), "json")
        self.assertEqual(parsed.columns, report.columns)
        self.assertEqual(parsed.rows, ())
        self.assertEqual(parsed.extra, {})
        stream = io.StringIO()
        analysis.emit_report(report, stream, OutputFormat.csv)
        self.assertEqual(stream.getvalue(), "n,max,count_at_max,sum,average\n")

    def test_histogram_grid_report(self):
        histograms = [enumeration.exhaustive_summary(n).histogram for n in (3, 7)]
        report = analysis.histogram_grid_report(histograms)
        self.assertEqual(len(report.columns), enumeration.DEFAULT_COLUMNS + 2)
        self.assertEqual(report.columns[:3], ("n", "k0", "k1"))
        self.assertEqual(report.rows[1][:1] + report.rows[1][3:6], (7, 1046, 874, 939))
        self.assertEqual([row[-1] for row in report.rows], [True, False])

    def test_leading_entry_report(self):
        report = analysis.leading_entry_report(enumeration.exhaustive_summary(4).leading)
        self.assertEqual(report.columns, ("leading", "max", "count_at_max", "average"))
        self.assertEqual([row[0] for row in report.rows], [1, 2, 3, 4])

    def test_text_report_is_aligned(self):
        report = analysis.Report(("n", "value"), ((1, 10), (100, 2)))
        lines = analysis.dumps_report(report, OutputFormat.text).splitlines()
        self.assertEqual(len({len(line) for line in lines}), 1)

    def test_read_points_and_plot_data(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "points.csv")
            with open(path, "w") as f:
                f.write("n,average\n10,20\n20,40\n40,80\n")
            points = analysis.read_points(path)
            self.assertEqual(points, [(10.0, 20.0), (20.0, 40.0), (40.0, 80.0)])
            stream = io.StringIO()
            fit = analysis.power_fit(points)
            analysis.emit_report(analysis.fit_report(fit), stream)
            self.assertTrue(stream.getvalue().startswith("n,observed,predicted,residual"))
            self.assertEqual(analysis.plot_data(fit).splitlines()[0], "n,predicted")
        with self.assertRaises(analysis.SortNumberException):
            analysis.read_points(os.path.join(directory, "missing.csv"))


class VerifyTests(unittest.TestCase):
    def test_lower_bound_suite(self):
        report = verify.run_suite("thm42-lower", 20)
        self.assertTrue(report.passed)
        self.assertEqual(report.checks, 18)

    def test_leading_suite_counts(self):
        report = verify.run_suite("claim47-leading", 7)
        self.assertTrue(report.passed)
        expected = 1 + sum(2 * math.factorial(n - 1) for n in range(2, 8))
        self.assertEqual(report.checks, expected)

    def test_periodic_by_leading(self):
        report = verify.run_suite("claim48-periodic-by-leading", 3)
        self.assertTrue(report.passed)
        self.assertEqual(report.observations["3"], [1, 1, 2])

    def test_nonunimodal_witnesses(self):
        report = verify.run_suite("prop45-nonunimodal", 7)
        self.assertTrue(report.passed)
        self.assertEqual(report.checks, 2)
        self.assertIn([8, 6, 7], report.observations["4"])
        self.assertIn([1046, 874, 939], report.observations["7"])

    def test_exhaustive_suites(self):
        for name in (
            "thm43-upper",
            "lemma431-gap",
            "cor432-index",
            "index-monovariant",
            "valley-reversal",
            "periodic-index",
            "periodic-count",
            "prop46-doubling",
        ):
            report = verify.run_suite(name, 7)
            self.assertTrue(report.passed, (name, report.failures[:3]))

    def test_preimage_bound(self):
        report = verify.run_suite("preimage-bound", 7)
        self.assertTrue(report.passed)
        self.assertEqual(report.observations["4"], 4)

    def test_run_all(self):
        reports = verify.run_all(6)
        self.assertEqual([report.name for report in reports], verify.suite_names())
        self.assertTrue(all(report.passed for report in reports))
        self.assertNotIn("elapsed", reports[0].as_dict())
        self.assertIn("elapsed", reports[0].as_dict(timing=True))

    def test_suite_errors(self):
        with self.assertRaises(UnknownSuite):
            verify.run_suite("no-such-suite")
        with self.assertRaises(SuiteLimitExceeded):
            verify.run_suite("preimage-bound", 9)
        with self.assertRaises(SuiteLimitExceeded):
            verify.run_suite("thm43-upper", 13, force=True)
        with self.assertRaises(ValueError):
            verify.run_suite("thm42-lower", 2)

    def test_failures_are_recorded(self):
        report = verify.SuiteReport("demo", {})
        report.checks = 3
        report.absorb(0, [("123", 1, 2)])
        self.assertFalse(report.passed)
        self.assertEqual(report.failures[0], verify.SuiteFailure("123", "1", "2"))

    def test_preimages(self):
        found = verify.preimages(p("2431"))
        self.assertIn(p("1342"), found)
        self.assertEqual(found, sorted(found))
        self.assertTrue(all(sc231(q) == p("2431") for q in found))
        self.assertIn(p("1234"), verify.preimages(p("4321")))
        counts = verify.preimage_counts(4)
        self.assertEqual(sum(counts.values()), 24)
        self.assertEqual(max(counts.values()), 4)
        self.assertEqual(len(verify.image_graph(4)), 24)
        with self.assertRaises(SuiteLimitExceeded):
            verify.preimages(Permutation(range(1, 11)))


class CommandLineTests(unittest.TestCase):
    def run_cli(self, *argv):
        with mock.patch("sys.stdout", new_callable=io.StringIO) as out:
            code = cli.main(list(argv) + ["--threads", "1"])
        return code, out.getvalue()

    def test_sort_number(self):
        code, out = self.run_cli("sort-number", "45231")
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], "0  45231  index 1")
        self.assertEqual(lines[-1], "sort-number 4")

    def test_sort_number_json(self):
        code, out = self.run_cli("sort-number", "4,6,8,5,11,7,2,9,10,3,1", "--format", "json")
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)["sort_number"], 19)

    def test_trace(self):
        code, out = self.run_cli("trace", "13254")
        self.assertEqual(code, 0)
        self.assertIn("SC_231(13254) = 35421", out)

    def test_exhaustive_json(self):
        code, out = self.run_cli("exhaustive", "--n", "4", "--format", "json")
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertEqual((payload["max"], payload["count_at_max"], payload["average"]), (4, 1, 1.25))

    def test_exhaustive_text_with_leading(self):
        code, out = self.run_cli("exhaustive", "--n", "5", "--leading")
        self.assertEqual(code, 0)
        self.assertIn("2.1083333333333334", out)
        self.assertIn("leading", out)

    def test_verify_and_out_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "report.json")
            code, out = self.run_cli(
                "verify", "--suite", "periodic-count", "--max-n", "5", "--format", "json", "--out", path
            )
            self.assertEqual(code, 0)
            self.assertEqual(out, "")
            with open(path) as f:
                self.assertEqual(json.load(f)[0]["checks"], 5)

    def test_fit(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "points.csv")
            with open(path, "w") as f:
                f.write("".join("%s,%r\n" % (n, y) for n, y in KNOWN_AVERAGES))
            code, out = self.run_cli("fit", "--input", path, "--format", "json")
        self.assertEqual(code, 0)
        self.assertTrue(1.28 <= json.loads(out)["b"] <= 1.42)

    def test_sample_csv(self):
        code, out = self.run_cli("sample", "--n-list", "5,7", "--samples", "20", "--format", "csv")
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines()[0], "n,5,7")

    def test_preimages_and_graph(self):
        code, out = self.run_cli("preimages", "2431")
        self.assertEqual(code, 0)
        self.assertIn("1342", out)
        code, out = self.run_cli("graph", "--n", "3")
        self.assertEqual(out.splitlines()[0], "123 -> 321")

    def test_errors(self):
        with mock.patch("sys.stderr", new_callable=io.StringIO):
            code, _ = self.run_cli("sort-number", "1,1")
            self.assertEqual(code, 1)
            with self.assertRaises(SystemExit) as raised:
                self.run_cli("sample", "--level", "1.5")
            self.assertEqual(raised.exception.code, 2)
            with self.assertRaises(SystemExit) as raised:
                self.run_cli("verify", "--suite", "nope")
            self.assertEqual(raised.exception.code, 2)

    def test_exhaustive_length_range(self):
        code, out = self.run_cli("exhaustive", "--max-n", "5", "--format", "csv")
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], "n,max,count_at_max,sum,average")
        self.assertEqual(lines[5], "5,6,2,253,2.1083333333333334")
        self.assertEqual(lines[6], "")
        self.assertEqual(lines[7].split(",")[:3], ["n", "k0", "k1"])
        self.assertEqual(len(lines[7].split(",")), enumeration.DEFAULT_COLUMNS + 2)
        self.assertEqual(lines[11].split(",")[:6], ["4", "8", "6", "7", "2", "1"])
        self.assertEqual(lines[11].split(",")[-1], "False")
        self.assertEqual(lines[10].split(",")[-1], "True")

    def test_exhaustive_length_range_json(self):
        code, out = self.run_cli("exhaustive", "--n", "3", "--max-n", "4", "--format", "json")
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertEqual([row["n"] for row in payload["summaries"]["rows"]], [3, 4])
        self.assertEqual(payload["grid"]["rows"][1]["k2"], 7)

    def test_csv_for_text_commands(self):
        code, out = self.run_cli("trace", "13254", "--format", "csv")
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines()[:2], ["kind,value,pre_popped", "push,1,False"])
        code, out = self.run_cli("preimages", "4321", "--format", "csv")
        self.assertEqual(out.splitlines()[0], "preimage")
        self.assertIn("\"1,2,3,4\"", out.splitlines())
        code, out = self.run_cli("graph", "--n", "3", "--format", "csv")
        self.assertEqual(out.splitlines()[:2], ["permutation,image", "\"1,2,3\",\"3,2,1\""])
        code, out = self.run_cli("verify", "--suite", "periodic-count", "--max-n", "5", "--format", "csv")
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines(), ["suite,passed,checks,failures", "periodic-count,True,5,0"])

    def test_conflicting_exhaustive_options(self):
        with mock.patch("sys.stderr", new_callable=io.StringIO):
            for argv in (
                ("exhaustive", "--range", "123", "321", "--checkpoint", "progress.txt"),
                ("exhaustive", "--max-n", "5", "--checkpoint", "progress.txt"),
                ("exhaustive", "--max-n", "5", "--range", "123", "321"),
                ("exhaustive", "--max-n", "5", "--leading"),
            ):
                with self.assertRaises(SystemExit) as raised:
                    self.run_cli(*argv)
                self.assertEqual(raised.exception.code, 2, argv)

    def test_default_threads(self):
        with mock.patch.dict(os.environ, {cli.THREADS_ENV: "3"}):
            self.assertEqual(cli.default_threads(), 3)

    def test_default_threads_falls_back_below_one(self):
        for value in ("0", "-2", "many"):
            with mock.patch.dict(os.environ, {cli.THREADS_ENV: value}):
                with self.assertLogs("sortnumber.cli", "WARNING"):
                    self.assertEqual(cli.default_threads(), os.cpu_count() or 1)


if __name__ == "__main__":
    unittest.main()
