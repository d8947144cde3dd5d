import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_array_equal

from ..src.errors import DataError, DimensionError, UndefinedMetricError
from ..src.metrics import (
    ConfusionMatrix,
    MetricRecord,
    Phase,
    mean_class_accuracy,
    overall_accuracy,
    running_loss,
)


class ConfusionMatrixTests(SimpleTestCase):
    def test_identical_maps_fill_the_diagonal(self):
        labels = np.array([[0, 1], [2, 1]])
        cm = ConfusionMatrix(3).accumulate(labels, labels)
        assert_array_equal(cm.counts, np.diag([1, 2, 1]))
        self.assertEqual(cm.total, 4)

    def test_single_pixel(self):
        cm = ConfusionMatrix(3).accumulate([[1]], [[2]])
        self.assertEqual(cm.counts[1, 2], 1)
        self.assertEqual(cm.total, 1)

    def test_background_is_skipped(self):
        cm = ConfusionMatrix(3, background=0).accumulate(np.zeros((4, 4), int), np.ones((4, 4), int))
        self.assertEqual(cm.total, 0)
        cm.accumulate([[0, 2]], [[1, 1]])
        self.assertEqual(cm.counts[2, 1], 1)
        self.assertEqual(cm.total, 1)

    def test_out_of_range(self):
        with self.assertRaises(DataError):
            ConfusionMatrix(2).accumulate([[2]], [[0]])
        with self.assertRaises(DataError):
            ConfusionMatrix(2).accumulate([[0]], [[-1]])
        with self.assertRaises(DimensionError):
            ConfusionMatrix(2).accumulate([[0, 1]], [[0]])

    def test_merge(self):
        a = ConfusionMatrix.from_counts([[1, 2], [3, 4]])
        b = ConfusionMatrix.from_counts([[4, 3], [2, 1]])
        assert_array_equal(a.merge(b).counts, [[5, 5], [5, 5]])
        with self.assertRaises(DimensionError):
            a.merge(ConfusionMatrix(3))


class AccuracyTests(SimpleTestCase):
    def test_overall(self):
        self.assertEqual(overall_accuracy(ConfusionMatrix.from_counts([[5, 0], [0, 5]])), 1.0)
        self.assertEqual(overall_accuracy(ConfusionMatrix.from_counts([[9, 1], [4, 6]])), 0.75)
        self.assertEqual(overall_accuracy(ConfusionMatrix.from_counts([[0, 3], [2, 0]])), 0.0)
        with self.assertRaises(UndefinedMetricError):
            overall_accuracy(ConfusionMatrix(2))

    def test_mean_class(self):
        self.assertAlmostEqual(mean_class_accuracy(ConfusionMatrix.from_counts([[9, 1], [4, 6]])), 0.75)
        self.assertAlmostEqual(mean_class_accuracy(ConfusionMatrix.from_counts([[9, 1], [0, 0]])), 0.9)
        self.assertEqual(mean_class_accuracy(ConfusionMatrix.from_counts(np.diag([3, 1, 7]))), 1.0)
        with self.assertRaises(UndefinedMetricError):
            mean_class_accuracy(ConfusionMatrix(3))

    def test_equal_rows_make_both_accuracies_agree(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            counts = np.array([rng.multinomial(20, np.ones(4) / 4) for _ in range(4)])
            cm = ConfusionMatrix.from_counts(counts)
            self.assertAlmostEqual(overall_accuracy(cm), mean_class_accuracy(cm))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            counts = rng.integers(0, 10, (5, 5))
            perm = rng.permutation(5)
            original = ConfusionMatrix.from_counts(counts)
            permuted = ConfusionMatrix.from_counts(counts[perm][:, perm])
            self.assertAlmostEqual(overall_accuracy(original), overall_accuracy(permuted))
            self.assertAlmostEqual(mean_class_accuracy(original), mean_class_accuracy(permuted))


class RunningLossTests(SimpleTestCase):
    def test_examples(self):
        loss = running_loss()
        loss.add(1.0, 10)
        loss.add(0.0, 10)
        self.assertEqual(loss.mean(), 0.5)

        loss = running_loss()
        loss.add(2.0, 1)
        loss.add(0.0, 3)
        self.assertEqual(loss.mean(), 0.5)

        loss = running_loss()
        loss.add(0.3, 7)
        self.assertAlmostEqual(loss.mean(), 0.3)
        self.assertEqual(loss.pixels, 7)

    def test_order_invariance(self):
        rng = np.random.default_rng(2)
        values = rng.uniform(0, 5, 200)
        pixels = rng.integers(1, 100, 200)
        forward, reverse = running_loss(), running_loss()
        for v, p in zip(values, pixels):
            forward.add(v, p)
        for v, p in zip(values[::-1], pixels[::-1]):
            reverse.add(v, p)
        self.assertEqual(forward.mean(), reverse.mean())

    def test_empty_and_invalid(self):
        with self.assertRaises(UndefinedMetricError):
            running_loss().mean()
        with self.assertRaises(DataError):
            running_loss().add(1.0, 0)


class RecordTests(SimpleTestCase):
    def test_train_sorts_before_test(self):
        records = [
            MetricRecord('b', 'gd', 1, Phase.TEST, 0.1, 0.5, 0.5),
            MetricRecord('a', 'gd', 2, Phase.TRAIN, 0.1, 0.5, 0.5),
            MetricRecord('b', 'gd', 1, Phase.TRAIN, 0.1, 0.5, 0.5),
            MetricRecord('a', 'gd', 1, Phase.TEST, 0.1, 0.5, 0.5),
        ]
        ordered = [(r.run_id, r.epoch, r.phase.value) for r in sorted(records, key=MetricRecord.sort_key)]
        self.assertEqual(ordered, [('a', 1, 'test'), ('a', 2, 'train'), ('b', 1, 'train'), ('b', 1, 'test')])
