"""
Full-length benchmark runs on the shipped presets. They take from minutes (toy) to hours
(scale_filters), so they only run with SEGBENCH_PROTOCOL_TESTS=1:

    SEGBENCH_PROTOCOL_TESTS=1 python manage.py test segbench.tests.test_protocols
"""
import os
import unittest
from pathlib import Path

from django.test import SimpleTestCase

from ..src.config import load_config
from ..src.experiment_manager import ExperimentManager
from ..src.metrics import Phase
from ..src.optim import OptimizerName

CONFIG_DIR = Path(__file__).resolve().parent.parent.parent / 'configs'

protocol = unittest.skipUnless(
    os.getenv('SEGBENCH_PROTOCOL_TESTS') == '1', 'set SEGBENCH_PROTOCOL_TESTS=1 to run the full presets'
)


@protocol
class ToyProtocolTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cfg = load_config(CONFIG_DIR / 'toy.json')
        cls.comparison = ExperimentManager(cfg.workers).compare_optimizers(cfg)

    def test_both_optimizers_learn_the_task(self):
        for optimizer, mean in self.comparison.final_means(Phase.TEST).items():
            self.assertGreaterEqual(mean['overall_acc'], 0.70, optimizer.value)

    def test_gd_ahead_on_mean_class_accuracy(self):
        means = self.comparison.final_means(Phase.TEST)
        gap = means[OptimizerName.GD]['mean_class_acc'] - means[OptimizerName.QUICKPROP]['mean_class_acc']
        self.assertGreaterEqual(gap, 0.10)

    def test_gd_lower_train_loss_on_most_seeds(self):
        rate = self.comparison.win_rate(OptimizerName.GD, OptimizerName.QUICKPROP, Phase.TRAIN)
        self.assertGreaterEqual(rate, 0.8)


@protocol
class ScaleFiltersProtocolTests(SimpleTestCase):
    def test_gap_grows_with_filters(self):
        cfg = load_config(CONFIG_DIR / 'scale_filters.json')
        sweep = ExperimentManager(cfg.workers).experiment_scale_filters(cfg, [2, 12, 22])
        self.assertEqual(sweep.failures, [])
        self.assertGreaterEqual(sweep.gap(22), sweep.gap(2))
