import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from ..src.config import (
    ArchitectureConfig,
    ArchitectureKind,
    BatchMode,
    DatasetKind,
    ExperimentConfig,
    load_config,
)
from ..src.errors import ConfigError
from ..src.nn_graph import count_parameters
from ..src.optim import OptimConfig, OptimizerName


class ExperimentConfigTests(SimpleTestCase):
    def test_defaults(self):
        cfg = ExperimentConfig()
        self.assertIs(cfg.optimizer, OptimizerName.GD)
        self.assertIs(cfg.batch_mode, BatchMode.PER_SAMPLE)
        self.assertEqual((cfg.epochs, cfg.iterations_per_epoch, cfg.repetitions), (10, 2000, 1))

    def test_from_dict_layers_over_defaults(self):
        defaults = ExperimentConfig(optim=OptimConfig(learning_rate=0.5), workers=3)
        cfg = ExperimentConfig.from_dict({
            'name': 'x',
            'dataset': {'kind': 'facade', 'train_images': 4},
            'architecture': {'kind': 'facade', 'k': 3},
            'optimizer': {'name': 'quickprop', 'mu': 2.0},
            'epochs': 2,
        }, defaults)
        self.assertIs(cfg.dataset.kind, DatasetKind.FACADE)
        self.assertEqual(cfg.dataset.train_images, 4)
        self.assertIs(cfg.optimizer, OptimizerName.QUICKPROP)
        self.assertEqual((cfg.optim.learning_rate, cfg.optim.mu), (0.5, 2.0))
        self.assertEqual((cfg.epochs, cfg.workers), (2, 3))

    def test_unknown_keys(self):
        for data in ({'epoch': 3}, {'dataset': {'colour': 1}}, {'optimizer': {'beta': 0.9}}):
            with self.assertRaises(ConfigError):
                ExperimentConfig.from_dict(data)

    def test_invalid_values(self):
        for data in (
            {'epochs': 0},
            {'repetitions': -1},
            {'optimizer': {'name': 'adam'}},
            {'optimizer': {'learning_rate': 0}},
            {'batch_mode': 'per_sample', 'batch_size': 4},
            {'patch_size': 8},
            {'dataset': {'kind': 'external'}},
        ):
            with self.assertRaises(ConfigError, msg=data):
                ExperimentConfig.from_dict(data)

    def test_override(self):
        cfg = ExperimentConfig().override(learning_rate=0.2, mu=None, epochs=4, optimizer='momentum')
        self.assertEqual(cfg.optim.learning_rate, 0.2)
        self.assertEqual(cfg.optim.mu, OptimConfig().mu)
        self.assertEqual(cfg.epochs, 4)
        self.assertIs(cfg.optimizer, OptimizerName.MOMENTUM)
        with self.assertRaises(ConfigError):
            cfg.override(momentum=1.5)

    def test_dict_round_trip(self):
        cfg = ExperimentConfig.from_dict({
            'dataset': {'kind': 'facade'},
            'architecture': {'kind': 'pooled', 'width': 5},
            'batch_mode': 'accumulate',
            'batch_size': 4,
        })
        self.assertEqual(ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))), cfg)

    def test_load_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'cfg.json'
            path.write_text(json.dumps({'name': 'file', 'epochs': 3}))
            self.assertEqual(load_config(path).epochs, 3)
            path.write_text('{not json')
            with self.assertRaises(ConfigError):
                load_config(path)
            path.write_text('[1, 2]')
            with self.assertRaises(ConfigError):
                load_config(path)
            with self.assertRaises(ConfigError):
                load_config(Path(tmp) / 'missing.json')

    def test_presets_load(self):
        root = Path(__file__).resolve().parent.parent.parent / 'configs'
        for name in ('toy', 'facade', 'scale_filters', 'scale_layers'):
            load_config(root / f'{name}.json')
        self.assertEqual(load_config(root / 'toy.json').repetitions, 20)


class ArchitectureConfigTests(SimpleTestCase):
    def test_build(self):
        self.assertEqual(count_parameters(ArchitectureConfig().build(3, 1)), 109)
        self.assertEqual(count_parameters(ArchitectureConfig(ArchitectureKind.FACADE, k=2).build(9, 3)), 1257 + 1193 * 2)
        self.assertEqual(ArchitectureConfig('pooled', width=4).build(9, 3).num_classes, 9)

    def test_toy_architecture_needs_toy_data(self):
        with self.assertRaises(ConfigError):
            ArchitectureConfig().build(9, 3)
