import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from ..src.config import ExperimentConfig, load_config
from ..src.errors import BenchError
from ..src.optim import OptimConfig

# verbosity 0..3 -> segbench logger level
LOG_LEVELS = {0: logging.WARNING, 1: None, 2: logging.DEBUG, 3: logging.DEBUG}


def settings_defaults():
    """ExperimentConfig defaults taken from settings (.env)."""
    return ExperimentConfig(
        optim=OptimConfig(
            learning_rate=getattr(settings, 'SEGBENCH_LEARNING_RATE', 0.01),
            mu=getattr(settings, 'SEGBENCH_MU', 1.75),
            momentum=getattr(settings, 'SEGBENCH_MOMENTUM', 0.9),
        ),
        workers=getattr(settings, 'SEGBENCH_WORKERS', 1),
        divergence_threshold=getattr(settings, 'SEGBENCH_DIVERGENCE_THRESHOLD', 1e6),
    )


def output_dir():
    return Path(getattr(settings, 'SEGBENCH_OUTPUT_DIR', 'results'))


class BenchCommand(BaseCommand):
    """
    Shared behaviour of the segbench commands: BenchError becomes a CommandError carrying its
    exit code, and argparse usage errors exit with 1 instead of 2.
    """

    def run_from_argv(self, argv):
        self._options_parsed = False
        try:
            super().run_from_argv(argv)
        except SystemExit as e:
            # argparse は使い方の誤りで 2 を返す
            if e.code == 2 and not self._options_parsed:
                raise SystemExit(1) from None
            raise

    def execute(self, *args, **options):
        self._options_parsed = True
        level = LOG_LEVELS.get(options.get('verbosity', 1))
        if level is not None:
            logging.getLogger('segbench').setLevel(level)
        try:
            return super().execute(*args, **options)
        except BenchError as e:
            raise CommandError(str(e), returncode=e.exit_code) from e

    def load_experiment(self, path, **overrides):
        defaults = settings_defaults()
        cfg = load_config(path, defaults) if path else defaults
        return cfg.override(**overrides)

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))

    def warning(self, message):
        self.stdout.write(self.style.WARNING(message))
