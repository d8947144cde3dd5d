from pathlib import Path

from ...src.experiment_manager import ExperimentManager
from ...src.metrics import Phase
from ...src.nn_graph import save_network
from ...src.optim import OptimizerName
from ...src.reporting import experiment_metadata, write_csv
from ..base import BenchCommand, output_dir


class Command(BenchCommand):
    help = 'Trains a network with seeded repetitions and writes per-epoch metrics as CSV'

    def add_arguments(self, parser):
        parser.add_argument('--config', help='experiment JSON file')
        parser.add_argument('--optimizer', choices=[name.value for name in OptimizerName])
        parser.add_argument('--lr', type=float, dest='learning_rate')
        parser.add_argument('--mu', type=float)
        parser.add_argument('--momentum', type=float)
        parser.add_argument('--epochs', type=int)
        parser.add_argument('--iterations', type=int, dest='iterations_per_epoch')
        parser.add_argument('--seed', type=int, dest='base_seed')
        parser.add_argument('--repetitions', type=int)
        parser.add_argument('--workers', type=int)
        parser.add_argument('--out', help='CSV output path')
        parser.add_argument('--save-model', help='write the first successful network as JSON')

    def handle(self, *args, **options):
        cfg = self.load_experiment(
            options['config'],
            optimizer=options['optimizer'],
            learning_rate=options['learning_rate'],
            mu=options['mu'],
            momentum=options['momentum'],
            epochs=options['epochs'],
            iterations_per_epoch=options['iterations_per_epoch'],
            base_seed=options['base_seed'],
            repetitions=options['repetitions'],
            workers=options['workers'],
            output=options['out'],
        )
        out = Path(cfg.output or output_dir() / f'{cfg.name}-{cfg.optimizer.value}.csv')

        result = ExperimentManager(cfg.workers).run_repetitions(cfg)
        write_csv(result.records, out, experiment_metadata(cfg, diverged=result.diverged))

        if result.diverged:
            self.warning(f"{len(result.runs)} 回中 {result.diverged} 回の学習が発散しました")
        if options['save_model']:
            run = result.successful_runs()[0]
            save_network(run.network, options['save_model'])
            self.success(f"モデルを保存しました: {options['save_model']} ({run.run_id})")

        for phase in Phase:
            row = result.final_row(phase)
            self.stdout.write(
                f"{phase.value}: loss={row.mean['loss']:.6f} "
                f"overall_acc={row.mean['overall_acc']:.4f} "
                f"mean_class_acc={row.mean['mean_class_acc']:.4f} (epoch {row.epoch}, {row.runs} runs)"
            )
        self.success(f"結果を書き出しました: {out}")
