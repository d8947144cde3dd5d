from pathlib import Path

from ...src.experiment_manager import SWEEP_OPTIMIZERS, ExperimentManager
from ...src.metrics import Phase
from ...src.optim import OptimizerName
from ...src.reporting import experiment_metadata, write_csv
from ..base import BenchCommand, output_dir


class Command(BenchCommand):
    help = 'Trains the same configuration with gd and quickprop on paired seeds and compares them'

    def add_arguments(self, parser):
        parser.add_argument('--config', help='experiment JSON file')
        parser.add_argument('--epochs', type=int)
        parser.add_argument('--iterations', type=int, dest='iterations_per_epoch')
        parser.add_argument('--seed', type=int, dest='base_seed')
        parser.add_argument('--repetitions', type=int)
        parser.add_argument('--workers', type=int)
        parser.add_argument('--out', help='CSV output path')

    def handle(self, *args, **options):
        cfg = self.load_experiment(
            options['config'],
            epochs=options['epochs'],
            iterations_per_epoch=options['iterations_per_epoch'],
            base_seed=options['base_seed'],
            repetitions=options['repetitions'],
            workers=options['workers'],
            output=options['out'],
        )
        out = Path(cfg.output or output_dir() / f'{cfg.name}-compare.csv')

        comparison = ExperimentManager(cfg.workers).compare_optimizers(cfg)
        records = [record for result in comparison.results.values() for record in result.records]
        metadata = experiment_metadata(
            cfg,
            optimizers=','.join(optimizer.value for optimizer in SWEEP_OPTIMIZERS),
            diverged=','.join(str(result.diverged) for result in comparison.results.values()),
        )
        metadata.pop('optimizer')
        write_csv(records, out, metadata)

        gd, quickprop = OptimizerName.GD, OptimizerName.QUICKPROP
        for phase in Phase:
            means = comparison.final_means(phase)
            for optimizer, mean in means.items():
                self.stdout.write(
                    f"{phase.value} {optimizer.value}: loss={mean['loss']:.6f} "
                    f"overall_acc={mean['overall_acc']:.4f} mean_class_acc={mean['mean_class_acc']:.4f}"
                )
            gap = means[gd]['mean_class_acc'] - means[quickprop]['mean_class_acc']
            self.stdout.write(f"{phase.value}: gd - quickprop mean_class_acc = {100 * gap:.1f} points")

        seeds = comparison.paired_seeds(gd, quickprop)
        rate = comparison.win_rate(gd, quickprop)
        if rate is not None:
            self.stdout.write(f"gd lower final train loss on {rate * len(seeds):.0f} of {len(seeds)} paired seeds")
        self.success(f"比較結果を書き出しました: {out}")
