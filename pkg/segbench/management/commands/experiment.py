from pathlib import Path

from django.core.management.base import CommandError

from ...src.experiment_manager import ExperimentManager
from ...src.reporting import experiment_metadata, write_sweep_csv
from ...src.utils import parse_int_list
from ..base import BenchCommand, output_dir

SWEEPS = {
    'scale-filters': ('k', '2,7,12,17,22', 'experiment_scale_filters'),
    'scale-layers': ('l', '0,1,2,3,4,5', 'experiment_scale_layers'),
}


class Command(BenchCommand):
    help = 'Runs a network-complexity sweep (scale-filters or scale-layers) for gd and quickprop'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='sweep', required=True)
        for name, (axis, default, _) in SWEEPS.items():
            sub = subparsers.add_parser(name)
            sub.add_argument('--config', help='experiment JSON file')
            sub.add_argument(f'--{axis}', dest='values', default=default, help='comma-separated values')
            sub.add_argument('--epochs', type=int)
            sub.add_argument('--repetitions', type=int)
            sub.add_argument('--seed', type=int, dest='base_seed')
            sub.add_argument('--workers', type=int)
            sub.add_argument('--out', help='CSV output path')

    def handle(self, *args, **options):
        if options.get('sweep') not in SWEEPS:
            raise CommandError('choose scale-filters or scale-layers', returncode=1)
        axis, _, method = SWEEPS[options['sweep']]
        values = parse_int_list(options['values'])
        cfg = self.load_experiment(
            options['config'],
            epochs=options['epochs'],
            repetitions=options['repetitions'],
            base_seed=options['base_seed'],
            workers=options['workers'],
            output=options['out'],
        )
        out = Path(cfg.output or output_dir() / f"{cfg.name}-{options['sweep']}.csv")

        manager = ExperimentManager(cfg.workers)
        sweep = getattr(manager, method)(cfg, values)
        metadata = experiment_metadata(cfg, sweep=options['sweep'], values=','.join(map(str, values)))
        metadata.pop('optimizer')
        write_sweep_csv(sweep.rows, out, metadata)

        for value, optimizer, reason in sweep.failures:
            self.stderr.write(self.style.ERROR(f"{axis}={value} {optimizer}: {reason}"))
        for value in values:
            gap = sweep.gap(value)
            if gap is not None:
                self.stdout.write(f"{axis}={value}: quickprop - gd train loss = {gap:.6f}")
        self.success(f"スイープ結果を書き出しました: {out}")
