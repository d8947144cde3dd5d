from pathlib import Path

from ...src.datagen import PALETTE_FILENAME, ClassPalette, load_labeled_dir
from ...src.errors import DataError
from ...src.metrics import mean_class_accuracy, overall_accuracy
from ...src.nn_graph import load_network
from ...src.training import evaluate
from ..base import BenchCommand


class Command(BenchCommand):
    help = 'Evaluates a saved model on a directory of labeled images'

    def add_arguments(self, parser):
        parser.add_argument('--model', required=True, help='model JSON written by train --save-model')
        parser.add_argument('--data', required=True, help='directory with name.ppm / name_labels.ppm pairs')
        parser.add_argument('--palette', help=f'palette JSON (default: DATA/{PALETTE_FILENAME})')
        parser.add_argument('--exclude-background', action='store_true')

    def handle(self, *args, **options):
        net = load_network(options['model'])
        data_dir = Path(options['data'])
        palette = ClassPalette.load(options['palette'] or data_dir / PALETTE_FILENAME)
        if palette.num_classes != net.spec.num_classes:
            raise DataError(
                f"palette has {palette.num_classes} classes, model predicts {net.spec.num_classes}"
            )
        images, report = load_labeled_dir(data_dir, palette)
        if not images:
            raise DataError(f"no labeled images found in {data_dir}")
        if len(report):
            self.warning(f"未知の色を含むラベル画像が {len(report)} 枚ありました（背景として扱います）")

        background = palette.background if options['exclude_background'] else None
        loss, cm = evaluate(net, images, background)
        self.stdout.write(f"images={len(images)} pixels={cm.total}")
        self.stdout.write(f"loss={loss:.9g}")
        self.stdout.write(f"overall_acc={overall_accuracy(cm):.9g}")
        self.stdout.write(f"mean_class_acc={mean_class_accuracy(cm):.9g}")
        self.success('評価が完了しました')
