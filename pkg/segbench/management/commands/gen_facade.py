from pathlib import Path

from ...src.datagen import FACADE_PALETTE, PALETTE_FILENAME, gen_facade_like, save_labeled_image
from ...src.utils import parse_size
from ..base import BenchCommand


class Command(BenchCommand):
    help = 'Generates synthetic facade images with color-coded label maps'

    def add_arguments(self, parser):
        parser.add_argument('--out', required=True, help='output directory')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--count', type=int, default=100)
        parser.add_argument('--size', default='48x48', help='WIDTHxHEIGHT')

    def handle(self, *args, **options):
        width, height = parse_size(options['size'])
        out = Path(options['out'])
        images = gen_facade_like(options['seed'], width, height, options['count'])
        for img in images:
            save_labeled_image(img, out, FACADE_PALETTE)
        FACADE_PALETTE.save(out / PALETTE_FILENAME)
        self.success(f"ファサード画像を {len(images)} 枚生成しました: {out}")
