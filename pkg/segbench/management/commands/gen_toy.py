from ...src.datagen import PALETTE_FILENAME, TOY_PALETTE, gen_toy, save_labeled_image
from ...src.utils import parse_size
from ..base import BenchCommand


class Command(BenchCommand):
    help = 'Generates the striped toy image (toy.pgm, toy_labels.ppm, palette.json)'

    def add_arguments(self, parser):
        parser.add_argument('--out', required=True, help='output directory')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--size', default='64x64', help='WIDTHxHEIGHT')

    def handle(self, *args, **options):
        width, height = parse_size(options['size'])
        img = gen_toy(options['seed'], width, height)
        image_path, label_path = save_labeled_image(img, options['out'], TOY_PALETTE, name='toy')
        TOY_PALETTE.save(image_path.parent / PALETTE_FILENAME)
        self.success(f"トイ画像を生成しました: {image_path} ({width}x{height}, seed={options['seed']})")
