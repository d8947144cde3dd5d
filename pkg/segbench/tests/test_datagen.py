import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_array_equal

from ..src import netpbm
from ..src.datagen import (
    BUILDING,
    DOOR,
    FACADE_PALETTE,
    PAVEMENT,
    ROAD,
    SKY,
    TOY_PALETTE,
    VEGETATION,
    WINDOW,
    ClassPalette,
    LabeledImage,
    gen_facade_like,
    gen_toy,
    load_labeled_dir,
    sample_patch,
    save_labeled_image,
    split_images,
)
from ..src.errors import DataError, MissingFileError, ParameterError
from ..src.tensor_core import conv2d_forward

TWO_COLORS = ClassPalette((("ground", (0, 0, 0)), ("thing", (255, 255, 0)), ("other", (0, 255, 0))), background=0)


def write_pair(directory, name, labels_rgb):
    h, w = labels_rgb.shape[:2]
    netpbm.write(Path(directory) / f'{name}.ppm', np.full((h, w, 3), 128, dtype=np.uint8))
    netpbm.write(Path(directory) / f'{name}_labels.ppm', labels_rgb.astype(np.uint8))


class ToyTests(SimpleTestCase):
    def test_deterministic(self):
        a, b = gen_toy(7), gen_toy(7)
        assert_array_equal(a.image, b.image)
        assert_array_equal(a.labels, b.labels)
        self.assertFalse(np.array_equal(a.image, gen_toy(8).image))

    def test_class_shares(self):
        for seed in range(50):
            img = gen_toy(seed)
            counts = np.bincount(img.labels.ravel(), minlength=3)
            self.assertEqual(np.count_nonzero(counts), 3)
            self.assertTrue((counts / counts.sum() >= 0.10).all(), counts)
            self.assertEqual(img.num_classes, TOY_PALETTE.num_classes)
            self.assertEqual(img.channels, 1)

    def test_vertical_edge_filter_separates_classes(self):
        img = gen_toy(3)
        kernel = np.zeros((1, 1, 7, 7))
        kernel[0, 0, :, 2] = -1.0
        kernel[0, 0, :, 3] = 1.0
        response = np.abs(conv2d_forward(img.image, kernel, [0.0]))[0]
        centers = img.labels[3:-3, 3:-3]
        self.assertGreater(response[centers == 1].mean(), response[centers == 0].mean())

    def test_too_small(self):
        with self.assertRaises(ParameterError):
            gen_toy(0, 31, 64)

    def test_invariants_over_many_seeds(self):
        for seed in range(1000):
            img = gen_toy(seed, 32, 32)
            self.assertTrue(0 <= img.image.min() and img.image.max() <= 1)
            self.assertLess(img.labels.max(), 3)


class FacadeTests(SimpleTestCase):
    def test_deterministic(self):
        first, second = gen_facade_like(5, num_images=3), gen_facade_like(5, num_images=3)
        for a, b in zip(first, second):
            assert_array_equal(a.image, b.image)
            assert_array_equal(a.labels, b.labels)

    def test_image_does_not_depend_on_count(self):
        one = gen_facade_like(9, num_images=1)[0]
        many = gen_facade_like(9, num_images=4)[0]
        assert_array_equal(one.image, many.image)

    def test_class_coverage(self):
        images = gen_facade_like(0, num_images=100)
        present = [set(np.unique(img.labels).tolist()) for img in images]
        for labels in present:
            self.assertTrue(4 <= len(labels) <= 9)
        for cls in (BUILDING, ROAD, PAVEMENT, SKY, VEGETATION, WINDOW, DOOR):
            share = sum(cls in labels for labels in present) / len(present)
            self.assertGreaterEqual(share, 0.8, FACADE_PALETTE.names[cls])
        for img in images:
            self.assertEqual(img.image.shape, (3, 48, 48))
            self.assertTrue(0 <= img.image.min() and img.image.max() <= 1)

    def test_label_set_size_over_many_seeds(self):
        for seed in range(100):
            for img in gen_facade_like(seed, 32, 32, num_images=3):
                self.assertTrue(4 <= len(np.unique(img.labels)) <= 9, (seed, img.name))

    def test_invariants_over_many_seeds(self):
        seen = np.zeros(FACADE_PALETTE.num_classes)
        for seed in range(1000):
            img = gen_facade_like(seed, 32, 32)[0]
            self.assertEqual(img.image.shape, (3, 32, 32))
            self.assertEqual(img.labels.shape, (32, 32))
            self.assertTrue(0 <= img.image.min() and img.image.max() <= 1)
            self.assertTrue(0 <= img.labels.min() and img.labels.max() < FACADE_PALETTE.num_classes)
            self.assertGreaterEqual(len(np.unique(img.labels)), 4, seed)
            seen[np.unique(img.labels)] += 1
        for cls in (BUILDING, ROAD, PAVEMENT, SKY, VEGETATION, WINDOW, DOOR):
            self.assertGreaterEqual(seen[cls] / 1000, 0.8, FACADE_PALETTE.names[cls])

    def test_model_selection_split(self):
        train, test = split_images(gen_facade_like(1, 32, 32, 100), 50)
        self.assertEqual((len(train), len(test)), (50, 50))
        with self.assertRaises(ParameterError):
            split_images(train, 50)

    def test_count_must_be_positive(self):
        with self.assertRaises(ParameterError):
            gen_facade_like(0, num_images=0)


class PatchTests(SimpleTestCase):
    def test_whole_image(self):
        img = gen_toy(2, 33, 33)
        patch = sample_patch(img, 33, np.random.default_rng(0))
        assert_array_equal(patch.image, img.image)
        self.assertEqual(patch.label, img.labels[16, 16])

    def test_reproducible(self):
        img = gen_toy(2)
        a, b = np.random.default_rng(4), np.random.default_rng(4)
        for _ in range(20):
            pa, pb = sample_patch(img, 7, a), sample_patch(img, 7, b)
            assert_array_equal(pa.image, pb.image)
            self.assertEqual(pa.label, pb.label)

    def test_sampling_follows_pixel_shares(self):
        img = gen_toy(6)
        rng = np.random.default_rng(10)
        draws = np.bincount([sample_patch(img, 7, rng).label for _ in range(10_000)], minlength=3) / 10_000
        # centres of 7×7 windows range over the image minus a 3-pixel border
        shares = np.bincount(img.labels[3:-3, 3:-3].ravel(), minlength=3) / img.labels[3:-3, 3:-3].size
        self.assertTrue((np.abs(draws - shares) <= 0.05).all(), (draws, shares))

    def test_invalid_sizes(self):
        img = gen_toy(0)
        for patch in (6, 0, 65):
            with self.assertRaises(ParameterError):
                sample_patch(img, patch, np.random.default_rng(0))


class PaletteTests(SimpleTestCase):
    def test_decode_unknown_colors(self):
        rgb = np.array([[[255, 255, 0], [1, 2, 3]]])
        labels, unknown = TWO_COLORS.decode(rgb)
        assert_array_equal(labels, [[1, 0]])
        assert_array_equal(unknown, [[False, True]])

    def test_unknown_color_without_background(self):
        palette = ClassPalette((("a", (0, 0, 0)), ("b", (1, 1, 1))))
        with self.assertRaises(DataError):
            palette.decode(np.array([[[9, 9, 9]]]))

    def test_duplicate_colors(self):
        with self.assertRaises(DataError):
            ClassPalette((("a", (0, 0, 0)), ("b", (0, 0, 0))))

    def test_json_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            FACADE_PALETTE.save(Path(tmp) / 'palette.json')
            self.assertEqual(ClassPalette.load(Path(tmp) / 'palette.json'), FACADE_PALETTE)
        self.assertEqual(FACADE_PALETTE.num_classes, 9)
        self.assertEqual(FACADE_PALETTE.names[FACADE_PALETTE.background], 'various')

    def test_labeled_image_checks(self):
        with self.assertRaises(DataError):
            LabeledImage(np.zeros((1, 2, 2)), np.array([[0, 3], [0, 0]]), 3)
        with self.assertRaises(DataError):
            LabeledImage(np.zeros((1, 2, 2)), np.zeros((3, 2), dtype=int), 3)


class LoadTests(SimpleTestCase):
    def test_empty_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            images, report = load_labeled_dir(tmp, TWO_COLORS)
        self.assertEqual(images, [])
        self.assertEqual(len(report), 0)

    def test_two_color_fixture(self):
        labels_rgb = np.array([[[0, 0, 0], [255, 255, 0]], [[255, 255, 0], [0, 0, 0]]])
        with tempfile.TemporaryDirectory() as tmp:
            write_pair(tmp, 'fixture', labels_rgb)
            images, report = load_labeled_dir(tmp, TWO_COLORS)
        self.assertEqual(len(images), 1)
        assert_array_equal(images[0].labels, [[0, 1], [1, 0]])
        self.assertEqual(set(np.unique(images[0].labels)), {0, 1})
        self.assertEqual(len(report), 0)
        assert_array_equal(images[0].image, np.full((3, 2, 2), 128 / 255))

    def test_unknown_color_is_reported(self):
        labels_rgb = np.array([[[0, 255, 0], [10, 20, 30]]])
        with tempfile.TemporaryDirectory() as tmp:
            write_pair(tmp, 'odd', labels_rgb)
            with self.assertLogs('segbench', 'WARNING'):
                images, report = load_labeled_dir(tmp, TWO_COLORS)
        assert_array_equal(images[0].labels, [[2, 0]])
        self.assertEqual(len(report), 1)
        self.assertEqual(report.entries[0].pixels, 1)
        self.assertEqual(report.entries[0].colors, [(10, 20, 30)])

    def test_missing_label_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            netpbm.write(Path(tmp) / 'lonely.ppm', np.zeros((2, 2, 3), dtype=np.uint8))
            with self.assertRaisesMessage(MissingFileError, 'lonely'):
                load_labeled_dir(tmp, TWO_COLORS)

    def test_missing_image_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            netpbm.write(Path(tmp) / 'orphan_labels.ppm', np.zeros((2, 2, 3), dtype=np.uint8))
            with self.assertRaises(MissingFileError):
                load_labeled_dir(tmp, TWO_COLORS)

    def test_index_label_maps(self):
        with tempfile.TemporaryDirectory() as tmp:
            netpbm.write(Path(tmp) / 'gray.pgm', np.zeros((2, 3), dtype=np.uint8))
            netpbm.write(Path(tmp) / 'gray_labels.pgm', np.array([[0, 1, 2], [2, 1, 0]], dtype=np.uint8))
            images, _ = load_labeled_dir(tmp, TWO_COLORS)
        assert_array_equal(images[0].labels, [[0, 1, 2], [2, 1, 0]])
        self.assertEqual(images[0].channels, 1)

    def test_save_and_load_recovers_labels(self):
        originals = [gen_toy(4, 40, 36)] + gen_facade_like(4, 40, 36, 2)
        with tempfile.TemporaryDirectory() as tmp:
            for img, palette in zip(originals, (TOY_PALETTE, FACADE_PALETTE, FACADE_PALETTE)):
                directory = Path(tmp) / img.name
                save_labeled_image(img, directory, palette)
                loaded, report = load_labeled_dir(directory, palette)
                assert_array_equal(loaded[0].labels, img.labels)
                assert_array_equal(loaded[0].image, np.rint(img.image * 255) / 255)
                self.assertEqual(len(report), 0)
