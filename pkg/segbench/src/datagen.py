"""
Labeled images: the synthetic toy and facade-like generators, the color palettes, and
loading/saving image pairs (``name.ppm`` or ``name.pgm`` with ``name_labels.ppm``).
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import netpbm
from .errors import DataError, MissingFileError, ParameterError
from .tensor_core import real_type

logger = logging.getLogger(__name__)

LABEL_SUFFIX = "_labels"
IMAGE_EXTENSIONS = (".ppm", ".pgm")
PALETTE_FILENAME = "palette.json"

MIN_TOY_SIZE = 32
TOY_BACKGROUND_LEVEL = 0.1
TOY_STRIPE_AMPLITUDE = 0.8
TOY_STRIPE_PERIOD = 4
TOY_NOISE = 0.05

# LabelMeFacade class order; "various" marks undefined areas
VARIOUS, BUILDING, CAR, DOOR, PAVEMENT, ROAD, SKY, VEGETATION, WINDOW = range(9)


@dataclass
class LabeledImage:
    image: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str = ""

    def __post_init__(self):
        self.image = np.ascontiguousarray(self.image, dtype=real_type)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.image.ndim != 3:
            raise DataError(f"{self.name or 'image'}: expected [C, H, W], got shape {self.image.shape}")
        if self.labels.shape != self.image.shape[1:]:
            raise DataError(
                f"{self.name or 'image'}: label map {self.labels.shape} does not match "
                f"image H×W {self.image.shape[1:]}"
            )
        if self.image.min() < 0 or self.image.max() > 1:
            raise DataError(f"{self.name or 'image'}: pixel values outside [0, 1]")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise DataError(f"{self.name or 'image'}: labels outside [0, {self.num_classes})")

    @property
    def channels(self):
        return self.image.shape[0]

    @property
    def height(self):
        return self.image.shape[1]

    @property
    def width(self):
        return self.image.shape[2]


@dataclass(frozen=True)
class ClassPalette:
    classes: tuple[tuple[str, tuple[int, int, int]], ...]
    background: int | None = None

    def __post_init__(self):
        classes = tuple((str(name), tuple(int(v) for v in rgb)) for name, rgb in self.classes)
        object.__setattr__(self, "classes", classes)
        colors = [rgb for _, rgb in classes]
        if len(set(colors)) != len(colors):
            raise DataError("palette colors must be unique")
        if any(len(rgb) != 3 or not all(0 <= v <= 255 for v in rgb) for rgb in colors):
            raise DataError("palette colors must be RGB triples in [0, 255]")
        if self.background is not None and not 0 <= self.background < len(classes):
            raise DataError(f"background index {self.background} outside the palette")

    @property
    def num_classes(self):
        return len(self.classes)

    @property
    def names(self):
        return [name for name, _ in self.classes]

    def colors(self):
        return np.array([rgb for _, rgb in self.classes], dtype=np.uint8)

    def encode(self, labels):
        return self.colors()[np.asarray(labels)]

    def decode(self, rgb):
        """
        Class index per pixel plus a mask of the pixels whose color is not in the palette; those
        pixels get the background class.
        """
        rgb = np.asarray(rgb, dtype=np.uint32)
        packed = (rgb[..., 0] << 16) | (rgb[..., 1] << 8) | rgb[..., 2]
        codes, inverse = np.unique(packed, return_inverse=True)
        lookup = {(r << 16) | (g << 8) | b: index for index, (_, (r, g, b)) in enumerate(self.classes)}
        table = np.array([lookup.get(int(code), -1) for code in codes], dtype=np.int64)
        labels = table[inverse.reshape(packed.shape)]
        unknown = labels < 0
        if unknown.any():
            if self.background is None:
                raise DataError("label colors outside the palette and no background class to map them to")
            labels[unknown] = self.background
        return labels, unknown

    def to_dict(self):
        return {
            "classes": [{"name": name, "rgb": list(rgb)} for name, rgb in self.classes],
            "background": self.background,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                tuple((entry["name"], tuple(entry["rgb"])) for entry in data["classes"]),
                data.get("background"),
            )
        except (KeyError, TypeError) as e:
            raise DataError(f"invalid palette description: {e}") from e

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path):
        try:
            with open(path, "r") as f:
                return cls.from_dict(json.load(f))
        except FileNotFoundError:
            raise MissingFileError(f"palette file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: invalid palette JSON ({e})") from e


TOY_PALETTE = ClassPalette(
    (("background", (0, 0, 0)), ("vertical", (255, 0, 0)), ("horizontal", (0, 0, 255))),
    background=0,
)

FACADE_PALETTE = ClassPalette(
    (
        ("various", (0, 0, 0)),
        ("building", (128, 0, 0)),
        ("car", (128, 0, 128)),
        ("door", (128, 128, 0)),
        ("pavement", (128, 128, 128)),
        ("road", (128, 64, 0)),
        ("sky", (0, 128, 128)),
        ("vegetation", (0, 128, 0)),
        ("window", (0, 0, 128)),
    ),
    background=VARIOUS,
)


def _check_size(width, height, minimum=MIN_TOY_SIZE):
    for name, value in (("width", width), ("height", height)):
        if not isinstance(value, (int, np.integer)) or value < minimum:
            raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")


def gen_toy(seed, width=64, height=64):
    """
    Single-channel image with three classes: a vertically striped rectangle (class 1) in the
    left half, a horizontally striped one (class 2) in the right half, flat noisy background.
    """
    _check_size(width, height)
    rng = np.random.default_rng(seed)
    labels = np.zeros((height, width), dtype=np.int64)
    half = width // 2
    for cls, (x_lo, x_hi) in ((1, (0, half)), (2, (half, width))):
        span = x_hi - x_lo
        rect_w = int(rng.integers(math.ceil(0.55 * span), math.floor(0.9 * span) + 1))
        rect_h = int(rng.integers(math.ceil(0.4 * height), math.floor(0.8 * height) + 1))
        x0 = int(rng.integers(x_lo, x_hi - rect_w + 1))
        y0 = int(rng.integers(0, height - rect_h + 1))
        labels[y0:y0 + rect_h, x0:x0 + rect_w] = cls

    on = TOY_STRIPE_PERIOD // 2
    xs = np.arange(width)
    ys = np.arange(height)[:, None]
    vertical = np.broadcast_to(TOY_BACKGROUND_LEVEL + TOY_STRIPE_AMPLITUDE * (xs % TOY_STRIPE_PERIOD < on), labels.shape)
    horizontal = np.broadcast_to(TOY_BACKGROUND_LEVEL + TOY_STRIPE_AMPLITUDE * (ys % TOY_STRIPE_PERIOD < on), labels.shape)
    image = np.full(labels.shape, TOY_BACKGROUND_LEVEL)
    image = np.where(labels == 1, vertical, image)
    image = np.where(labels == 2, horizontal, image)
    image = np.clip(image + rng.uniform(-TOY_NOISE, TOY_NOISE, labels.shape), 0.0, 1.0)
    return LabeledImage(image[None], labels, TOY_PALETTE.num_classes, name=f"toy_{seed}")


class _Canvas:
    def __init__(self, rng, width, height):
        self.rng = rng
        self.width = width
        self.height = height
        self.image = np.zeros((3, height, width))
        self.labels = np.zeros((height, width), dtype=np.int64)

    def paint(self, mask, cls, color, noise):
        color = np.asarray(color, dtype=float)[:, None]
        count = int(mask.sum())
        self.image[:, mask] = color + self.rng.uniform(-noise, noise, (3, count))
        self.labels[mask] = cls

    def rect(self, y0, y1, x0, x1):
        mask = np.zeros(self.labels.shape, dtype=bool)
        mask[max(y0, 0):max(y1, 0), max(x0, 0):max(x1, 0)] = True
        return mask


def _facade_image(rng, width, height, name):
    canvas = _Canvas(rng, width, height)
    ys, xs = np.mgrid[0:height, 0:width]

    sky_end = int(rng.integers(max(2, round(0.1 * height)), round(0.25 * height) + 1))
    ground = int(rng.integers(round(0.7 * height), round(0.8 * height) + 1))
    pave_end = min(ground + int(rng.integers(2, max(3, round(0.1 * height)) + 1)), height - 2)

    # 空
    sky = canvas.rect(0, sky_end, 0, width)
    canvas.paint(sky, SKY, (0.55, 0.75, 0.95), 0.02)
    canvas.image[2, sky] -= 0.15 * ys[sky] / max(sky_end, 1)

    # 建物
    wall = np.asarray(rng.uniform((0.45, 0.3, 0.25), (0.7, 0.55, 0.45)))
    building = canvas.rect(sky_end, ground, 0, width)
    canvas.paint(building, BUILDING, wall, 0.04)
    canvas.image[:, building & (ys % 4 == 0)] -= 0.1

    if rng.random() < 0.3:
        bw, bh = int(rng.integers(2, max(3, width // 6))), int(rng.integers(2, max(3, height // 8)))
        by = int(rng.integers(sky_end, max(sky_end + 1, ground - bh)))
        bx = int(rng.integers(0, width - bw))
        canvas.paint(canvas.rect(by, by + bh, bx, bx + bw), VARIOUS, rng.uniform(0, 1, 3), 0.1)

    pavement = canvas.rect(ground, pave_end, 0, width)
    canvas.paint(pavement, PAVEMENT, (0.62, 0.62, 0.6), 0.03)
    canvas.image[:, pavement & (xs % 6 == 0)] -= 0.15

    road = canvas.rect(pave_end, height, 0, width)
    canvas.paint(road, ROAD, (0.25, 0.25, 0.27), 0.05)
    road_h = height - pave_end
    if road_h >= 3:
        lane = pave_end + road_h // 2
        canvas.image[:, lane, (np.arange(width) % 8) < 4] = 0.9

        if rng.random() < 0.5:
            car_h = min(road_h, max(2, height // 12))
            car_w = max(3, width // 6)
            cy = int(rng.integers(pave_end, height - car_h + 1))
            cx = int(rng.integers(0, width - car_w + 1))
            canvas.paint(canvas.rect(cy, cy + car_h, cx, cx + car_w), CAR, rng.uniform(0.1, 0.9, 3), 0.03)

    door_h = max(4, round(0.15 * height))
    door_w = max(2, width // 10)
    door_x = int(rng.integers(2, width - door_w - 1))

    if rng.random() < 0.9:
        for _ in range(int(rng.integers(1, 3))):
            rx = rng.uniform(width / 12, width / 6)
            ry = rng.uniform(height / 12, height / 8)
            cx = rng.uniform(0, width)
            cy = rng.uniform(ground - ry, ground)
            blob = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
            canvas.paint(blob, VEGETATION, (0.2, 0.5, 0.15), 0.08)

    # 窓
    win_w = max(2, width // 10)
    win_h = max(3, (ground - sky_end) // 5)
    top, limit = sky_end + 2, ground - door_h - 1
    rows = list(range(top, limit - win_h + 1, win_h + 2))
    if not rows:
        rows, win_h = [sky_end + 1], max(1, min(win_h, ground - door_h - sky_end - 1))
    for wy in rows:
        for wx in range(2, width - win_w - 1, win_w + max(2, win_w // 2) + 1):
            canvas.paint(canvas.rect(wy, wy + win_h, wx, wx + win_w), WINDOW, (0.15, 0.2, 0.32), 0.04)

    door = canvas.rect(ground - door_h, ground, door_x, door_x + door_w)
    canvas.paint(door, DOOR, (0.3, 0.18, 0.1), 0.03)
    canvas.image[:, door & (xs % 2 == 0)] += 0.05

    image = np.clip(canvas.image, 0.0, 1.0)
    return LabeledImage(image, canvas.labels, FACADE_PALETTE.num_classes, name=name)


def gen_facade_like(seed, width=48, height=48, num_images=1):
    """
    Street-facade stand-ins: sky band, building with a window grid and a door, pavement and road
    strips, optional vegetation, cars and undefined patches. Image i is generated from its own
    child of ``SeedSequence(seed)``.
    """
    _check_size(width, height)
    if not isinstance(num_images, (int, np.integer)) or num_images < 1:
        raise ParameterError(f"num_images must be an integer >= 1, got {num_images!r}")
    children = np.random.SeedSequence(seed).spawn(num_images)
    return [
        _facade_image(np.random.default_rng(child), width, height, f"facade_{seed}_{index:03d}")
        for index, child in enumerate(children)
    ]


def split_images(images, n_train):
    if not 0 < n_train < len(images):
        raise ParameterError(f"cannot split {len(images)} images into {n_train} for training and the rest")
    return list(images[:n_train]), list(images[n_train:])


class Patch(NamedTuple):
    image: np.ndarray
    label: int
    labels: np.ndarray


def sample_patch(img, patch, rng):
    """Uniformly placed ``patch × patch`` window fully inside the image, with its center label."""
    if not isinstance(patch, (int, np.integer)) or patch < 1 or patch % 2 == 0:
        raise ParameterError(f"patch size must be a positive odd integer, got {patch!r}")
    if patch > min(img.height, img.width):
        raise ParameterError(f"patch size {patch} exceeds image size {img.height}×{img.width}")
    y = int(rng.integers(0, img.height - patch + 1))
    x = int(rng.integers(0, img.width - patch + 1))
    labels = img.labels[y:y + patch, x:x + patch]
    return Patch(img.image[:, y:y + patch, x:x + patch], int(labels[patch // 2, patch // 2]), labels)


@dataclass
class UnknownColors:
    path: Path
    pixels: int
    colors: list


@dataclass
class LoadReport:
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)


def _read_image(path):
    image = netpbm.read(path).astype(real_type) / 255.0
    if image.ndim == 2:
        return image[None]
    return np.ascontiguousarray(image.transpose(2, 0, 1))


def _read_labels(path, palette, report):
    pixels = netpbm.read(path)
    if pixels.ndim == 2:
        labels = pixels.astype(np.int64)
        if labels.max() >= palette.num_classes:
            raise DataError(f"{path}: class index {labels.max()} outside the {palette.num_classes}-class palette")
        return labels
    labels, unknown = palette.decode(pixels)
    if unknown.any():
        colors = sorted({tuple(int(v) for v in rgb) for rgb in pixels[unknown]})
        report.entries.append(UnknownColors(Path(path), int(unknown.sum()), colors))
        logger.warning("%s: %d pixels with unknown colors %s mapped to background", path, unknown.sum(), colors)
    return labels


def _partner(directory, stem, suffixes):
    for ext in IMAGE_EXTENSIONS:
        candidate = directory / f"{stem}{suffixes}{ext}"
        if candidate.exists():
            return candidate
    return None


def load_labeled_dir(image_dir, palette):
    """
    Load every ``name.ppm``/``name.pgm`` + ``name_labels.ppm``/``.pgm`` pair in a directory.
    Returns the images and a LoadReport listing the label files with colors outside the palette.
    """
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise MissingFileError(f"data directory not found: {image_dir}")
    files = sorted(p for p in image_dir.iterdir() if p.suffix in IMAGE_EXTENSIONS)
    label_files = [p for p in files if p.stem.endswith(LABEL_SUFFIX)]
    image_files = [p for p in files if not p.stem.endswith(LABEL_SUFFIX)]

    for label_path in label_files:
        stem = label_path.stem[: -len(LABEL_SUFFIX)]
        if _partner(image_dir, stem, "") is None:
            raise MissingFileError(f"missing image for {label_path}: expected {image_dir / stem}.ppm")

    report = LoadReport()
    images = []
    for image_path in image_files:
        label_path = _partner(image_dir, image_path.stem, LABEL_SUFFIX)
        if label_path is None:
            raise MissingFileError(
                f"missing label file for {image_path}: expected {image_dir / image_path.stem}{LABEL_SUFFIX}.ppm"
            )
        image = _read_image(image_path)
        labels = _read_labels(label_path, palette, report)
        if labels.shape != image.shape[1:]:
            raise DataError(f"{label_path}: size {labels.shape} does not match {image_path} {image.shape[1:]}")
        images.append(LabeledImage(image, labels, palette.num_classes, name=image_path.stem))
    return images, report


def save_labeled_image(img, directory, palette, name=None):
    """Write ``name.pgm`` (one channel) or ``name.ppm`` (three channels) plus ``name_labels.ppm``."""
    directory = Path(directory)
    name = name or img.name
    pixels = np.rint(img.image * 255).astype(np.uint8)
    if img.channels == 1:
        image_path = directory / f"{name}.pgm"
        netpbm.write(image_path, pixels[0])
    elif img.channels == 3:
        image_path = directory / f"{name}.ppm"
        netpbm.write(image_path, pixels.transpose(1, 2, 0))
    else:
        raise DataError(f"cannot store a {img.channels}-channel image as PGM/PPM")
    label_path = directory / f"{name}{LABEL_SUFFIX}.ppm"
    netpbm.write(label_path, palette.encode(img.labels))
    return image_path, label_path
