"""Single training runs: patch-wise weight updates followed by a full evaluation per epoch."""

import functools
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .config import BatchMode, DatasetKind
from .datagen import (
    FACADE_PALETTE,
    PALETTE_FILENAME,
    TOY_PALETTE,
    ClassPalette,
    gen_facade_like,
    gen_toy,
    load_labeled_dir,
    sample_patch,
    split_images,
)
from .errors import DataError, DimensionError, NumericError
from .metrics import (
    ConfusionMatrix,
    MetricRecord,
    Phase,
    RunningLoss,
    mean_class_accuracy,
    overall_accuracy,
)
from .nn_graph import (
    Network,
    backward,
    center_crop,
    forward,
    one_hot,
    predict,
    quadratic_loss,
)
from .optim import make_optimizer

logger = logging.getLogger(__name__)


class Datasets(NamedTuple):
    train: list
    test: list
    palette: ClassPalette

    @property
    def channels(self):
        return self.train[0].channels


def load_datasets(dataset_cfg):
    if dataset_cfg.kind is DatasetKind.TOY:
        seed, n_train = dataset_cfg.seed, dataset_cfg.train_images
        images = [
            gen_toy(seed + index, dataset_cfg.width, dataset_cfg.height)
            for index in range(n_train + dataset_cfg.test_images)
        ]
        train, test = images[:n_train], images[n_train:]
        return Datasets(train, test, TOY_PALETTE)

    if dataset_cfg.kind is DatasetKind.FACADE:
        images = gen_facade_like(
            dataset_cfg.seed, dataset_cfg.width, dataset_cfg.height,
            dataset_cfg.train_images + dataset_cfg.test_images,
        )
        train, test = split_images(images, dataset_cfg.train_images)
        return Datasets(train, test, FACADE_PALETTE)

    palette_path = dataset_cfg.palette or Path(dataset_cfg.train_dir) / PALETTE_FILENAME
    palette = ClassPalette.load(palette_path)
    train, _ = load_labeled_dir(dataset_cfg.train_dir, palette)
    test, _ = load_labeled_dir(dataset_cfg.test_dir or dataset_cfg.train_dir, palette)
    if not train or not test:
        raise DataError(f"no labeled images found in {dataset_cfg.train_dir} / {dataset_cfg.test_dir}")
    return Datasets(train, test, palette)


@functools.lru_cache(maxsize=256)
def fitted_input_shape(spec, height, width):
    """Largest ``h × w`` not exceeding the given size that the network accepts."""
    for h in range(height, 0, -1):
        for w in range(width, 0, -1):
            try:
                spec.output_shape(h, w)
            except DimensionError:
                continue
            return h, w
    raise DimensionError(f"image of {height}×{width} is too small for this network")


def evaluate(net, images, background=None):
    """
    Pure evaluation pass: pixel-averaged quadratic loss and the confusion matrix over all images.
    Labels are center-cropped to the network's output size.
    """
    num_classes = net.spec.num_classes
    cm = ConfusionMatrix(num_classes, background)
    running = RunningLoss()
    for img in images:
        h, w = fitted_input_shape(net.spec, img.height, img.width)
        scores, _ = forward(net, center_crop(img.image, h, w))
        _, out_h, out_w = scores.shape
        labels = center_crop(center_crop(img.labels, h, w), out_h, out_w)
        running.add(quadratic_loss(scores, one_hot(labels, num_classes)), out_h * out_w)
        cm.accumulate(labels, predict(scores))
    return running.mean(), cm


@dataclass
class RunResult:
    run_id: str
    optimizer: str
    seed: int
    records: list = field(default_factory=list)
    network: Network | None = None
    seconds: float = 0.0
    update_losses: list = field(default_factory=list)
    failed: bool = False
    last_finite_epoch: int = 0
    failure: str | None = None


class DivergenceError(NumericError):
    pass


def _check_loss(loss, threshold, where):
    if not np.isfinite(loss) or loss > threshold:
        raise DivergenceError(f"loss {loss} at {where} exceeds the divergence threshold {threshold:g}")


class _Sampler:
    def __init__(self, net, images, patch, rng):
        self.net = net
        self.images = images
        self.patch = patch
        self.rng = rng
        _, self.out_h, self.out_w = net.spec.output_shape(patch, patch)
        for img in images:
            if min(img.height, img.width) < patch:
                raise DimensionError(f"{img.name}: {img.height}×{img.width} image is smaller than patch {patch}")

    def gradient(self, count, running):
        """Average gradient over ``count`` sampled patches; their losses go into ``running``."""
        net = self.net
        total = np.zeros(net.num_parameters)
        for _ in range(count):
            img = self.images[int(self.rng.integers(len(self.images)))]
            patch = sample_patch(img, self.patch, self.rng)
            scores, cache = forward(net, patch.image)
            target = one_hot(center_crop(patch.labels, self.out_h, self.out_w), net.spec.num_classes)
            running.add(quadratic_loss(scores, target), self.out_h * self.out_w)
            total += backward(net, cache, target)
        return total / count if count > 1 else total


def run_training(cfg, seed, data=None, run_id=None):
    """
    Train one network from scratch. Every random draw comes from ``seed``: one child stream
    initialises the weights, the other samples the training patches.
    """
    data = data or load_datasets(cfg.dataset)
    spec = cfg.architecture.build(data.palette.num_classes, data.channels)
    init_seq, sample_seq = np.random.SeedSequence(seed).spawn(2)
    net = Network.initialize(spec, np.random.default_rng(init_seq))
    optimizer = make_optimizer(cfg.optimizer, cfg.optim, net.num_parameters)
    patch = cfg.patch_size or spec.min_patch_size()
    sampler = _Sampler(net, data.train, patch, np.random.default_rng(sample_seq))
    background = data.palette.background if cfg.exclude_background else None
    batch = cfg.batch_size if cfg.batch_mode is BatchMode.ACCUMULATE else 1

    result = RunResult(
        run_id=run_id or f"{cfg.name}-{cfg.optimizer.value}-s{seed:04d}",
        optimizer=cfg.optimizer.value,
        seed=seed,
        network=net,
    )
    logger.info("run %s: %d parameters, patch %d, %s×%d", result.run_id, net.num_parameters,
                patch, cfg.batch_mode.value, batch)
    start = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        try:
            update_loss = RunningLoss()
            for iteration in range(cfg.iterations_per_epoch):
                gradient = sampler.gradient(batch, update_loss)
                weights = optimizer.step(net.weights, gradient)
                if not np.isfinite(weights).all():
                    raise DivergenceError(f"non-finite weights after iteration {iteration + 1}")
                net.set_weights(weights)
            _check_loss(update_loss.mean(), cfg.divergence_threshold, f"epoch {epoch} updates")
            optimizer.log_epoch(epoch)

            epoch_records = []
            for phase, images in ((Phase.TRAIN, data.train), (Phase.TEST, data.test)):
                loss, cm = evaluate(net, images, background)
                _check_loss(loss, cfg.divergence_threshold, f"epoch {epoch} {phase.value}")
                epoch_records.append(MetricRecord(
                    result.run_id, result.optimizer, epoch, phase,
                    loss, overall_accuracy(cm), mean_class_accuracy(cm),
                ))
        except NumericError as e:
            result.failed = True
            result.failure = str(e)
            logger.warning("run %s diverged in epoch %d: %s", result.run_id, epoch, e)
            break
        result.records.extend(epoch_records)
        result.update_losses.append(update_loss.mean())
        result.last_finite_epoch = epoch
        train, test = epoch_records
        logger.info(
            "run %s epoch %d: update loss %.6f, train loss %.6f acc %.4f/%.4f, test loss %.6f acc %.4f/%.4f",
            result.run_id, epoch, update_loss.mean(), train.loss, train.overall_acc,
            train.mean_class_acc, test.loss, test.overall_acc, test.mean_class_acc,
        )

    result.seconds = time.perf_counter() - start
    logger.info("run %s finished in %.1fs%s", result.run_id, result.seconds,
                " (diverged)" if result.failed else "")
    return result
