"""
Declarative network specifications, forward/backward passes over a flat weight vector, the
quadratic loss, and the concrete architectures used by the experiments.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataError, DimensionError, MissingFileError, ParameterError, StaleCacheError
from .tensor_core import (
    as_tensor,
    conv2d_backward,
    conv2d_forward,
    maxpool2x2,
    maxpool2x2_backward,
    real_type,
    sigmoid_backward,
    sigmoid_forward,
    tanh_backward,
    tanh_forward,
    upsample_nn,
    upsample_nn_backward,
)

logger = logging.getLogger(__name__)

MODEL_FORMAT = "segbench.network/1"

FACADE_NUM_CLASSES = 9
FACADE_CONV1_FILTERS = 16
FACADE_CONV3_FILTERS = 32
FACADE_FC_PER_K = 12
# FC1 width 12·16 = 192, the repeated fully connected layer of the layer-scaling family
LAYER_SCALING_K = 16


class LayerKind(str, Enum):
    CONV = "conv"
    MAXPOOL = "maxpool"
    UPSAMPLE = "upsample"
    TANH = "tanh"
    SIGMOID = "sigmoid"


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    out_channels: int | None = None
    kernel_h: int | None = None
    kernel_w: int | None = None
    factor: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LayerKind(self.kind))
        if self.kind is LayerKind.CONV:
            for name in ("out_channels", "kernel_h", "kernel_w"):
                value = getattr(self, name)
                if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                    raise ParameterError(f"conv layer: {name} must be an integer >= 1, got {value!r}")
        elif self.kind is LayerKind.UPSAMPLE:
            if not isinstance(self.factor, int) or isinstance(self.factor, bool) or self.factor < 1:
                raise ParameterError(f"upsample layer: factor must be an integer >= 1, got {self.factor!r}")

    @classmethod
    def conv(cls, out_channels, kernel_h, kernel_w=None):
        return cls(LayerKind.CONV, out_channels, kernel_h, kernel_h if kernel_w is None else kernel_w)

    @classmethod
    def maxpool(cls):
        return cls(LayerKind.MAXPOOL)

    @classmethod
    def upsample(cls, factor):
        return cls(LayerKind.UPSAMPLE, factor=factor)

    @classmethod
    def tanh(cls):
        return cls(LayerKind.TANH)

    @classmethod
    def sigmoid(cls):
        return cls(LayerKind.SIGMOID)

    def to_dict(self):
        data = {"kind": self.kind.value}
        if self.kind is LayerKind.CONV:
            data.update(out_channels=self.out_channels, kernel_h=self.kernel_h, kernel_w=self.kernel_w)
        elif self.kind is LayerKind.UPSAMPLE:
            data["factor"] = self.factor
        return data

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**data)
        except (TypeError, ValueError) as e:
            if isinstance(e, ParameterError):
                raise
            raise DataError(f"invalid layer description {data!r}: {e}") from e


@dataclass(frozen=True)
class NetworkSpec:
    input_channels: int
    layers: tuple[LayerSpec, ...]
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.input_channels < 1 or self.num_classes < 1:
            raise ParameterError("input_channels and num_classes must be >= 1")
        channels = self.input_channels
        for layer in self.layers:
            if layer.kind is LayerKind.CONV:
                channels = layer.out_channels
        if channels != self.num_classes:
            raise ParameterError(
                f"network ends with {channels} channels but declares num_classes={self.num_classes}"
            )

    def conv_input_channels(self):
        """Input channel count of every Conv layer, keyed by layer index."""
        channels = self.input_channels
        result = {}
        for index, layer in enumerate(self.layers):
            if layer.kind is LayerKind.CONV:
                result[index] = channels
                channels = layer.out_channels
        return result

    def output_shape(self, height, width):
        channels = self.input_channels
        for index, layer in enumerate(self.layers):
            if layer.kind is LayerKind.CONV:
                if layer.kernel_h > height or layer.kernel_w > width:
                    raise DimensionError(
                        f"layer {index} ({layer.kind.value} {layer.kernel_h}×{layer.kernel_w}): "
                        f"spatial size {height}×{width} collapses below 1"
                    )
                channels = layer.out_channels
                height, width = height - layer.kernel_h + 1, width - layer.kernel_w + 1
            elif layer.kind is LayerKind.MAXPOOL:
                if height % 2 or width % 2:
                    raise DimensionError(
                        f"layer {index} (maxpool): spatial size {height}×{width} is not even"
                    )
                height, width = height // 2, width // 2
            elif layer.kind is LayerKind.UPSAMPLE:
                height, width = height * layer.factor, width * layer.factor
        return channels, height, width

    def min_patch_size(self, limit=257):
        """Smallest odd square input size for which every layer keeps a valid shape."""
        for size in range(1, limit + 1, 2):
            try:
                self.output_shape(size, size)
            except DimensionError:
                continue
            return size
        raise DimensionError(f"no odd input size up to {limit} fits this network")

    def to_dict(self):
        return {
            "input_channels": self.input_channels,
            "num_classes": self.num_classes,
            "layers": [layer.to_dict() for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                input_channels=int(data["input_channels"]),
                layers=tuple(LayerSpec.from_dict(layer) for layer in data["layers"]),
                num_classes=int(data["num_classes"]),
            )
        except (KeyError, TypeError) as e:
            raise DataError(f"invalid network description: {e}") from e


@dataclass(frozen=True)
class ParamBlock:
    layer_index: int
    offset: int
    kernel_shape: tuple[int, int, int, int]

    @property
    def kernel_size(self):
        return int(np.prod(self.kernel_shape))

    @property
    def bias_offset(self):
        return self.offset + self.kernel_size

    @property
    def end(self):
        return self.bias_offset + self.kernel_shape[0]


def parameter_blocks(spec):
    blocks = []
    offset = 0
    for index, in_channels in spec.conv_input_channels().items():
        layer = spec.layers[index]
        block = ParamBlock(index, offset, (layer.out_channels, in_channels, layer.kernel_h, layer.kernel_w))
        blocks.append(block)
        offset = block.end
    return blocks


def count_parameters(spec):
    return sum(block.end - block.offset for block in parameter_blocks(spec))


class Network:
    def __init__(self, spec, weights=None):
        self.spec = spec
        self.blocks = {block.layer_index: block for block in parameter_blocks(spec)}
        self.num_parameters = count_parameters(spec)
        self.generation = 0
        self._weights = np.zeros(self.num_parameters, dtype=real_type)
        if weights is not None:
            self.set_weights(weights)
            self.generation = 0

    @classmethod
    def initialize(cls, spec, rng):
        """Uniform kernels in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""
        weights = np.zeros(count_parameters(spec), dtype=real_type)
        for block in parameter_blocks(spec):
            _, in_channels, kh, kw = block.kernel_shape
            bound = 1.0 / np.sqrt(in_channels * kh * kw)
            weights[block.offset:block.bias_offset] = rng.uniform(-bound, bound, block.kernel_size)
        return cls(spec, weights)

    @property
    def weights(self):
        view = self._weights.view()
        view.flags.writeable = False
        return view

    def set_weights(self, weights):
        weights = np.array(weights, dtype=real_type).reshape(-1)
        if weights.shape[0] != self.num_parameters:
            raise DimensionError(
                f"weight vector has length {weights.shape[0]}, network needs {self.num_parameters}"
            )
        self._weights = weights
        self.generation += 1

    def kernels(self, layer_index):
        block = self.blocks[layer_index]
        return self._weights[block.offset:block.bias_offset].reshape(block.kernel_shape)

    def bias(self, layer_index):
        block = self.blocks[layer_index]
        return self._weights[block.bias_offset:block.end]

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "spec": self.spec.to_dict(),
            "weights": [float(value) for value in self._weights],
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != MODEL_FORMAT:
            raise DataError(f"unsupported model format {data.get('format')!r}")
        spec = NetworkSpec.from_dict(data["spec"])
        return cls(spec, data["weights"])


def save_network(net, path):
    # float repr is the shortest string that round-trips exactly
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(net.to_dict(), f, allow_nan=False)


def load_network(path):
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise MissingFileError(f"model file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not a model JSON document ({e})") from e
    return Network.from_dict(data)


@dataclass
class ForwardCache:
    network: Network
    generation: int
    activations: list = field(default_factory=list)
    masks: dict = field(default_factory=dict)

    @property
    def scores(self):
        return self.activations[-1]


def forward(net, input):
    input = as_tensor(input, 3, "input")
    spec = net.spec
    if input.shape[0] != spec.input_channels:
        raise DimensionError(
            f"input has {input.shape[0]} channels, network expects {spec.input_channels}"
        )
    spec.output_shape(input.shape[1], input.shape[2])

    cache = ForwardCache(net, net.generation, [input])
    x = input
    for index, layer in enumerate(spec.layers):
        if layer.kind is LayerKind.CONV:
            x = conv2d_forward(x, net.kernels(index), net.bias(index))
        elif layer.kind is LayerKind.MAXPOOL:
            x, cache.masks[index] = maxpool2x2(x)
        elif layer.kind is LayerKind.UPSAMPLE:
            x = upsample_nn(x, layer.factor)
        elif layer.kind is LayerKind.TANH:
            x = tanh_forward(x)
        else:
            x = sigmoid_forward(x)
        cache.activations.append(x)
    return x, cache


def _check_same_shape(scores, target):
    if scores.shape != target.shape:
        raise DimensionError(f"scores shape {scores.shape} != target shape {target.shape}")
    if scores.ndim != 3:
        raise DimensionError(f"scores must be [K, H, W], got shape {scores.shape}")


def quadratic_loss(scores, target):
    """Per-pixel ½·Σ_c (score − target)², averaged over the H'·W' output pixels."""
    scores = np.asarray(scores, dtype=real_type)
    target = np.asarray(target, dtype=real_type)
    _check_same_shape(scores, target)
    pixels = scores.shape[1] * scores.shape[2]
    diff = scores - target
    return float(0.5 * np.sum(diff * diff) / pixels)


def quadratic_loss_grad(scores, target):
    scores = np.asarray(scores, dtype=real_type)
    target = np.asarray(target, dtype=real_type)
    _check_same_shape(scores, target)
    return (scores - target) / (scores.shape[1] * scores.shape[2])


def backward(net, cache, target):
    if cache.network is not net or cache.generation != net.generation:
        raise StaleCacheError(
            f"forward cache generation {cache.generation} does not match network "
            f"generation {net.generation}"
        )
    delta = quadratic_loss_grad(cache.scores, target)
    gradient = np.zeros(net.num_parameters, dtype=real_type)
    for index in range(len(net.spec.layers) - 1, -1, -1):
        layer = net.spec.layers[index]
        layer_input = cache.activations[index]
        layer_output = cache.activations[index + 1]
        if layer.kind is LayerKind.CONV:
            block = net.blocks[index]
            delta, grad_kernels, grad_bias = conv2d_backward(layer_input, net.kernels(index), delta)
            gradient[block.offset:block.bias_offset] = grad_kernels.ravel()
            gradient[block.bias_offset:block.end] = grad_bias
        elif layer.kind is LayerKind.MAXPOOL:
            delta = maxpool2x2_backward(delta, cache.masks[index])
        elif layer.kind is LayerKind.UPSAMPLE:
            delta = upsample_nn_backward(delta, layer.factor)
        elif layer.kind is LayerKind.TANH:
            delta = tanh_backward(layer_output, delta)
        else:
            delta = sigmoid_backward(layer_output, delta)
    return gradient


def one_hot(labels, num_classes):
    """[H, W] integer labels to a [K, H, W] float target."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise DataError(f"labels outside [0, {num_classes})")
    target = np.zeros((num_classes, *labels.shape), dtype=real_type)
    np.put_along_axis(target, labels[None, ...].astype(np.intp), 1.0, axis=0)
    return target


def center_crop(array, height, width):
    """Crop the last two axes of ``array`` to ``height × width`` around the center."""
    h, w = array.shape[-2:]
    if height > h or width > w:
        raise DimensionError(f"cannot crop {h}×{w} to {height}×{width}")
    top, left = (h - height) // 2, (w - width) // 2
    return array[..., top:top + height, left:left + width]


def predict(scores):
    """Index of the maximum score per pixel."""
    return np.asarray(scores).argmax(axis=0)


def build_toy_net():
    return NetworkSpec(
        input_channels=1,
        layers=(
            LayerSpec.conv(2, 7),
            LayerSpec.tanh(),
            LayerSpec.conv(3, 1),
            LayerSpec.sigmoid(),
        ),
        num_classes=3,
    )


def _check_scale(name, value, minimum):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def build_facade_net(k, l=0, num_classes=FACADE_NUM_CLASSES, input_channels=3):
    """
    Three convolutions and two fully connected (1×1) layers; ``k`` scales conv2 to k filters and
    FC1 to 12·k kernels, ``l`` repeats FC1 as a 12k→12k layer l times.

    Each repeated layer adds 144·k² + 12·k parameters, so the 37,056 per layer of a 192-kernel
    fully connected layer only holds at k = LAYER_SCALING_K (16). Layer-scaling sweeps keep k from
    their base configuration; the scale_layers preset sets it to 16.
    """
    k = _check_scale("k", k, 1)
    l = _check_scale("l", l, 0)
    fc_width = FACADE_FC_PER_K * k
    layers = [
        LayerSpec.conv(FACADE_CONV1_FILTERS, 5), LayerSpec.tanh(),
        LayerSpec.conv(k, 5), LayerSpec.tanh(),
        LayerSpec.conv(FACADE_CONV3_FILTERS, 3), LayerSpec.tanh(),
        LayerSpec.conv(fc_width, 1), LayerSpec.tanh(),
    ]
    for _ in range(l):
        layers += [LayerSpec.conv(fc_width, 1), LayerSpec.tanh()]
    layers += [LayerSpec.conv(num_classes, 1), LayerSpec.sigmoid()]
    return NetworkSpec(input_channels=input_channels, layers=tuple(layers), num_classes=num_classes)


def facade_parameter_count(k, l=0):
    """Closed form of ``count_parameters(build_facade_net(k, l))``: 1257 + 1193·k + l·(144k² + 12k)."""
    fc_width = FACADE_FC_PER_K * k
    return 1257 + 1193 * k + l * (fc_width * fc_width + fc_width)


def build_pooled_net(width=8, num_classes=FACADE_NUM_CLASSES, input_channels=3):
    """Encoder/decoder variant with a 2×2 max-pool and a nearest-neighbour up-sampling layer."""
    width = _check_scale("width", width, 1)
    return NetworkSpec(
        input_channels=input_channels,
        layers=(
            LayerSpec.conv(width, 4), LayerSpec.tanh(),
            LayerSpec.maxpool(),
            LayerSpec.conv(width, 3), LayerSpec.tanh(),
            LayerSpec.upsample(2),
            LayerSpec.conv(num_classes, 1), LayerSpec.sigmoid(),
        ),
        num_classes=num_classes,
    )
