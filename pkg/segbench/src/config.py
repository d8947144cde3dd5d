"""
Experiment configuration: one JSON document per experiment, layered over defaults and
overridden field by field from the command line.
"""

import json
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum

from .errors import ConfigError, ParameterError
from .nn_graph import build_facade_net, build_pooled_net, build_toy_net
from .optim import OptimConfig, OptimizerName


class DatasetKind(str, Enum):
    TOY = "toy"
    FACADE = "facade"
    EXTERNAL = "external"


class ArchitectureKind(str, Enum):
    TOY = "toy"
    FACADE = "facade"
    POOLED = "pooled"


class BatchMode(str, Enum):
    PER_SAMPLE = "per_sample"
    ACCUMULATE = "accumulate"


def _enum(enum_cls, value, name):
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(member.value for member in enum_cls)
        raise ConfigError(f"{name}: unknown value {value!r}; choose from {choices}") from None


def _positive(name, value, minimum=1):
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")


@dataclass(frozen=True)
class DatasetConfig:
    kind: DatasetKind = DatasetKind.TOY
    seed: int = 0
    width: int = 64
    height: int = 64
    train_images: int = 1
    test_images: int = 1
    train_dir: str | None = None
    test_dir: str | None = None
    palette: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", _enum(DatasetKind, self.kind, "dataset.kind"))
        if self.kind is DatasetKind.EXTERNAL:
            if not self.train_dir:
                raise ConfigError("dataset.train_dir is required for external datasets")
        else:
            _positive("dataset.train_images", self.train_images)
            _positive("dataset.test_images", self.test_images)


@dataclass(frozen=True)
class ArchitectureConfig:
    kind: ArchitectureKind = ArchitectureKind.TOY
    k: int = 2
    l: int = 0
    width: int = 8

    def __post_init__(self):
        object.__setattr__(self, "kind", _enum(ArchitectureKind, self.kind, "architecture.kind"))

    def build(self, num_classes, input_channels):
        if self.kind is ArchitectureKind.TOY:
            spec = build_toy_net()
            if (spec.num_classes, spec.input_channels) != (num_classes, input_channels):
                raise ConfigError(
                    f"toy architecture needs 1-channel input and 3 classes, dataset has "
                    f"{input_channels} channels and {num_classes} classes"
                )
            return spec
        if self.kind is ArchitectureKind.FACADE:
            return build_facade_net(self.k, self.l, num_classes=num_classes, input_channels=input_channels)
        return build_pooled_net(self.width, num_classes=num_classes, input_channels=input_channels)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    architecture: ArchitectureConfig = field(default_factory=ArchitectureConfig)
    optimizer: OptimizerName = OptimizerName.GD
    optim: OptimConfig = field(default_factory=OptimConfig)
    epochs: int = 10
    iterations_per_epoch: int = 2000
    batch_mode: BatchMode = BatchMode.PER_SAMPLE
    batch_size: int = 1
    repetitions: int = 1
    base_seed: int = 0
    output: str | None = None
    exclude_background: bool = False
    workers: int = 1
    patch_size: int | None = None
    divergence_threshold: float = 1e6

    def __post_init__(self):
        object.__setattr__(self, "optimizer", _enum(OptimizerName, self.optimizer, "optimizer.name"))
        object.__setattr__(self, "batch_mode", _enum(BatchMode, self.batch_mode, "batch_mode"))
        _positive("epochs", self.epochs)
        _positive("iterations_per_epoch", self.iterations_per_epoch)
        _positive("repetitions", self.repetitions)
        _positive("batch_size", self.batch_size)
        _positive("workers", self.workers)
        if self.batch_mode is BatchMode.PER_SAMPLE and self.batch_size != 1:
            raise ConfigError("batch_size must be 1 in per_sample mode")
        if self.patch_size is not None and (self.patch_size < 1 or self.patch_size % 2 == 0):
            raise ConfigError(f"patch_size must be a positive odd integer, got {self.patch_size}")
        if not self.divergence_threshold > 0:
            raise ConfigError("divergence_threshold must be > 0")

    @classmethod
    def from_dict(cls, data, defaults=None):
        defaults = defaults or cls()
        data = dict(data)
        try:
            dataset = _merge(defaults.dataset, data.pop("dataset", {}), "dataset")
            architecture = _merge(defaults.architecture, data.pop("architecture", {}), "architecture")
            optimizer_data = dict(data.pop("optimizer", {}))
            optimizer = optimizer_data.pop("name", defaults.optimizer)
            optim = _merge(defaults.optim, optimizer_data, "optimizer")
            known = {f.name for f in fields(cls)} - {"dataset", "architecture", "optimizer", "optim"}
            unknown = set(data) - known
            if unknown:
                raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
            return replace(
                defaults, dataset=dataset, architecture=architecture,
                optimizer=optimizer, optim=optim, **data,
            )
        except (ParameterError, TypeError) as e:
            raise ConfigError(str(e)) from e

    def override(self, **changes):
        """Apply CLI flags; ``None`` means the flag was not given."""
        changes = {key: value for key, value in changes.items() if value is not None}
        optim_changes = {
            key: changes.pop(key) for key in ("learning_rate", "mu", "momentum") if key in changes
        }
        try:
            optim = replace(self.optim, **optim_changes) if optim_changes else self.optim
            return replace(self, optim=optim, **changes)
        except (ParameterError, TypeError) as e:
            raise ConfigError(str(e)) from e

    def to_dict(self):
        data = asdict(self)
        optim = data.pop("optim")
        data["optimizer"] = {"name": self.optimizer.value, **optim}
        return json.loads(json.dumps(data, default=lambda value: value.value))


def _merge(base, changes, section):
    if not isinstance(changes, dict):
        raise ConfigError(f"{section} must be a JSON object")
    known = {f.name for f in fields(base)}
    unknown = set(changes) - known
    if unknown:
        raise ConfigError(f"unknown {section} keys: {', '.join(sorted(unknown))}")
    return replace(base, **changes)


def load_config(path, defaults=None):
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return ExperimentConfig.from_dict(data, defaults)
