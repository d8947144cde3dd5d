"""CSV output of per-epoch metric records and of aggregated sweep rows."""

import csv
from pathlib import Path

from .config import ArchitectureKind
from .errors import DataError, OutputError
from .metrics import MetricRecord, Phase

RECORD_HEADER = ["run_id", "optimizer", "epoch", "phase", "loss", "overall_acc", "mean_class_acc"]

SWEEP_HEADER = [
    "axis", "value", "param_count", "optimizer", "epoch", "phase", "runs", "diverged",
    "loss_mean", "loss_std", "overall_acc_mean", "overall_acc_std",
    "mean_class_acc_mean", "mean_class_acc_std", "loss_gap",
]


def format_float(value):
    if value is None:
        return ""
    return f"{value:.9g}"


def _write(path, header, rows, metadata):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            for key, value in (metadata or {}).items():
                f.write(f"# {key}={value}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e.strerror or e}") from e


def write_csv(records, path, metadata=None):
    """
    One row per record, sorted by (run_id, epoch, phase) with train before test. ``metadata``
    entries become ``# key=value`` comment lines above the header.
    """
    rows = [
        [
            record.run_id, record.optimizer, record.epoch, Phase(record.phase).value,
            format_float(record.loss), format_float(record.overall_acc),
            format_float(record.mean_class_acc),
        ]
        for record in sorted(records, key=MetricRecord.sort_key)
    ]
    _write(path, RECORD_HEADER, rows, metadata)


def read_csv(path):
    path = Path(path)
    try:
        with open(path, "r", newline="") as f:
            lines = [line for line in f if not line.startswith("#")]
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror or e}") from e
    reader = csv.DictReader(lines)
    if reader.fieldnames != RECORD_HEADER:
        raise DataError(f"{path}: unexpected header {reader.fieldnames}")
    try:
        return [
            MetricRecord(
                row["run_id"], row["optimizer"], int(row["epoch"]), Phase(row["phase"]),
                float(row["loss"]), float(row["overall_acc"]), float(row["mean_class_acc"]),
            )
            for row in reader
        ]
    except ValueError as e:
        raise DataError(f"{path}: malformed row ({e})") from e


def write_sweep_csv(rows, path, metadata=None):
    _write(
        path,
        SWEEP_HEADER,
        [
            [
                row.axis, row.value, row.param_count, row.optimizer, row.epoch, row.phase.value,
                row.runs, row.diverged,
                format_float(row.loss_mean), format_float(row.loss_std),
                format_float(row.overall_acc_mean), format_float(row.overall_acc_std),
                format_float(row.mean_class_acc_mean), format_float(row.mean_class_acc_std),
                format_float(row.loss_gap),
            ]
            for row in rows
        ],
        metadata,
    )


def experiment_metadata(cfg, **extra):
    """Comment-header fields describing how the records were produced."""
    architecture = cfg.architecture
    metadata = {
        "name": cfg.name,
        "dataset": cfg.dataset.kind.value,
        "architecture": f"{architecture.kind.value}(k={architecture.k},l={architecture.l})"
        if architecture.kind is ArchitectureKind.FACADE else architecture.kind.value,
        "optimizer": cfg.optimizer.value,
        "learning_rate": format_float(cfg.optim.learning_rate),
        "mu": format_float(cfg.optim.mu),
        "batch_mode": cfg.batch_mode.value,
        "batch_size": cfg.batch_size,
        "epochs": cfg.epochs,
        "iterations_per_epoch": cfg.iterations_per_epoch,
        "repetitions": cfg.repetitions,
        "base_seed": cfg.base_seed,
    }
    metadata.update(extra)
    return metadata
