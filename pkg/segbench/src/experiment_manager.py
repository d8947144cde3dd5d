"""
Seeded repetitions of a training configuration and the network-complexity sweeps built on them.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np
from toolz import groupby

from .config import ArchitectureConfig, ArchitectureKind
from .errors import BenchError, ExperimentError, ParameterError
from .metrics import Phase
from .nn_graph import count_parameters
from .optim import OptimizerName
from .training import load_datasets, run_training

logger = logging.getLogger(__name__)

SWEEP_OPTIMIZERS = (OptimizerName.GD, OptimizerName.QUICKPROP)
METRICS = ("loss", "overall_acc", "mean_class_acc")


@dataclass(frozen=True)
class AggregateRow:
    epoch: int
    phase: Phase
    runs: int
    mean: dict
    std: dict


@dataclass
class ExperimentResult:
    config: object
    runs: list
    rows: list
    diverged: int

    @property
    def records(self):
        return [record for run in self.runs for record in run.records]

    def successful_runs(self):
        return [run for run in self.runs if not run.failed]

    def final_row(self, phase):
        return next(row for row in reversed(self.rows) if row.phase is phase)


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: int
    param_count: int
    optimizer: str
    epoch: int
    phase: Phase
    runs: int
    diverged: int
    loss_mean: float
    loss_std: float
    overall_acc_mean: float
    overall_acc_std: float
    mean_class_acc_mean: float
    mean_class_acc_std: float
    loss_gap: float | None = None


@dataclass
class SweepResult:
    axis: str
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def gap(self, value, epoch=None, phase=Phase.TRAIN):
        """QuickProp minus GD mean loss for one swept value (final epoch by default)."""
        rows = [row for row in self.rows if row.value == value and row.phase is phase and row.loss_gap is not None]
        if not rows:
            return None
        epoch = epoch or max(row.epoch for row in rows)
        return next(row.loss_gap for row in rows if row.epoch == epoch)


@dataclass
class ComparisonResult:
    """Repetitions of one configuration per optimizer, paired by seed."""

    config: object
    results: dict

    def final_means(self, phase):
        return {optimizer: result.final_row(phase).mean for optimizer, result in self.results.items()}

    def paired_seeds(self, *optimizers):
        """Seeds every given optimizer finished without diverging."""
        seeds = None
        for optimizer in optimizers:
            done = {run.seed for run in self.results[optimizer].successful_runs()}
            seeds = done if seeds is None else seeds & done
        return sorted(seeds or ())

    def win_rate(self, winner, loser, phase=Phase.TRAIN, metric="loss", lower_is_better=True):
        """Share of paired seeds where ``winner`` ends the last epoch ahead of ``loser``."""
        seeds = self.paired_seeds(winner, loser)
        if not seeds:
            return None
        finals = {optimizer: _final_values(self.results[optimizer], phase, metric) for optimizer in (winner, loser)}
        sign = 1 if lower_is_better else -1
        wins = sum(sign * (finals[winner][seed] - finals[loser][seed]) < 0 for seed in seeds)
        return wins / len(seeds)


def _final_values(result, phase, metric):
    values = {}
    for run in result.successful_runs():
        records = [record for record in run.records if record.phase is phase]
        if records:
            values[run.seed] = getattr(max(records, key=lambda record: record.epoch), metric)
    return values


def aggregate(runs):
    """Mean and sample standard deviation per (epoch, phase) over the runs that did not diverge."""
    records = [
        record
        for run in sorted(runs, key=lambda run: run.run_id)
        if not run.failed
        for record in run.records
    ]
    rows = []
    for (epoch, phase), group in sorted(
        groupby(lambda record: (record.epoch, record.phase), records).items(),
        key=lambda item: (item[0][0], item[0][1].order),
    ):
        values = {name: np.array([getattr(record, name) for record in group]) for name in METRICS}
        rows.append(AggregateRow(
            epoch=epoch,
            phase=phase,
            runs=len(group),
            mean={name: float(v.mean()) for name, v in values.items()},
            std={name: float(v.std(ddof=1)) if v.size > 1 else 0.0 for name, v in values.items()},
        ))
    return rows


class ExperimentManager:
    def __init__(self, workers=1):
        self.workers = workers

    def run_repetitions(self, cfg, data=None):
        """Run ``cfg.repetitions`` trainings with seeds base_seed + r and aggregate them."""
        data = data or load_datasets(cfg.dataset)
        seeds = [cfg.base_seed + r for r in range(cfg.repetitions)]
        workers = min(self.workers, len(seeds))
        logger.info("experiment %s: %s, %d repetitions on %d workers",
                    cfg.name, cfg.optimizer.value, len(seeds), workers)

        task = partial(run_training, cfg, data=data)
        if workers > 1:
            # 1 repetition = 1 プロセス
            with ProcessPoolExecutor(max_workers=workers) as pool:
                runs = list(pool.map(task, seeds))
        else:
            runs = [task(seed) for seed in seeds]

        diverged = sum(run.failed for run in runs)
        if diverged == len(runs):
            raise ExperimentError(f"experiment {cfg.name}: all {len(runs)} runs diverged")
        if diverged:
            logger.warning("experiment %s: %d of %d runs diverged", cfg.name, diverged, len(runs))
        return ExperimentResult(cfg, runs, aggregate(runs), diverged)

    def compare_optimizers(self, cfg, optimizers=SWEEP_OPTIMIZERS):
        """Run the same repetitions (same seeds, same data) once per optimizer."""
        data = load_datasets(cfg.dataset)
        results = {}
        for optimizer in optimizers:
            results[optimizer] = self.run_repetitions(replace(cfg, optimizer=optimizer), data)
        return ComparisonResult(cfg, results)

    def _sweep(self, base_cfg, axis, values, architecture_for):
        data = load_datasets(base_cfg.dataset)
        sweep = SweepResult(axis)
        for value in values:
            architecture = architecture_for(value)
            param_count = count_parameters(architecture.build(data.palette.num_classes, data.channels))
            cells = {}
            for optimizer in SWEEP_OPTIMIZERS:
                cfg = replace(
                    base_cfg,
                    name=f"{base_cfg.name}-{axis}{value}",
                    optimizer=optimizer,
                    architecture=architecture,
                )
                try:
                    cells[optimizer] = self.run_repetitions(cfg, data)
                except BenchError as e:
                    logger.error("%s=%s %s: %s", axis, value, optimizer.value, e)
                    sweep.failures.append((value, optimizer.value, str(e)))
            sweep.rows.extend(_sweep_rows(axis, value, param_count, cells))
            logger.info("%s=%s done: %d parameters", axis, value, param_count)
        return sweep

    def experiment_scale_filters(self, base_cfg, k_list):
        if any(k < 1 for k in k_list):
            raise ParameterError(f"every k must be >= 1, got {list(k_list)}")
        l = base_cfg.architecture.l if base_cfg.architecture.kind is ArchitectureKind.FACADE else 0
        return self._sweep(
            base_cfg, "k", k_list,
            lambda k: ArchitectureConfig(ArchitectureKind.FACADE, k=k, l=l),
        )

    def experiment_scale_layers(self, base_cfg, l_list):
        if any(l < 0 for l in l_list):
            raise ParameterError(f"every l must be >= 0, got {list(l_list)}")
        k = base_cfg.architecture.k
        return self._sweep(
            base_cfg, "l", l_list,
            lambda l: ArchitectureConfig(ArchitectureKind.FACADE, k=k, l=l),
        )


def _sweep_rows(axis, value, param_count, cells):
    by_key = {
        optimizer: {(row.epoch, row.phase): row for row in result.rows}
        for optimizer, result in cells.items()
    }
    gd = by_key.get(OptimizerName.GD, {})
    quickprop = by_key.get(OptimizerName.QUICKPROP, {})
    rows = []
    for optimizer, result in cells.items():
        for row in result.rows:
            key = (row.epoch, row.phase)
            gap = None
            if key in gd and key in quickprop:
                gap = quickprop[key].mean["loss"] - gd[key].mean["loss"]
            rows.append(SweepRow(
                axis=axis,
                value=value,
                param_count=param_count,
                optimizer=optimizer.value,
                epoch=row.epoch,
                phase=row.phase,
                runs=row.runs,
                diverged=result.diverged,
                loss_mean=row.mean["loss"],
                loss_std=row.std["loss"],
                overall_acc_mean=row.mean["overall_acc"],
                overall_acc_std=row.std["overall_acc"],
                mean_class_acc_mean=row.mean["mean_class_acc"],
                mean_class_acc_std=row.std["mean_class_acc"],
                loss_gap=gap,
            ))
    return rows
