"""
Profiling harness: experiment grids, repeated runs, aggregation and the
plan/dataset CSV files.

Random draws come from numpy's PCG64 generator seeded through SeedSequence.
The bit stream of PCG64 is fixed, but numpy only promises the output of
``Generator.choice`` and the other sampling methods within one release, so a
seed reproduces the same grid for a given numpy version.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Callable, NamedTuple, Protocol, Sequence

import numpy as np

from mrtime.errors import (
    CountExceedsLattice,
    EmptyInput,
    InconsistentParameters,
    IoError,
    MrTimeError,
    ParseError,
    UnknownWorkload,
    WorkloadFailure,
)
from mrtime.regression import CANONICAL_PARAMETERS, ConfigPoint, ExperimentRecord

logger = logging.getLogger(__name__)

DEFAULT_REPEATS = 5
DEFAULT_COUNT = 20
DEFAULT_RANGES = (("mappers", 5, 40), ("reducers", 5, 40))

PLAN_HEADER = list(CANONICAL_PARAMETERS)
DATASET_HEADER = ["app", *CANONICAL_PARAMETERS, "run", "exec_time_s"]


class Aggregation(IntEnum):
    MEAN = 0
    MEDIAN = 1


class ParamRange(NamedTuple):
    name: str
    min: int
    max: int


@dataclass(frozen=True)
class RunSample:
    config: ConfigPoint
    run_index: int
    exec_time_s: float
    app: str = ""

    def __post_init__(self):
        if self.run_index < 0:
            raise ValueError(f"run index must be >= 0, got {self.run_index}")
        if not (math.isfinite(self.exec_time_s) and self.exec_time_s > 0):
            raise ValueError(f"execution time must be positive and finite, got {self.exec_time_s}")


@dataclass(frozen=True)
class ExperimentPlan:
    app: str
    configs: tuple[ConfigPoint, ...]
    repeats: int = DEFAULT_REPEATS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "configs", tuple(self.configs))
        if not self.configs:
            raise EmptyInput("an experiment plan needs at least one configuration")
        if len(set(self.configs)) != len(self.configs):
            raise ValueError("an experiment plan cannot repeat a configuration")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.seed < 0:
            raise ValueError(f"seed must be unsigned, got {self.seed}")


class Workload(Protocol):
    """Anything that can execute one run of an application at a configuration."""

    name: str

    def run(self, config: ConfigPoint, run_index: int, seed: int | None = None) -> float:
        """Executes one run and returns its duration in seconds. ``seed`` keys any randomness."""
        ...


def generate_grid(
    param_ranges: Sequence[tuple[str, int, int]] = DEFAULT_RANGES,
    count: int = DEFAULT_COUNT,
    seed: int = 0,
) -> list[ConfigPoint]:
    """
    Draws ``count`` distinct points uniformly, without replacement, from the
    integer lattice spanned by ``param_ranges``.

    Parameters
    ----------
    param_ranges : sequence of (name, min, max)
        Inclusive integer range of every parameter, in canonical order.
    count : int
        Number of configurations to draw.
    seed : int
        Seed of the PCG64 stream; the same seed yields the same grid.

    Returns
    -------
    list of ConfigPoint
        Configurations in draw order.

    Raises
    ------
    CountExceedsLattice
        If the lattice holds fewer than ``count`` points.
    """
    ranges = [ParamRange(*r) for r in param_ranges]
    if not ranges:
        raise ValueError("at least one parameter range is required")
    for r in ranges:
        if r.min < 1 or r.max < r.min:
            raise ValueError(f"invalid range for '{r.name}': [{r.min}, {r.max}]")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")

    shape = tuple(r.max - r.min + 1 for r in ranges)
    size = math.prod(shape)
    if count > size:
        raise CountExceedsLattice(count, size)

    rng = np.random.default_rng(seed)
    picks = rng.choice(size, size=count, replace=False)
    coordinates = np.unravel_index(picks, shape)

    grid = []
    for k in range(count):
        grid.append(
            ConfigPoint(tuple((r.name, r.min + int(axis[k])) for r, axis in zip(ranges, coordinates)))
        )
    logger.debug("drew %d of %d lattice points with seed %d", count, size, seed)
    return grid


def lattice(param_ranges: Sequence[tuple[str, int, int]] = DEFAULT_RANGES) -> list[ConfigPoint]:
    """Every point of the lattice, last parameter varying fastest."""
    ranges = [ParamRange(*r) for r in param_ranges]
    axes = [np.arange(r.min, r.max + 1) for r in ranges]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    return [
        ConfigPoint(tuple((r.name, int(v)) for r, v in zip(ranges, point))) for point in points
    ]


def aggregate_runs(
    samples: Sequence[RunSample], mode: Aggregation = Aggregation.MEAN
) -> list[ExperimentRecord]:
    """
    Collapses the repeated runs of every configuration into one experiment.

    Records come out in order of first appearance of their configuration.

    Raises
    ------
    EmptyInput
        If there are no samples.
    InconsistentParameters
        If the samples belong to more than one application.
    """
    if not samples:
        raise EmptyInput("cannot aggregate zero run samples")
    if mode not in Aggregation._value2member_map_:
        raise ValueError(f"{mode} is not a valid aggregation mode.")
    apps = list(dict.fromkeys(sample.app for sample in samples))
    if len(apps) > 1:
        raise InconsistentParameters(f"run samples mix applications {apps}")

    groups: dict[ConfigPoint, list[float]] = dict()
    for sample in samples:
        groups.setdefault(sample.config, []).append(sample.exec_time_s)

    statistic = np.median if mode == Aggregation.MEDIAN else np.mean
    records = []
    for config, times in groups.items():
        values = np.array(times, dtype=np.float64)
        value = float(np.clip(statistic(values), values.min(), values.max()))
        records.append(ExperimentRecord(config=config, exec_time_s=value, app=apps[0]))
    return records


def run_plan(
    plan: ExperimentPlan,
    workload: Workload,
    progress: Callable[[int], None] | None = None,
) -> list[RunSample]:
    """
    Runs every configuration of the plan ``plan.repeats`` times, one run at a
    time, and returns the samples in execution order.

    Parameters
    ----------
    plan : ExperimentPlan
        Configurations and repeat count.
    workload : Workload
        Executes single runs; its name must equal ``plan.app``.
    progress : callable, optional
        Receives the completed percentage after every run.

    Raises
    ------
    UnknownWorkload
        If the workload does not serve ``plan.app``.
    WorkloadFailure
        If a run raises; the original diagnostic is chained.
    """
    if workload is None or getattr(workload, "name", None) != plan.app:
        raise UnknownWorkload(plan.app)

    total = len(plan.configs) * plan.repeats
    samples = []
    for config in plan.configs:
        for run_index in range(plan.repeats):
            try:
                seconds = workload.run(config, run_index, plan.seed)
                sample = RunSample(config, run_index, float(seconds), app=plan.app)
            except MrTimeError:
                raise
            except Exception as err:
                raise WorkloadFailure(
                    f"{plan.app} failed at {config} run {run_index}: {err}"
                ) from err
            samples.append(sample)
            logger.debug("%s %s run %d: %.6f s", plan.app, config, run_index, seconds)
            if progress is not None:
                progress(100 * len(samples) // total)
    return samples


def _open_for_write(path: Path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as err:
        raise IoError(path, err.strerror or str(err)) from err


def _open_for_read(path: Path):
    try:
        return open(path, "r", encoding="utf-8", errors="surrogateescape", newline="")
    except OSError as err:
        raise IoError(path, err.strerror or str(err)) from err


def format_seconds(value: float) -> str:
    """Fixed 17 significant digits: enough to read back the identical float."""
    return format(value, "#.17g")


def _parse_positive_int(path, line: int, field: str, text: str, minimum: int = 1) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ParseError(path, line, f"{field} is not an integer: {text!r}") from None
    if value < minimum:
        raise ParseError(path, line, f"{field} must be >= {minimum}, got {value}")
    return value


def _parse_seconds(path, line: int, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, line, f"exec_time_s is not a number: {text!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise ParseError(path, line, f"exec_time_s must be positive and finite, got {text}")
    return value


def _check_text(path, line: int, fields: list[str]):
    # undecodable bytes arrive as lone surrogates
    try:
        "".join(fields).encode("utf-8")
    except UnicodeEncodeError:
        raise ParseError(path, line, "not UTF-8 text") from None


def _read_rows(path: Path, header: list[str]):
    """Yields (line number, fields) for every non-blank data row."""
    with _open_for_read(path) as stream:
        reader = csv.reader(stream)
        try:
            first = next(reader, None)
            if first != header:
                raise ParseError(path, 1, "expected header '{}'".format(",".join(header)))
            for fields in reader:
                if not fields:
                    continue
                _check_text(path, reader.line_num, fields)
                if len(fields) != len(header):
                    raise ParseError(
                        path, reader.line_num, f"expected {len(header)} fields, got {len(fields)}"
                    )
                yield reader.line_num, fields
        except csv.Error as err:
            raise ParseError(path, reader.line_num, str(err)) from err


def save_dataset(samples: Sequence[RunSample], path) -> None:
    """Writes run samples as ``app,mappers,reducers,run,exec_time_s`` CSV."""
    path = Path(path)
    with _open_for_write(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(DATASET_HEADER)
        for sample in samples:
            if sample.config.names != CANONICAL_PARAMETERS:
                raise ValueError(f"dataset rows need parameters {CANONICAL_PARAMETERS}")
            writer.writerow(
                [
                    sample.app,
                    *sample.config.numbers,
                    sample.run_index,
                    format_seconds(sample.exec_time_s),
                ]
            )


def load_dataset(path) -> list[RunSample]:
    path = Path(path)
    samples = []
    for line, (app, mappers, reducers, run, seconds) in _read_rows(path, DATASET_HEADER):
        config = ConfigPoint.of(
            mappers=_parse_positive_int(path, line, "mappers", mappers),
            reducers=_parse_positive_int(path, line, "reducers", reducers),
        )
        samples.append(
            RunSample(
                config=config,
                run_index=_parse_positive_int(path, line, "run", run, minimum=0),
                exec_time_s=_parse_seconds(path, line, seconds),
                app=app,
            )
        )
    return samples


def save_plan(configs: Sequence[ConfigPoint], path) -> None:
    """Writes configurations as ``mappers,reducers`` CSV."""
    path = Path(path)
    with _open_for_write(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(PLAN_HEADER)
        for config in configs:
            writer.writerow([config[name] for name in PLAN_HEADER])


def load_plan(path) -> list[ConfigPoint]:
    path = Path(path)
    return [
        ConfigPoint.of(
            mappers=_parse_positive_int(path, line, "mappers", mappers),
            reducers=_parse_positive_int(path, line, "reducers", reducers),
        )
        for line, (mappers, reducers) in _read_rows(path, PLAN_HEADER)
    ]
