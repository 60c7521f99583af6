"""
Per-parameter polynomial model of total execution time.

The model is T = a0 + sum_i sum_d a_id * p_i^d for d = 1..degree: an intercept
plus `degree` powers of every configuration parameter, without cross terms.
Coefficients are fitted by least squares over profiled experiments.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from mrtime import linalg
from mrtime.errors import (
    EmptyInput,
    InconsistentParameters,
    InsufficientData,
    NonFiniteValue,
    ParameterMismatch,
    RankDeficient,
)

logger = logging.getLogger(__name__)

CANONICAL_PARAMETERS = ("mappers", "reducers")
DEFAULT_DEGREE = 3


@dataclass(frozen=True)
class ConfigPoint:
    """An ordered set of named positive-integer configuration values."""

    values: tuple[tuple[str, int], ...]

    def __post_init__(self):
        values = tuple((str(name), int(value)) for name, value in self.values)
        if not values:
            raise ValueError("a configuration needs at least one parameter")
        names = [name for name, _ in values]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in {names}")
        for name, value in values:
            if value < 1:
                raise ValueError(f"parameter '{name}' must be >= 1, got {value}")
        object.__setattr__(self, "values", values)

    @classmethod
    def of(cls, **values: int) -> ConfigPoint:
        return cls(tuple(values.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.values)

    @property
    def numbers(self) -> tuple[int, ...]:
        return tuple(value for _, value in self.values)

    def __getitem__(self, name: str) -> int:
        for key, value in self.values:
            if key == name:
                return value
        raise KeyError(name)

    def __str__(self):
        return ",".join(f"{name}={value}" for name, value in self.values)


@dataclass(frozen=True)
class ExperimentRecord:
    config: ConfigPoint
    exec_time_s: float
    app: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.exec_time_s) and self.exec_time_s > 0):
            raise ValueError(f"execution time must be positive and finite, got {self.exec_time_s}")


@dataclass(frozen=True)
class DesignMatrix:
    matrix: linalg.Matrix
    column_labels: tuple[str, ...]
    scale: linalg.Vector


@dataclass(frozen=True)
class TimeModel:
    """Fitted coefficients (a0, a11..a1d, ..., aN1..aNd) in unscaled feature space."""

    app: str
    parameter_names: tuple[str, ...]
    degree: int = DEFAULT_DEGREE
    coefficients: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "parameter_names", tuple(self.parameter_names))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if not self.parameter_names:
            raise ValueError("a model needs at least one parameter")
        expected = column_count(len(self.parameter_names), self.degree)
        if len(self.coefficients) != expected:
            raise ValueError(
                f"{len(self.parameter_names)} parameters of degree {self.degree} need "
                f"{expected} coefficients, got {len(self.coefficients)}"
            )
        if not all(math.isfinite(c) for c in self.coefficients):
            raise NonFiniteValue("model coefficients must be finite")

    @property
    def vector(self) -> linalg.Vector:
        return np.array(self.coefficients, dtype=np.float64)


class ErrorRow(NamedTuple):
    config: ConfigPoint
    actual_s: float
    predicted_s: float
    pct_error: float


@dataclass(frozen=True)
class ErrorReport:
    rows: tuple[ErrorRow, ...]
    mean_pct: float
    variance_pct: float


def column_count(parameters: int, degree: int) -> int:
    return 1 + degree * parameters


def column_labels(parameter_names: Sequence[str], degree: int) -> tuple[str, ...]:
    labels = ["1"]
    for name in parameter_names:
        labels.append(name)
        labels.extend(f"{name}^{d}" for d in range(2, degree + 1))
    return tuple(labels)


def feature_row(config: ConfigPoint, degree: int) -> list[float]:
    """Row [1, p1, p1^2, ..., pN^degree] of the design matrix."""
    row = [1.0]
    for value in config.numbers:
        row.extend(float(value) ** d for d in range(1, degree + 1))
    return row


def _parameter_names(experiments: Sequence[ExperimentRecord]) -> tuple[str, ...]:
    names = experiments[0].config.names
    for k, experiment in enumerate(experiments):
        if experiment.config.names != names:
            raise InconsistentParameters(
                f"experiment {k} has parameters {experiment.config.names}, expected {names}"
            )
    return names


def build_design_matrix(
    experiments: Sequence[ExperimentRecord], degree: int = DEFAULT_DEGREE, scaled: bool = True
) -> tuple[DesignMatrix, linalg.Vector]:
    """
    Forms the design matrix P and the observation vector T.

    Parameters
    ----------
    experiments : sequence of ExperimentRecord
        One record per configuration, all with the same parameter order.
    degree : int, optional
        Highest power of each parameter (default 3).
    scaled : bool, optional
        Divide every column by its largest absolute entry (1 for all-zero
        columns). The divisors are kept in ``DesignMatrix.scale``.

    Returns
    -------
    tuple
        ``(DesignMatrix, T)`` with the matrix already scaled.

    Raises
    ------
    EmptyInput
        If there are no experiments.
    InconsistentParameters
        If parameter names or their order differ between experiments.
    """
    if not experiments:
        raise EmptyInput("cannot build a design matrix from zero experiments")
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")

    names = _parameter_names(experiments)
    raw = linalg.matrix([feature_row(e.config, degree) for e in experiments])
    observations = linalg.vector([e.exec_time_s for e in experiments])

    if scaled:
        scale = np.abs(raw).max(axis=0)
        scale[scale == 0.0] = 1.0
    else:
        scale = np.ones(raw.shape[1])

    design = DesignMatrix(
        matrix=raw / scale,
        column_labels=column_labels(names, degree),
        scale=scale,
    )
    return design, observations


def fit(
    experiments: Sequence[ExperimentRecord],
    degree: int = DEFAULT_DEGREE,
    app: str | None = None,
    scaled: bool = True,
) -> TimeModel:
    """
    Fits the polynomial model by least squares.

    Raises
    ------
    InsufficientData
        If there are fewer experiments than coefficients.
    RankDeficient
        If the configurations cannot separate the coefficients, e.g. every
        experiment shares one parameter value. The error carries the label of
        the offending column.
    """
    if not experiments:
        raise EmptyInput("cannot fit a model to zero experiments")

    names = _parameter_names(experiments)
    required = column_count(len(names), degree)
    if len(experiments) < required:
        raise InsufficientData(required, len(experiments))

    design, observations = build_design_matrix(experiments, degree, scaled=scaled)
    try:
        solution = linalg.solve_least_squares(design.matrix, observations)
    except RankDeficient as err:
        raise RankDeficient(err.column, design.column_labels[err.column]) from err

    coefficients = solution / design.scale
    model = TimeModel(
        app=app if app is not None else experiments[0].app,
        parameter_names=names,
        degree=degree,
        coefficients=tuple(coefficients),
    )
    logger.debug("fitted %s over %d experiments: %s", model.app, len(experiments), coefficients)
    return model


def _check_parameters(model: TimeModel, config: ConfigPoint):
    if config.names != model.parameter_names:
        raise ParameterMismatch(
            f"configuration parameters {config.names} do not match model "
            f"parameters {model.parameter_names}"
        )


def predict(model: TimeModel, config: ConfigPoint) -> float:
    """Evaluates the model at one configuration, in seconds."""
    _check_parameters(model, config)
    total = model.coefficients[0]
    position = 1
    for value in config.numbers:
        for d in range(1, model.degree + 1):
            total += model.coefficients[position] * float(value) ** d
            position += 1
    return total


def predict_many(model: TimeModel, configs: Sequence[ConfigPoint]) -> np.ndarray:
    return np.array([predict(model, config) for config in configs], dtype=np.float64)


def lse(model: TimeModel, experiments: Sequence[ExperimentRecord]) -> float:
    """Square root of the summed squared residuals over ``experiments``."""
    actual = np.array([e.exec_time_s for e in experiments], dtype=np.float64)
    predicted = predict_many(model, [e.config for e in experiments])
    return float(np.sqrt(np.sum((actual - predicted) ** 2)))


def error_stats(model: TimeModel, experiments: Sequence[ExperimentRecord]) -> ErrorReport:
    """
    Absolute percentage prediction error per experiment plus its mean and
    population variance.
    """
    if not experiments:
        raise EmptyInput("cannot compute error statistics over zero experiments")

    rows = []
    for experiment in experiments:
        predicted = predict(model, experiment.config)
        pct = 100.0 * abs(experiment.exec_time_s - predicted) / experiment.exec_time_s
        rows.append(ErrorRow(experiment.config, experiment.exec_time_s, predicted, pct))

    errors = np.array([row.pct_error for row in rows], dtype=np.float64)
    return ErrorReport(
        rows=tuple(rows),
        mean_pct=float(np.mean(errors)),
        variance_pct=float(np.var(errors)),
    )
