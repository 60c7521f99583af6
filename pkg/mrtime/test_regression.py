import math

import numpy as np
import pytest

from mrtime.errors import (
    EmptyInput,
    InconsistentParameters,
    InsufficientData,
    ParameterMismatch,
    RankDeficient,
)
from mrtime.profiling import ExperimentPlan, aggregate_runs, generate_grid, run_plan
from mrtime.regression import (
    ConfigPoint,
    ExperimentRecord,
    TimeModel,
    build_design_matrix,
    column_labels,
    error_stats,
    fit,
    lse,
    predict,
)
from mrtime.workloads import SyntheticTruth, SyntheticWorkload

A_STAR = (2.0, 0.5, -0.01, 0.0002, 1.0, -0.05, 0.001)
NAMES = ("mappers", "reducers")


@pytest.fixture
def truth_model():
    return TimeModel(app="synthetic", parameter_names=NAMES, coefficients=A_STAR)


@pytest.fixture
def exact_experiments(truth_model):
    configs = generate_grid(count=20, seed=42)
    return [ExperimentRecord(c, predict(truth_model, c), app="synthetic") for c in configs]


def point(m, r):
    return ConfigPoint.of(mappers=m, reducers=r)


def assert_minimizes_lse(model, experiments, seed=100):
    """No coefficient perturbation with norm up to 0.1*|A| + 0.1 lowers the LSE."""
    best = lse(model, experiments)
    radius = 0.1 * np.linalg.norm(model.vector) + 0.1
    rng = np.random.default_rng(seed)
    for _ in range(100):
        delta = rng.normal(size=len(model.coefficients))
        delta *= rng.uniform(0, radius) / np.linalg.norm(delta)
        candidate = TimeModel(
            app=model.app,
            parameter_names=model.parameter_names,
            degree=model.degree,
            coefficients=model.vector + delta,
        )
        assert lse(candidate, experiments) >= best - 1e-9


def test_config_point():
    config = point(5, 40)
    assert config.names == NAMES
    assert config.numbers == (5, 40)
    assert config["reducers"] == 40
    assert str(config) == "mappers=5,reducers=40"
    with pytest.raises(ValueError):
        point(0, 3)
    with pytest.raises(ValueError):
        ConfigPoint((("mappers", 1), ("mappers", 2)))


def test_experiment_record_requires_positive_time():
    for value in (0.0, -1.0, math.nan, math.inf):
        with pytest.raises(ValueError):
            ExperimentRecord(point(1, 1), value)


def test_time_model_checks_coefficient_count():
    with pytest.raises(ValueError):
        TimeModel(app="x", parameter_names=NAMES, coefficients=(1.0, 2.0))


def test_design_matrix_rows():
    design, t = build_design_matrix([ExperimentRecord(point(1, 1), 2.0)], scaled=False)
    assert design.matrix.tolist() == [[1.0] * 7]
    assert t.tolist() == [2.0]

    design, _ = build_design_matrix([ExperimentRecord(point(5, 40), 2.0)], scaled=False)
    assert design.matrix.tolist() == [[1, 5, 25, 125, 40, 1600, 64000]]
    assert design.column_labels == column_labels(NAMES, 3)
    assert design.column_labels[1:4] == ("mappers", "mappers^2", "mappers^3")


def test_design_matrix_shape_and_scaling(exact_experiments):
    raw, t = build_design_matrix(exact_experiments, scaled=False)
    scaled, _ = build_design_matrix(exact_experiments)
    assert raw.matrix.shape == (20, 7)
    assert (raw.matrix[:, 0] == 1).all()
    assert len(t) == 20
    for row, experiment in zip(raw.matrix, exact_experiments):
        m, r = experiment.config.numbers
        assert row.tolist() == [1, m, m**2, m**3, r, r**2, r**3]
    assert np.abs(scaled.matrix).max(axis=0) == pytest.approx(np.ones(7))
    assert np.allclose(scaled.matrix * scaled.scale, raw.matrix)


def test_design_matrix_errors():
    with pytest.raises(EmptyInput):
        build_design_matrix([])
    mixed = [
        ExperimentRecord(point(1, 2), 1.0),
        ExperimentRecord(ConfigPoint.of(reducers=2, mappers=1), 1.0),
    ]
    with pytest.raises(InconsistentParameters):
        build_design_matrix(mixed)


def test_fit_two_point_line():
    experiments = [
        ExperimentRecord(ConfigPoint.of(mappers=1), 3.0),
        ExperimentRecord(ConfigPoint.of(mappers=2), 5.0),
    ]
    model = fit(experiments, degree=1)
    assert model.coefficients == pytest.approx((1.0, 2.0), abs=1e-12)
    assert_minimizes_lse(model, experiments)


def test_fit_recovers_known_coefficients(exact_experiments):
    model = fit(exact_experiments)
    assert model.app == "synthetic"
    assert model.parameter_names == NAMES
    for got, expected in zip(model.coefficients, A_STAR):
        assert abs(got - expected) <= 1e-6 * abs(expected)
    assert_minimizes_lse(model, exact_experiments)


def test_fit_is_permutation_invariant(exact_experiments):
    shuffled = [exact_experiments[k] for k in np.random.default_rng(3).permutation(20)]
    assert np.allclose(fit(shuffled).vector, fit(exact_experiments).vector, rtol=1e-7, atol=1e-10)


def test_fit_scaled_and_unscaled_agree(exact_experiments):
    scaled = fit(exact_experiments)
    unscaled = fit(exact_experiments, scaled=False)
    assert np.allclose(scaled.vector, unscaled.vector, rtol=1e-4, atol=1e-8)
    assert_minimizes_lse(scaled, exact_experiments, seed=1)
    assert_minimizes_lse(unscaled, exact_experiments, seed=2)


def test_fit_scaling_round_trip_single_parameter():
    experiments = [
        ExperimentRecord(ConfigPoint.of(mappers=m), 3.0 + 2.0 * m + 0.01 * (m % 3)) for m in range(1, 11)
    ]
    scaled = fit(experiments, degree=1)
    unscaled = fit(experiments, degree=1, scaled=False)
    for m in range(1, 21):
        config = ConfigPoint.of(mappers=m)
        assert predict(scaled, config) == pytest.approx(predict(unscaled, config), rel=1e-8)
    assert_minimizes_lse(scaled, experiments)


def test_fit_constant_times(exact_experiments):
    constant = [ExperimentRecord(e.config, 7.5) for e in exact_experiments]
    model = fit(constant)
    assert model.coefficients[0] == pytest.approx(7.5, abs=1e-8)
    for value in model.coefficients[1:]:
        assert abs(value) < 1e-8
    assert_minimizes_lse(model, constant)


def test_fit_needs_enough_experiments():
    experiments = [ExperimentRecord(point(m, m + 1), 1.0) for m in (1, 2, 3)]
    with pytest.raises(InsufficientData) as info:
        fit(experiments)
    assert info.value.required == 7
    assert info.value.available == 3


def test_fit_names_dependent_column():
    experiments = [ExperimentRecord(point(10, r), float(r)) for r in range(5, 25)]
    with pytest.raises(RankDeficient) as info:
        fit(experiments)
    assert info.value.label.startswith("mappers")


def test_predict(truth_model):
    constant = TimeModel(app="c", parameter_names=NAMES, coefficients=(10, 0, 0, 0, 0, 0, 0))
    assert predict(constant, point(3, 17)) == 10.0
    assert predict(truth_model, point(10, 10)) == pytest.approx(12.2, abs=1e-12)
    with pytest.raises(ParameterMismatch):
        predict(truth_model, ConfigPoint.of(mappers=10))


def test_predict_reproduces_training_times(exact_experiments):
    model = fit(exact_experiments)
    for experiment in exact_experiments:
        assert predict(model, experiment.config) == pytest.approx(experiment.exec_time_s, abs=1e-8)


def test_predict_is_deterministic(exact_experiments):
    model = fit(exact_experiments)
    for m in range(1, 61, 7):
        for r in range(1, 61, 5):
            assert predict(model, point(m, r)) == predict(model, point(m, r))


def test_lse():
    model = TimeModel(app="c", parameter_names=("mappers",), degree=1, coefficients=(0.0, 0.0))
    experiments = [
        ExperimentRecord(ConfigPoint.of(mappers=1), 3.0),
        ExperimentRecord(ConfigPoint.of(mappers=2), 4.0),
    ]
    assert lse(model, experiments) == pytest.approx(5.0)


def test_lse_of_exact_fit(exact_experiments):
    assert lse(fit(exact_experiments), exact_experiments) == pytest.approx(0.0, abs=1e-8)


def test_lse_matches_accumulation_loop(truth_model):
    rng = np.random.default_rng(50)
    experiments = [
        ExperimentRecord(point(int(m), int(r)), float(t))
        for m, r, t in zip(rng.integers(1, 50, 50), rng.integers(1, 50, 50), rng.uniform(1, 100, 50))
    ]
    total = 0.0
    for experiment in experiments:
        residual = experiment.exec_time_s - predict(truth_model, experiment.config)
        total += residual * residual
    assert lse(truth_model, experiments) == pytest.approx(math.sqrt(total), rel=1e-12)


def test_fitted_model_minimizes_lse():
    truth = SyntheticTruth(
        TimeModel(app="synthetic", parameter_names=NAMES, coefficients=A_STAR),
        noise_sigma=0.5,
        seed=9,
    )
    experiments = [
        ExperimentRecord(c, SyntheticWorkload(truth).run(c, 0)) for c in generate_grid(count=20, seed=9)
    ]
    assert_minimizes_lse(fit(experiments), experiments)


def test_error_stats_hand_case():
    model = TimeModel(app="c", parameter_names=("mappers",), degree=1, coefficients=(-4.0, 103.0))
    experiments = [
        ExperimentRecord(ConfigPoint.of(mappers=1), 100.0),
        ExperimentRecord(ConfigPoint.of(mappers=2), 200.0),
    ]
    report = error_stats(model, experiments)
    assert [row.predicted_s for row in report.rows] == [99.0, 202.0]
    assert [row.pct_error for row in report.rows] == pytest.approx([1.0, 1.0])
    assert report.mean_pct == pytest.approx(1.0)
    assert report.variance_pct == pytest.approx(0.0, abs=1e-12)


def test_error_stats_of_exact_fit(exact_experiments):
    report = error_stats(fit(exact_experiments), exact_experiments)
    assert report.mean_pct == pytest.approx(0.0, abs=1e-6)
    assert report.variance_pct == pytest.approx(0.0, abs=1e-6)


def test_error_stats_two_pass(truth_model):
    rng = np.random.default_rng(30)
    experiments = [
        ExperimentRecord(c, predict(truth_model, c) * rng.uniform(0.8, 1.2))
        for c in generate_grid(count=30, seed=30)
    ]
    report = error_stats(truth_model, experiments)
    errors = [row.pct_error for row in report.rows]
    mean = sum(errors) / len(errors)
    variance = sum((e - mean) ** 2 for e in errors) / len(errors)
    assert report.mean_pct == pytest.approx(mean, abs=1e-10)
    assert report.variance_pct == pytest.approx(variance, abs=1e-10)


def test_error_stats_empty(truth_model):
    with pytest.raises(EmptyInput):
        error_stats(truth_model, [])


def test_noisy_holdout_error_is_below_five_percent(truth_model):
    sigma = 0.02 * SyntheticTruth(truth_model).mean_value()
    workload = SyntheticWorkload(SyntheticTruth(truth_model, noise_sigma=sigma, seed=42))
    configs = generate_grid(count=30, seed=42)
    train, test = configs[:20], configs[20:]

    training = aggregate_runs(run_plan(ExperimentPlan("synthetic", train, repeats=5, seed=42), workload))
    testing = aggregate_runs(run_plan(ExperimentPlan("synthetic", test, repeats=1, seed=42), workload))

    model = fit(training)
    assert_minimizes_lse(model, training)
    report = error_stats(model, testing)
    assert report.mean_pct < 5.0
